// Copyright 2026 the congeo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>

#include "core/image.hpp"
#include "core/losses.hpp"
#include "core/rng.hpp"

namespace congeo::test {

inline Image random_image(int h, int w, int c, uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, c);
    for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
    return img;
}

inline Panorama random_panorama(int h, int w, uint64_t seed) {
    return Panorama(random_image(h, w, 3, seed));
}

inline EmbeddingBatch random_unit_batch(int n, int d, uint64_t seed) {
    Rng rng(seed);
    EmbeddingBatch m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = rng.gaussian();
        m.row(i) /= m.row(i).norm();
    }
    return m;
}

// Scratch directory under the system temp root, unique per tag.
inline std::string scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("congeo_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace congeo::test
