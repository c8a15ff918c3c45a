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

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace congeo {

/// Single-file container: a JSON metadata block plus named float32 arrays.
/// Used for checkpoints, training states and embedding dumps. The version
/// field in the header is mandatory and checked on load.
struct Archive {
    static constexpr uint32_t kVersion = 1;

    nlohmann::ordered_json meta;
    std::vector<std::pair<std::string, Eigen::MatrixXf>> arrays;

    void add(const std::string& name, const Eigen::MatrixXf& m) { arrays.emplace_back(name, m); }
    const Eigen::MatrixXf* find(const std::string& name) const;

    void save(const std::string& path) const;
    static Archive load(const std::string& path);
};

}  // namespace congeo
