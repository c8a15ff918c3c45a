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

#include <doctest.h>

#include "core/image.hpp"
#include "test_helpers.hpp"

using namespace congeo;

TEST_CASE("png round-trip is exact for 8-bit-quantized images") {
    Image img = test::random_image(13, 21, 3, 5);
    quantize_to_8bit(img);
    std::string dir = test::scratch_dir("png");
    save_png(img, dir + "/a.png");
    Image back = load_png(dir + "/a.png");
    CHECK(back == img);
}

TEST_CASE("png: grayscale and missing-file behavior") {
    Image gray = test::random_image(6, 7, 1, 6);
    quantize_to_8bit(gray);
    std::string dir = test::scratch_dir("png_gray");
    save_png(gray, dir + "/g.png");
    CHECK(load_png(dir + "/g.png") == gray);
    CHECK_THROWS(load_png(dir + "/missing.png"));
}

TEST_CASE("raw float fixtures round-trip bit-exactly and infer channels") {
    std::string dir = test::scratch_dir("raw");
    for (int c : {1, 3, 5}) {
        Image img = test::random_image(9, 4, c, 40 + c);
        save_raw(img, dir + "/img.bin");
        Image back = load_raw(dir + "/img.bin");
        CHECK(back.height == 9);
        CHECK(back.width == 4);
        CHECK(back.channels == c);
        CHECK(back == img);
    }
}

TEST_CASE("rot90ccw moves the top-right corner to the top-left") {
    Image img(2, 3, 1);
    // 1 2 3
    // 4 5 6
    float v = 1.0f;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) img.at(y, x, 0) = v++;
    Image r = rot90ccw(img);
    REQUIRE(r.height == 3);
    REQUIRE(r.width == 2);
    // counter-clockwise:
    // 3 6
    // 2 5
    // 1 4
    CHECK(r.at(0, 0, 0) == 3.0f);
    CHECK(r.at(0, 1, 0) == 6.0f);
    CHECK(r.at(1, 0, 0) == 2.0f);
    CHECK(r.at(2, 0, 0) == 1.0f);
    CHECK(r.at(2, 1, 0) == 4.0f);
}
