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

#include <cmath>

#include "core/transforms.hpp"
#include "test_helpers.hpp"

using namespace congeo;

TEST_CASE("cyclic_shift: zero angle is the identity") {
    Panorama p = test::random_panorama(8, 64, 1);
    Panorama out = cyclic_shift(p, 0.0);
    CHECK(out == p);
}

TEST_CASE("cyclic_shift: one degree per column on a 360-wide panorama") {
    Panorama p = test::random_panorama(4, 360, 2);
    Panorama out = cyclic_shift(p, 90.0);
    for (int y = 0; y < 4; ++y)
        for (int ch = 0; ch < p.image.channels; ++ch)
            CHECK(out.image.at(y, 0, ch) == p.image.at(y, 90, ch));
}

TEST_CASE("cyclic_shift: 45 then 315 degrees restores a 64-wide panorama exactly") {
    Panorama p = test::random_panorama(6, 64, 3);
    Panorama out = cyclic_shift(cyclic_shift(p, 45.0), 315.0);
    CHECK(out == p);
}

TEST_CASE("cyclic_shift: composition law on the column grid") {
    // Exact whenever both angles are integer multiples of 360/W.
    const int w = 48;
    Panorama p = test::random_panorama(5, w, 4);
    const double unit = 360.0 / w;
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        double a = unit * static_cast<double>(rng.uniform_index(w));
        double b = unit * static_cast<double>(rng.uniform_index(w));
        Panorama lhs = cyclic_shift(cyclic_shift(p, a), b);
        Panorama rhs = cyclic_shift(p, std::fmod(a + b, 360.0));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("fov_crop: full field of view is the identity when not padding") {
    Panorama p = test::random_panorama(8, 32, 5);
    CHECK(fov_crop(p, 360.0, false) == p);
}

TEST_CASE("fov_crop: width follows round(W * alpha / 360)") {
    Panorama p = test::random_panorama(4, 768, 6);
    CHECK(fov_crop(p, 180.0, false).image.width == 384);

    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        int w = 16 + 4 * static_cast<int>(rng.uniform_index(200));
        double alpha = rng.uniform(1.0, 360.0);
        int expect = std::max(1, static_cast<int>(std::floor(w * alpha / 360.0 + 0.5)));
        Panorama q = test::random_panorama(2, w, 100 + trial);
        CHECK(fov_crop(q, alpha, false).image.width == expect);
    }
}

TEST_CASE("fov_crop: padded crop keeps the content centered, zeros elsewhere") {
    // round(768 * 90 / 360) = 192 content columns, so 288 zero columns a side.
    Panorama p = test::random_panorama(4, 768, 8);
    Panorama out = fov_crop(p, 90.0, true);
    REQUIRE(out.image.width == 768);
    const int content = 192, pad = (768 - content) / 2;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 768; ++x)
            for (int c = 0; c < 3; ++c) {
                if (x < pad || x >= pad + content) {
                    CHECK(out.image.at(y, x, c) == 0.0f);
                } else {
                    CHECK(out.image.at(y, x, c) == p.image.at(y, x, c));
                }
            }
}

TEST_CASE("fov_crop: rejects out-of-range angles") {
    Panorama p = test::random_panorama(4, 32, 9);
    CHECK_THROWS_AS(fov_crop(p, 0.0, false), std::invalid_argument);
    CHECK_THROWS_AS(fov_crop(p, -10.0, false), std::invalid_argument);
    CHECK_THROWS_AS(fov_crop(p, 360.5, false), std::invalid_argument);
}

TEST_CASE("apply_ground_transform: identity spec") {
    Panorama p = test::random_panorama(8, 64, 10);
    CHECK(apply_ground_transform(p, {0.0, 360.0, false}) == p);
}

TEST_CASE("apply_ground_transform: back hemisphere of a 360-wide panorama") {
    Panorama p = test::random_panorama(4, 360, 12);
    Panorama out = apply_ground_transform(p, {180.0, 180.0, false});
    REQUIRE(out.image.width == 180);
    // Shift by 180 then center-crop 180: output column j is input column (270 + j) mod 360.
    for (int y = 0; y < 4; ++y)
        for (int j = 0; j < 180; ++j)
            for (int c = 0; c < 3; ++c)
                CHECK(out.image.at(y, j, c) == p.image.at(y, (270 + j) % 360, c));
}

TEST_CASE("apply_ground_transform: equals shift followed by crop") {
    Panorama p = test::random_panorama(6, 128, 13);
    TransformSpec spec{90.0, 90.0, false};
    Panorama composed = apply_ground_transform(p, spec);
    Panorama manual = fov_crop(cyclic_shift(p, 90.0), 90.0, false);
    CHECK(composed == manual);
}

TEST_CASE("apply_ground_transform: pure shift when alpha is 360") {
    Panorama p = test::random_panorama(6, 96, 14);
    for (double theta : {22.5, 90.0, 275.0})
        CHECK(apply_ground_transform(p, {theta, 360.0, false}) == cyclic_shift(p, theta));
}

TEST_CASE("aerial_rotate_with_shift: involution and group closure") {
    Aerial a(test::random_image(32, 32, 3, 20));
    Panorama p = test::random_panorama(8, 64, 21);

    auto [a180, p180] = aerial_rotate_with_shift(a, p, 180);
    auto [a360, p360] = aerial_rotate_with_shift(a180, p180, 180);
    CHECK(a360 == a);
    CHECK(p360 == p);

    auto [a270, p270] = aerial_rotate_with_shift(a, p, 270);
    auto [back_a, back_p] = aerial_rotate_with_shift(a270, p270, 90);
    CHECK(back_a == a);
    CHECK(back_p == p);

    auto cur_a = a;
    auto cur_p = p;
    for (int i = 0; i < 4; ++i) std::tie(cur_a, cur_p) = aerial_rotate_with_shift(cur_a, cur_p, 90);
    CHECK(cur_a == a);
    CHECK(cur_p == p);
}

TEST_CASE("aerial_rotate_with_shift: 90 degrees rolls the panorama a quarter width") {
    Aerial a(test::random_image(16, 16, 3, 22));
    Panorama p = test::random_panorama(4, 64, 23);
    auto [ra, rp] = aerial_rotate_with_shift(a, p, 90);
    CHECK(rp == cyclic_shift(p, 90.0));
    for (int y = 0; y < 4; ++y)
        for (int c = 0; c < 3; ++c) CHECK(rp.image.at(y, 0, c) == p.image.at(y, 16, c));
    CHECK(ra.image == rot90ccw(a.image));
    CHECK_THROWS_AS(aerial_rotate_with_shift(a, p, 45), std::invalid_argument);
}

TEST_CASE("perturb: unit zoom is the identity") {
    Panorama p = test::random_panorama(16, 32, 30);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Zoom;
    spec.zoom_ratio = 1.0;
    CHECK(perturb(p, spec, 123) == p);
}

TEST_CASE("perturb: zoom rejects out-of-range ratios") {
    Panorama p = test::random_panorama(8, 16, 31);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Zoom;
    spec.zoom_ratio = 2.5;
    CHECK_THROWS_AS(perturb(p, spec, 0), std::invalid_argument);
    spec.zoom_ratio = 0.4;
    CHECK_THROWS_AS(perturb(p, spec, 0), std::invalid_argument);
}

TEST_CASE("perturb: gaussian noise is deterministic in the seed") {
    Panorama p = test::random_panorama(8, 32, 32);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::GaussianNoise;
    spec.severity = 5;
    Panorama a = perturb(p, spec, 99);
    Panorama b = perturb(p, spec, 99);
    CHECK(a == b);
    Panorama c = perturb(p, spec, 100);
    CHECK_FALSE(a == c);
    spec.severity = 6;
    CHECK_THROWS_AS(perturb(p, spec, 0), std::invalid_argument);
}

TEST_CASE("perturb: degenerate random FoV range equals a plain crop") {
    Panorama p = test::random_panorama(8, 64, 33);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::RandomFoV;
    spec.fov_lo_deg = 90.0;
    spec.fov_hi_deg = 90.0;
    CHECK(perturb(p, spec, 7) == fov_crop(p, 90.0, false));
}

TEST_CASE("perturb: motion blur keeps constant panoramas constant") {
    Panorama p(Image(8, 32, 3, 0.25f));
    PerturbationSpec spec;
    spec.kind = PerturbationKind::MotionBlur;
    spec.severity = 3;
    Panorama out = perturb(p, spec, 0);
    for (float v : out.image.pixels) CHECK(v == doctest::Approx(0.25f).epsilon(1e-6));
}

TEST_CASE("polar_transform: constant aerial stays constant") {
    Aerial a(Image(32, 32, 3, 0.6f));
    Panorama out = polar_transform(a, 16, 64);
    for (float v : out.image.pixels) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}

TEST_CASE("polar_transform: the image center maps to the bottom row") {
    // Odd size so the center is a single pixel; r = 0 samples it exactly.
    Image img(33, 33, 1, 0.0f);
    img.at(16, 16, 0) = 1.0f;
    Panorama out = polar_transform(Aerial(img), 16, 64);
    for (int j = 0; j < 64; ++j) CHECK(out.image.at(15, j, 0) == doctest::Approx(1.0f));
    for (int j = 0; j < 64; ++j) CHECK(out.image.at(0, j, 0) == doctest::Approx(0.0f));
}

TEST_CASE("polar_transform: aerial rotation becomes a cyclic shift") {
    Aerial a(test::random_image(33, 33, 3, 40));
    Panorama straight = polar_transform(a, 16, 64);
    Panorama rotated = polar_transform(Aerial(rot90ccw(a.image)), 16, 64);
    Panorama expect = cyclic_shift(straight, 90.0);
    double err = 0.0;
    for (size_t i = 0; i < expect.image.pixels.size(); ++i)
        err += std::abs(expect.image.pixels[i] - rotated.image.pixels[i]);
    err /= static_cast<double>(expect.image.pixels.size());
    CHECK(err <= 2.0 / 255.0);
}
