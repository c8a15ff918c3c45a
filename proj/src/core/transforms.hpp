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

#include <cstdint>
#include <utility>

#include "core/image.hpp"

namespace congeo {

/// Orientation angle theta and field-of-view angle alpha describing one
/// ground-view variation. theta in [0, 360), alpha in (0, 360].
struct TransformSpec {
    double theta_deg = 0.0;
    double alpha_deg = 360.0;
    bool pad_to_full = false;
};

enum class PerturbationKind { RandomFoV, Zoom, GaussianNoise, MotionBlur };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::Zoom;
    double zoom_ratio = 1.0;       // Zoom: in [0.5, 2.0]
    int severity = 1;              // GaussianNoise / MotionBlur: in {1..5}
    double fov_lo_deg = 70.0;      // RandomFoV: range subset of (0, 360]
    double fov_hi_deg = 360.0;
    bool pad_to_full = false;      // RandomFoV: pad crops back to full width
};

/// Number of columns a rotation by theta_deg corresponds to on a width-w grid,
/// quantized round-half-up. theta is normalized modulo 360 first.
int shift_columns(int width, double theta_deg);

/// Crop width for a field of view of alpha_deg on a width-w panorama,
/// round-half-up and clamped to at least one column.
int fov_width(int width, double alpha_deg);

/// Roll columns left by shift_columns(W, theta) with wrap-around; same shape.
/// north_column is carried along so a full wrap restores the input exactly.
Panorama cyclic_shift(const Panorama& pano, double theta_deg);

/// Keep fov_width(W, alpha) columns centered on the current center column.
/// With pad_to_full, the crop is zero-filled symmetrically back to width W.
Panorama fov_crop(const Panorama& pano, double alpha_deg, bool pad_to_full);

/// Shift by theta, then crop to alpha. Definitionally equal to
/// fov_crop(cyclic_shift(pano, theta), alpha, pad).
Panorama apply_ground_transform(const Panorama& pano, const TransformSpec& spec);

/// Rotate the aerial by a quarter-turn multiple (counter-clockwise as
/// displayed) and shift the panorama by the same angle, preserving the
/// cross-view azimuth correspondence. angle must be 90, 180 or 270.
std::pair<Aerial, Panorama> aerial_rotate_with_shift(const Aerial& aerial, const Panorama& pano,
                                                     int angle_deg);

/// Evaluation-time corruptions; pure function of (input, spec, seed).
Panorama perturb(const Panorama& pano, const PerturbationSpec& spec, uint64_t seed);

/// Unwrap a square aerial image into a panorama-like strip: image center maps
/// to the bottom row, radius to height, azimuth to width (North at column
/// out_w/2, matching the Panorama convention). Bilinear sampling.
Panorama polar_transform(const Aerial& aerial, int out_h, int out_w);

}  // namespace congeo
