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

#include "core/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace congeo {

namespace {

double normalize_angle(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0) a += 360.0;
    return a;
}

int mod_wrap(int x, int m) {
    int r = x % m;
    return r < 0 ? r + m : r;
}

// Bilinear sample with zero outside the grid.
float sample_bilinear(const Image& img, double y, double x, int c) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    float acc = 0.0f;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) continue;
            double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            acc += static_cast<float>(w) * img.at(yy, xx, c);
        }
    }
    return acc;
}

}  // namespace

int shift_columns(int width, double theta_deg) {
    double a = normalize_angle(theta_deg);
    int s = static_cast<int>(std::floor(width * a / 360.0 + 0.5));
    return mod_wrap(s, width);
}

int fov_width(int width, double alpha_deg) {
    int w = static_cast<int>(std::floor(width * alpha_deg / 360.0 + 0.5));
    return std::max(1, w);
}

Panorama cyclic_shift(const Panorama& pano, double theta_deg) {
    const Image& src = pano.image;
    int shift = shift_columns(src.width, theta_deg);
    Image out(src.height, src.width, src.channels);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            int sx = mod_wrap(x + shift, src.width);
            for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = src.at(y, sx, c);
        }
    }
    return Panorama(std::move(out), mod_wrap(pano.north_column - shift, src.width));
}

Panorama fov_crop(const Panorama& pano, double alpha_deg, bool pad_to_full) {
    if (!(alpha_deg > 0.0) || alpha_deg > 360.0)
        throw std::invalid_argument("fov_crop: alpha_deg must be in (0, 360], got " +
                                    std::to_string(alpha_deg));
    const Image& src = pano.image;
    int w = fov_width(src.width, alpha_deg);
    if (w == src.width && !pad_to_full) return pano;

    int start = (src.width - w) / 2;  // centered; ties resolved toward the left
    if (!pad_to_full) {
        Image out(src.height, w, src.channels);
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = src.at(y, start + x, c);
        // north_column is azimuth bookkeeping for full-width panoramas; after a
        // crop it is kept in crop-relative coordinates and may fall outside.
        return Panorama(std::move(out), pano.north_column - start);
    }
    Image out(src.height, src.width, src.channels, 0.0f);
    int pad_left = (src.width - w) / 2;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < src.channels; ++c)
                out.at(y, pad_left + x, c) = src.at(y, start + x, c);
    return Panorama(std::move(out), pano.north_column - start + pad_left);
}

Panorama apply_ground_transform(const Panorama& pano, const TransformSpec& spec) {
    return fov_crop(cyclic_shift(pano, spec.theta_deg), spec.alpha_deg, spec.pad_to_full);
}

std::pair<Aerial, Panorama> aerial_rotate_with_shift(const Aerial& aerial, const Panorama& pano,
                                                     int angle_deg) {
    if (angle_deg != 90 && angle_deg != 180 && angle_deg != 270)
        throw std::invalid_argument("aerial_rotate_with_shift: angle must be 90, 180 or 270, got " +
                                    std::to_string(angle_deg));
    Image rotated = aerial.image;
    for (int k = 0; k < angle_deg / 90; ++k) rotated = rot90ccw(rotated);
    return {Aerial(std::move(rotated)), cyclic_shift(pano, static_cast<double>(angle_deg))};
}

namespace {

Panorama zoom(const Panorama& pano, double ratio) {
    if (ratio < 0.5 || ratio > 2.0)
        throw std::invalid_argument("perturb: zoom ratio must be in [0.5, 2.0], got " +
                                    std::to_string(ratio));
    const Image& src = pano.image;
    if (ratio == 1.0) return pano;

    int rh = std::max(1, static_cast<int>(std::lround(src.height * ratio)));
    int rw = std::max(1, static_cast<int>(std::lround(src.width * ratio)));
    Image resized(rh, rw, src.channels);
    double sy = static_cast<double>(src.height) / rh;
    double sx = static_cast<double>(src.width) / rw;
    for (int y = 0; y < rh; ++y) {
        double yy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < rw; ++x) {
            double xx = (x + 0.5) * sx - 0.5;
            for (int c = 0; c < src.channels; ++c)
                resized.at(y, x, c) = sample_bilinear(src, yy, xx, c);
        }
    }
    // Back to the original shape about the center: crop when zoomed in,
    // zero-pad the border when zoomed out.
    Image out(src.height, src.width, src.channels, 0.0f);
    int oy = (rh - src.height) / 2;
    int ox = (rw - src.width) / 2;
    for (int y = 0; y < src.height; ++y) {
        int sy2 = y + oy;
        if (sy2 < 0 || sy2 >= rh) continue;
        for (int x = 0; x < src.width; ++x) {
            int sx2 = x + ox;
            if (sx2 < 0 || sx2 >= rw) continue;
            for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = resized.at(sy2, sx2, c);
        }
    }
    return Panorama(std::move(out), pano.north_column);
}

// Severity scales on the nominal [0,1] pixel range.
constexpr double kNoiseStd[5] = {0.04, 0.08, 0.12, 0.18, 0.26};
constexpr int kBlurLength[5] = {3, 5, 7, 9, 15};

int check_severity(int severity) {
    if (severity < 1 || severity > 5)
        throw std::invalid_argument("perturb: severity must be in {1..5}, got " +
                                    std::to_string(severity));
    return severity;
}

Panorama gaussian_noise(const Panorama& pano, int severity, uint64_t seed) {
    double std_dev = kNoiseStd[check_severity(severity) - 1];
    Rng rng(seed);
    Image out = pano.image;
    for (float& v : out.pixels) v += static_cast<float>(std_dev * rng.gaussian());
    return Panorama(std::move(out), pano.north_column);
}

Panorama motion_blur(const Panorama& pano, int severity) {
    int len = kBlurLength[check_severity(severity) - 1];
    const Image& src = pano.image;
    Image out(src.height, src.width, src.channels);
    int half = len / 2;
    float inv = 1.0f / static_cast<float>(len);
    // Horizontal kernel; columns wrap since panoramas are azimuth-periodic.
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            for (int c = 0; c < src.channels; ++c) {
                float acc = 0.0f;
                for (int k = -half; k <= half; ++k) acc += src.at(y, mod_wrap(x + k, src.width), c);
                out.at(y, x, c) = acc * inv;
            }
        }
    }
    return Panorama(std::move(out), pano.north_column);
}

}  // namespace

Panorama perturb(const Panorama& pano, const PerturbationSpec& spec, uint64_t seed) {
    switch (spec.kind) {
        case PerturbationKind::Zoom:
            return zoom(pano, spec.zoom_ratio);
        case PerturbationKind::GaussianNoise:
            return gaussian_noise(pano, spec.severity, seed);
        case PerturbationKind::MotionBlur:
            return motion_blur(pano, spec.severity);
        case PerturbationKind::RandomFoV: {
            if (!(spec.fov_lo_deg > 0.0) || spec.fov_hi_deg > 360.0 ||
                spec.fov_lo_deg > spec.fov_hi_deg)
                throw std::invalid_argument("perturb: FoV range must be within (0, 360]");
            Rng rng(seed);
            double alpha = rng.uniform(spec.fov_lo_deg, spec.fov_hi_deg);
            return fov_crop(pano, alpha, spec.pad_to_full);
        }
    }
    throw std::invalid_argument("perturb: unknown kind");
}

Panorama polar_transform(const Aerial& aerial, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("polar_transform: non-positive output shape");
    const Image& src = aerial.image;
    Image out(out_h, out_w, src.channels);
    double cx = (src.width - 1) / 2.0;
    double cy = (src.height - 1) / 2.0;
    double r_max = (std::min(src.width, src.height) - 1) / 2.0;
    for (int i = 0; i < out_h; ++i) {
        // Bottom row is the image center, top row the outer radius.
        double r = out_h == 1 ? 0.0 : r_max * (out_h - 1 - i) / (out_h - 1.0);
        for (int j = 0; j < out_w; ++j) {
            // Column -> azimuth with North at out_w/2, clockwise toward East.
            double az = (j - out_w / 2.0) * (2.0 * 3.14159265358979323846 / out_w);
            double x = cx + r * std::sin(az);
            double y = cy - r * std::cos(az);
            for (int c = 0; c < src.channels; ++c) out.at(i, j, c) = sample_bilinear(src, y, x, c);
        }
    }
    return Panorama(std::move(out), out_w / 2);
}

}  // namespace congeo
