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
#include <stdexcept>
#include <string>
#include <vector>

namespace congeo {

/// Dense H x W x C pixel grid, float values, interleaved channels, row-major.
/// Nominal pixel range is [0, 1]; operations that need a dynamic range assume it.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          pixels(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("Image: non-positive shape");
    }

    float& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    bool operator==(const Image& o) const { return same_shape(o) && pixels == o.pixels; }
};

/// Ground-level view. The width spans 360 degrees of azimuth with wrap-around;
/// column -> azimuth is linear, with geographic North at north_column (default W/2).
struct Panorama {
    Image image;
    int north_column = 0;

    Panorama() = default;
    explicit Panorama(Image img) : image(std::move(img)), north_column(image.width / 2) {}
    Panorama(Image img, int north) : image(std::move(img)), north_column(north) {}

    int width() const { return image.width; }
    bool operator==(const Panorama& o) const {
        return north_column == o.north_column && image == o.image;
    }
};

/// Overhead view; always square.
struct Aerial {
    Image image;

    Aerial() = default;
    explicit Aerial(Image img) : image(std::move(img)) {
        if (image.height != image.width) throw std::invalid_argument("Aerial: image must be square");
    }

    int size() const { return image.height; }
    bool operator==(const Aerial& o) const { return image == o.image; }
};

/// Quarter-turn rotation, counter-clockwise as displayed (row 0 on top).
Image rot90ccw(const Image& img);

/// PNG I/O. Pixels are stored as 8-bit samples; values are clamped to [0,1]
/// and scaled by 255 on write, divided by 255 on read. 1, 3 and 4 channels.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

/// Raw float fixture format: u32 height, u32 width (little-endian), then
/// float32 pixel data row-major. Channel count is inferred from the file size.
void save_raw(const Image& img, const std::string& path);
Image load_raw(const std::string& path);

/// Snap every value to the nearest 1/255 step (makes PNG round-trips exact).
void quantize_to_8bit(Image& img);

}  // namespace congeo
