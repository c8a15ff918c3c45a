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

#include "core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace congeo {

Image rot90ccw(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                out.at(y, x, c) = img.at(x, img.width - 1 - y, c);
            }
        }
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t to_byte(float v) {
    float s = std::clamp(v, 0.0f, 1.0f) * 255.0f;
    return static_cast<uint8_t>(std::lround(s));
}

}  // namespace

void save_png(const Image& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3 && img.channels != 4)
        throw std::invalid_argument("save_png: unsupported channel count " + std::to_string(img.channels));
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("save_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: write failed for " + path);
    }
    png_init_io(png, fp.get());

    int color_type = img.channels == 1   ? PNG_COLOR_TYPE_GRAY
                     : img.channels == 3 ? PNG_COLOR_TYPE_RGB
                                         : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<size_t>(x) * img.channels + c] = to_byte(img.at(y, x, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("load_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: read failed for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    Image img(static_cast<int>(h), static_cast<int>(w), channels);
    std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(static_cast<int>(y), static_cast<int>(x), c) =
                    static_cast<float>(row[static_cast<size_t>(x) * channels + c]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_raw(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_raw: cannot open " + path);
    uint32_t h = static_cast<uint32_t>(img.height);
    uint32_t w = static_cast<uint32_t>(img.width);
    // Header is H, W as little-endian u32; channel count is recovered from size.
    char header[8];
    for (int i = 0; i < 4; ++i) header[i] = static_cast<char>((h >> (8 * i)) & 0xff);
    for (int i = 0; i < 4; ++i) header[4 + i] = static_cast<char>((w >> (8 * i)) & 0xff);
    out.write(header, 8);
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
    if (!out) throw std::runtime_error("save_raw: write failed for " + path);
}

Image load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("load_raw: cannot open " + path);
    auto size = static_cast<size_t>(in.tellg());
    if (size < 8) throw std::runtime_error("load_raw: truncated header in " + path);
    in.seekg(0);
    char header[8];
    in.read(header, 8);
    auto u32 = [](const char* p) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    };
    uint32_t h = u32(header), w = u32(header + 4);
    if (h == 0 || w == 0) throw std::runtime_error("load_raw: zero dimension in " + path);
    size_t payload = size - 8;
    size_t plane = static_cast<size_t>(h) * w * sizeof(float);
    if (plane == 0 || payload % plane != 0)
        throw std::runtime_error("load_raw: size does not match header in " + path);
    int channels = static_cast<int>(payload / plane);
    Image img(static_cast<int>(h), static_cast<int>(w), channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(payload));
    if (!in) throw std::runtime_error("load_raw: read failed for " + path);
    return img;
}

void quantize_to_8bit(Image& img) {
    for (float& v : img.pixels) v = static_cast<float>(to_byte(v)) / 255.0f;
}

}  // namespace congeo
