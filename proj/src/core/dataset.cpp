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

#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace congeo {

namespace fs = std::filesystem;

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split: " + s);
}

Panorama LocationRecord::load_ground() const {
    if (ground) return *ground;
    return Panorama(load_png(ground_path));
}

Aerial LocationRecord::load_aerial() const {
    if (aerial) return *aerial;
    return Aerial(load_png(aerial_path));
}

void SyntheticSpec::validate() const {
    if (n_locations < 2) throw std::invalid_argument("synthetic: n_locations must be >= 2");
    if (pano_w % 4 != 0) throw std::invalid_argument("synthetic: pano width must be divisible by 4");
    if (pano_h < 8 || pano_w < 16) throw std::invalid_argument("synthetic: panorama too small");
    if (aerial_size < 16) throw std::invalid_argument("synthetic: aerial size too small");
    if (shortcut_strength < 0.0 || shortcut_strength > 1.0)
        throw std::invalid_argument("synthetic: shortcut_strength must be in [0, 1]");
    if (signature_channels < 1 || signature_channels > 8)
        throw std::invalid_argument("synthetic: signature_channels must be in [1, 8]");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Color {
    float r, g, b;
};

// Fixed cross-view appearance map applied to palette colors in the ground
// view. The pairing stays learnable (the map is linear) while the raw color
// statistics of the two views stay decorrelated, keeping an untrained
// encoder at chance.
Color ground_appearance(const Color& c) {
    return {0.10f + 0.20f * c.r + 0.65f * c.g,
            0.10f + 0.65f * c.b + 0.20f * c.g,
            0.10f + 0.65f * c.r + 0.20f * c.b};
}

void blend(Image& img, int y, int x, const Color& c, float alpha) {
    img.at(y, x, 0) += alpha * (c.r - img.at(y, x, 0));
    img.at(y, x, 1) += alpha * (c.g - img.at(y, x, 1));
    img.at(y, x, 2) += alpha * (c.b - img.at(y, x, 2));
}

double wrap_deg(double a) {
    double r = std::fmod(a, 360.0);
    return r < 0 ? r + 360.0 : r;
}

double ang_dist(double a, double b) {
    double d = std::abs(wrap_deg(a) - wrap_deg(b));
    return std::min(d, 360.0 - d);
}

struct LocationLatent {
    std::vector<Color> palette;
    std::vector<int> band_color;       // palette index per band
    std::vector<double> band_azimuth;  // degrees, 2K bands around the circle
    std::vector<double> band_sigma;    // gaussian profile width, degrees
    std::vector<float> band_alpha;
    struct Blob {
        double x, y, r;
        int color;
    };
    std::vector<Blob> blobs;
    double road_dir_aerial = 0.0;  // degrees, mod 180
    double road_dir_ground = 0.0;
};

float channel_spread(const Color& c) {
    return std::max({c.r, c.g, c.b}) - std::min({c.r, c.g, c.b});
}

LocationLatent draw_latent(const SyntheticSpec& spec, Rng& rng) {
    LocationLatent lat;
    const int k = spec.signature_channels;
    for (int i = 0; i < k; ++i) {
        // Palette colors stay clearly saturated in both views so nothing but
        // the road ever looks road-like (bright and unsaturated).
        Color c;
        do {
            c = {static_cast<float>(rng.uniform(0.15, 0.85)),
                 static_cast<float>(rng.uniform(0.15, 0.85)),
                 static_cast<float>(rng.uniform(0.15, 0.85))};
        } while (channel_spread(c) < 0.25f || channel_spread(ground_appearance(c)) < 0.2f);
        lat.palette.push_back(c);
    }
    const int bands = 2 * k;
    const double slot = 360.0 / bands;
    for (int j = 0; j < bands; ++j) {
        lat.band_color.push_back(j % k);
        lat.band_azimuth.push_back(wrap_deg((j + 0.5) * slot + rng.uniform(-slot / 4, slot / 4)));
        lat.band_sigma.push_back(rng.uniform(5.0, 9.0));
        lat.band_alpha.push_back(static_cast<float>(rng.uniform(0.55, 0.8)));
    }
    const double s = spec.aerial_size;
    for (int j = 0; j < bands; ++j) {
        double az = rng.uniform(0.0, 360.0) * kPi / 180.0;
        double rad = rng.uniform(0.16, 0.42) * s;
        lat.blobs.push_back({s / 2.0 + rad * std::sin(az), s / 2.0 - rad * std::cos(az),
                             rng.uniform(0.05, 0.11) * s, j % k});
    }
    return lat;
}

const Color kRoadColor = {0.88f, 0.88f, 0.90f};

Panorama render_panorama(const SyntheticSpec& spec, const LocationLatent& lat, Rng& rng) {
    const int h = spec.pano_h, w = spec.pano_w;
    Image img(h, w, 3);
    const int horizon = h / 2;
    // Fixed sky and ground base shades; identical across locations.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (y < horizon) {
                float t = static_cast<float>(y) / horizon;
                img.at(y, x, 0) = 0.55f + 0.20f * t;
                img.at(y, x, 1) = 0.68f + 0.14f * t;
                img.at(y, x, 2) = 0.85f + 0.07f * t;
            } else {
                float t = static_cast<float>(y - horizon) / (h - horizon);
                img.at(y, x, 0) = 0.30f - 0.06f * t;
                img.at(y, x, 1) = 0.28f - 0.06f * t;
                img.at(y, x, 2) = 0.26f - 0.05f * t;
            }
        }
    }
    // Column x sits at azimuth (x - W/2) * 360 / W, North at W/2; wrap-aware
    // gaussian profiles keep column 0 adjacent to column W-1.
    auto azimuth_of = [&](int x) { return (x - w / 2.0) * 360.0 / w; };

    // Identity signature: palette bands on the horizon strip.
    int band_top = horizon, band_bot = horizon + (h - horizon) / 2;
    for (size_t j = 0; j < lat.band_azimuth.size(); ++j) {
        Color c = ground_appearance(lat.palette[lat.band_color[j]]);
        for (int x = 0; x < w; ++x) {
            double d = ang_dist(azimuth_of(x), lat.band_azimuth[j]);
            float prof = static_cast<float>(std::exp(-0.5 * d * d / (lat.band_sigma[j] * lat.band_sigma[j])));
            if (prof < 1e-3f) continue;
            for (int y = band_top; y < band_bot; ++y) blend(img, y, x, c, lat.band_alpha[j] * prof);
        }
    }
    // Road: bright bands at the road azimuth and its opposite, lower half.
    const double road_sigma = 3.8;
    for (double dir : {lat.road_dir_ground, lat.road_dir_ground + 180.0}) {
        for (int x = 0; x < w; ++x) {
            double d = ang_dist(azimuth_of(x), dir);
            float prof = static_cast<float>(std::exp(-0.5 * d * d / (road_sigma * road_sigma)));
            if (prof < 1e-3f) continue;
            for (int y = horizon; y < h; ++y) blend(img, y, x, kRoadColor, 0.92f * prof);
        }
    }
    for (float& v : img.pixels) v += static_cast<float>(0.01 * rng.gaussian());
    for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
    quantize_to_8bit(img);
    return Panorama(std::move(img));
}

Aerial render_aerial(const SyntheticSpec& spec, const LocationLatent& lat, Rng& rng) {
    const int s = spec.aerial_size;
    Image img(s, s, 3);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            img.at(y, x, 0) = 0.30f;
            img.at(y, x, 1) = 0.38f;
            img.at(y, x, 2) = 0.26f;
        }
    for (const auto& blob : lat.blobs) {
        const Color& c = lat.palette[blob.color];
        int x0 = std::max(0, static_cast<int>(blob.x - blob.r - 2));
        int x1 = std::min(s - 1, static_cast<int>(blob.x + blob.r + 2));
        int y0 = std::max(0, static_cast<int>(blob.y - blob.r - 2));
        int y1 = std::min(s - 1, static_cast<int>(blob.y + blob.r + 2));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double d = std::hypot(x - blob.x, y - blob.y) - blob.r;
                float a = d <= 0 ? 1.0f : static_cast<float>(std::max(0.0, 1.0 - d));
                if (a > 0) blend(img, y, x, c, 0.8f * a);
            }
    }
    // Road stripe through the center at road_dir_aerial (0 = North = up),
    // gaussian cross-section in perpendicular distance.
    const double rad = lat.road_dir_aerial * kPi / 180.0;
    const double ux = std::sin(rad), uy = -std::cos(rad);  // along-road direction
    const double cx = (s - 1) / 2.0, cy = (s - 1) / 2.0;
    const double road_sigma = 1.3;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            double px = x - cx, py = y - cy;
            double perp = std::abs(px * uy - py * ux) / 1.0;  // distance to the center line
            float prof = static_cast<float>(std::exp(-0.5 * perp * perp / (road_sigma * road_sigma)));
            if (prof > 1e-3f) blend(img, y, x, kRoadColor, 0.92f * prof);
        }
    for (float& v : img.pixels) v += static_cast<float>(0.01 * rng.gaussian());
    for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
    quantize_to_8bit(img);
    return Aerial(std::move(img));
}

}  // namespace

std::vector<LocationRecord> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int n_train = static_cast<int>(spec.n_locations * 0.8);
    const int n_test = spec.n_locations - n_train;

    // Road directions are stratified within each split (jittered slots over
    // [0, 180)), so direction alone separates a gallery instead of colliding
    // the way iid draws would at desk scale.
    Rng dir_rng(splitmix64(spec.seed ^ 0x726f616464697273ULL));
    auto make_slots = [&](int m) {
        std::vector<int> slots(m);
        for (int i = 0; i < m; ++i) slots[i] = i;
        dir_rng.shuffle(slots);
        return slots;
    };
    std::vector<int> train_slots = make_slots(n_train);
    std::vector<int> test_slots = make_slots(n_test);

    std::vector<LocationRecord> out;
    out.reserve(spec.n_locations);
    for (int i = 0; i < spec.n_locations; ++i) {
        Rng rng(splitmix64(spec.seed) ^ splitmix64(static_cast<uint64_t>(i) + 1));
        LocationLatent lat = draw_latent(spec, rng);

        bool is_train = i < n_train;
        int m = is_train ? n_train : n_test;
        int slot = is_train ? train_slots[i] : test_slots[i - n_train];
        lat.road_dir_aerial = (slot + 0.5 + 0.7 * (rng.uniform() - 0.5)) * 180.0 / m;
        // Bernoulli mixture: with probability shortcut_strength the ground
        // road agrees exactly with the aerial one, otherwise it is an
        // independent draw, so the cue's informativeness is linear in s.
        lat.road_dir_ground = rng.uniform() < spec.shortcut_strength
                                  ? lat.road_dir_aerial
                                  : rng.uniform(0.0, 180.0);

        LocationRecord rec;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "loc_%05d", i);
        rec.id = buf;
        rec.split = is_train ? Split::Train : Split::Test;
        rec.ground = render_panorama(spec, lat, rng);
        rec.aerial = render_aerial(spec, lat, rng);
        out.push_back(std::move(rec));
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<LocationRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    fs::path base = fs::path(path).parent_path();

    std::vector<LocationRecord> out;
    std::map<std::string, int> seen;  // id -> line number
    std::string line;
    int line_no = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (!header_checked) {
            header_checked = true;
            if (fields.size() < 4 || fields[0] != "id" || fields[1] != "ground_path" ||
                fields[2] != "aerial_path" || fields[3] != "split")
                throw std::runtime_error("manifest: line 1: expected header id,ground_path,aerial_path,split[,peers]");
            continue;
        }
        if (fields.size() < 4 || fields.size() > 5)
            throw std::runtime_error("manifest: line " + std::to_string(line_no) +
                                     ": expected 4 or 5 columns, got " + std::to_string(fields.size()));
        LocationRecord rec;
        rec.id = fields[0];
        if (rec.id.empty())
            throw std::runtime_error("manifest: line " + std::to_string(line_no) + ": empty id");
        auto [it, inserted] = seen.emplace(rec.id, line_no);
        if (!inserted)
            throw std::runtime_error("manifest: duplicate id '" + rec.id + "' on lines " +
                                     std::to_string(it->second) + " and " + std::to_string(line_no));
        rec.ground_path = (base / fields[1]).string();
        rec.aerial_path = (base / fields[2]).string();
        try {
            rec.split = split_from_string(fields[3]);
        } catch (const std::exception&) {
            throw std::runtime_error("manifest: line " + std::to_string(line_no) +
                                     ": unknown split '" + fields[3] + "'");
        }
        if (fields.size() == 5 && !fields[4].empty()) {
            std::stringstream ss(fields[4]);
            std::string peer;
            while (std::getline(ss, peer, ';'))
                if (!peer.empty()) rec.peers.push_back(peer);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void export_dataset(const std::vector<LocationRecord>& records, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "ground");
    fs::create_directories(fs::path(dir) / "aerial");
    std::ofstream csv(fs::path(dir) / "manifest.csv");
    if (!csv) throw std::runtime_error("export_dataset: cannot write manifest in " + dir);
    csv << "id,ground_path,aerial_path,split,peers\n";
    for (const auto& rec : records) {
        std::string g = "ground/" + rec.id + ".png";
        std::string a = "aerial/" + rec.id + ".png";
        save_png(rec.load_ground().image, (fs::path(dir) / g).string());
        save_png(rec.load_aerial().image, (fs::path(dir) / a).string());
        csv << rec.id << ',' << g << ',' << a << ',' << to_string(rec.split) << ',';
        for (size_t i = 0; i < rec.peers.size(); ++i) {
            if (i) csv << ';';
            csv << rec.peers[i];
        }
        csv << '\n';
    }
}

std::pair<Panorama, Panorama> sample_street_positive_pair(
    const std::vector<LocationRecord>& records, const std::string& location_id, Rng& rng) {
    const LocationRecord* anchor = nullptr;
    for (const auto& r : records)
        if (r.id == location_id) anchor = &r;
    if (!anchor) throw std::invalid_argument("street pair: unknown location id " + location_id);

    // The location's street set: the record itself plus its peers.
    std::vector<const LocationRecord*> streets{anchor};
    for (const std::string& pid : anchor->peers) {
        for (const auto& r : records)
            if (r.id == pid) streets.push_back(&r);
    }
    std::sort(streets.begin(), streets.end(),
              [](const LocationRecord* a, const LocationRecord* b) { return a->id < b->id; });
    if (streets.size() < 2)
        throw std::invalid_argument("street pair: location " + location_id +
                                    " has fewer than 2 street images; strategy inapplicable");

    size_t i = rng.uniform_index(streets.size());
    size_t j = rng.uniform_index(streets.size() - 1);
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);  // stable id order
    return {streets[i]->load_ground(), streets[j]->load_ground()};
}

std::vector<const LocationRecord*> split_of(const std::vector<LocationRecord>& records, Split s) {
    std::vector<const LocationRecord*> out;
    for (const auto& r : records)
        if (r.split == s) out.push_back(&r);
    return out;
}

}  // namespace congeo
