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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"

namespace congeo {

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// One paired ground/aerial location. Images are either held in memory
/// (synthetic data) or referenced by path and loaded on access (manifests).
struct LocationRecord {
    std::string id;
    Split split = Split::Train;
    std::vector<std::string> peers;  // ids sharing the same aerial, if any

    std::optional<Panorama> ground;
    std::optional<Aerial> aerial;
    std::string ground_path;
    std::string aerial_path;

    bool in_memory() const { return ground.has_value(); }
    Panorama load_ground() const;
    Aerial load_aerial() const;
};

/// Knobs for the synthetic paired-view generator. Every location carries a
/// rotation-invariant identity signature (a per-location color palette
/// rendered as azimuth bands in the panorama and as discs in the aerial) and
/// a road stripe whose ground/aerial direction agreement is controlled by
/// shortcut_strength: at 1 the directions match exactly, at 0 they are
/// independent. Splits are assigned 80% train / 20% test by index.
struct SyntheticSpec {
    int n_locations = 640;
    int pano_h = 32;
    int pano_w = 128;
    int aerial_size = 64;
    double shortcut_strength = 1.0;
    int signature_channels = 3;  // palette colors per location
    uint64_t seed = 0;

    void validate() const;
};

std::vector<LocationRecord> generate_synthetic(const SyntheticSpec& spec);

/// Reads a pair-list manifest: CSV with a mandatory header row and columns
/// id, ground_path, aerial_path, split and optionally peers (semicolon
/// separated ids). Relative paths resolve against the manifest directory.
/// Image existence is checked on access, not here.
std::vector<LocationRecord> load_manifest(const std::string& path);

/// Writes records (with in-memory images) as PNGs plus a manifest.csv in the
/// same column layout load_manifest accepts.
void export_dataset(const std::vector<LocationRecord>& records, const std::string& dir);

/// Two distinct street images from the same location (the record itself and
/// its peers), for the ground single-modal objective when no panorama
/// exists. The pair is returned in ascending id order, so a location with
/// exactly two images yields the same pair for any rng.
std::pair<Panorama, Panorama> sample_street_positive_pair(
    const std::vector<LocationRecord>& records, const std::string& location_id, Rng& rng);

std::vector<const LocationRecord*> split_of(const std::vector<LocationRecord>& records, Split s);

}  // namespace congeo
