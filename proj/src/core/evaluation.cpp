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

#include "core/evaluation.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace congeo {

std::string to_string(EvalKind k) {
    switch (k) {
        case EvalKind::NorthAligned: return "north_aligned";
        case EvalKind::UnknownOrientation: return "unknown_orientation";
        case EvalKind::LimitedFoV: return "limited_fov";
        case EvalKind::UnseenVariation: return "unseen_variation";
    }
    return "north_aligned";
}

EvalKind eval_kind_from_string(const std::string& s) {
    if (s == "north_aligned") return EvalKind::NorthAligned;
    if (s == "unknown_orientation") return EvalKind::UnknownOrientation;
    if (s == "limited_fov") return EvalKind::LimitedFoV;
    if (s == "unseen_variation") return EvalKind::UnseenVariation;
    throw std::invalid_argument("unknown eval setting kind: " + s);
}

namespace {

std::string perturbation_name(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::RandomFoV: return "random_fov";
        case PerturbationKind::Zoom: return "zoom";
        case PerturbationKind::GaussianNoise: return "gaussian_noise";
        case PerturbationKind::MotionBlur: return "motion_blur";
    }
    return "unknown";
}

}  // namespace

std::string EvalSetting::name() const {
    switch (kind) {
        case EvalKind::NorthAligned: return "north_aligned";
        case EvalKind::UnknownOrientation: return "unknown_orientation";
        case EvalKind::LimitedFoV: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "limited_fov_%g", alpha_deg);
            return buf;
        }
        case EvalKind::UnseenVariation: return "unseen_" + perturbation_name(perturbation.kind);
    }
    return "unknown";
}

double eval_theta(uint64_t seed, const std::string& query_id) {
    uint64_t u = splitmix64(splitmix64(seed) ^ hash_string(query_id));
    return static_cast<double>(u >> 11) * (360.0 / 9007199254740992.0);
}

namespace {

struct Gallery {
    EmbeddingBatch embeddings;
    std::vector<const LocationRecord*> test_records;
    std::vector<std::vector<int>> positives;  // per query
};

// Encode the aerial gallery once and resolve each query's positive set
// (its own aerial plus any peers').
Gallery build_gallery(const DualEncoder& encoder, const std::vector<LocationRecord>& records) {
    Gallery g;
    g.test_records = split_of(records, Split::Test);
    if (g.test_records.empty()) throw std::invalid_argument("evaluation: empty test split");

    std::vector<Aerial> aerials;
    aerials.reserve(g.test_records.size());
    std::map<std::string, int> index_of;
    for (size_t i = 0; i < g.test_records.size(); ++i) {
        aerials.push_back(g.test_records[i]->load_aerial());
        index_of[g.test_records[i]->id] = static_cast<int>(i);
    }
    g.embeddings = encoder.encode_aerial(aerials);

    g.positives.resize(g.test_records.size());
    for (size_t i = 0; i < g.test_records.size(); ++i) {
        g.positives[i].push_back(static_cast<int>(i));
        for (const std::string& peer : g.test_records[i]->peers) {
            auto it = index_of.find(peer);
            if (it != index_of.end() && it->second != static_cast<int>(i))
                g.positives[i].push_back(it->second);
        }
        std::sort(g.positives[i].begin(), g.positives[i].end());
    }
    return g;
}

// Encode panoramas that may differ in shape: group by shape, encode each
// group, reassemble rows in input order.
EmbeddingBatch encode_queries(const DualEncoder& encoder, const std::vector<Panorama>& queries) {
    std::map<std::tuple<int, int, int>, std::vector<int>> groups;
    for (size_t i = 0; i < queries.size(); ++i) {
        const Image& img = queries[i].image;
        groups[{img.height, img.width, img.channels}].push_back(static_cast<int>(i));
    }
    EmbeddingBatch out(queries.size(), encoder.embed_dim());
    for (const auto& [shape, idx] : groups) {
        std::vector<Panorama> group;
        group.reserve(idx.size());
        for (int i : idx) group.push_back(queries[i]);
        EmbeddingBatch emb = encoder.encode_ground(group);
        for (size_t r = 0; r < idx.size(); ++r) out.row(idx[r]) = emb.row(static_cast<Eigen::Index>(r));
    }
    return out;
}

Panorama transform_query(const Panorama& pano, const EvalSetting& setting, const std::string& id,
                         bool pad_inputs) {
    switch (setting.kind) {
        case EvalKind::NorthAligned:
            return pano;
        case EvalKind::UnknownOrientation:
        case EvalKind::LimitedFoV: {
            double alpha = setting.kind == EvalKind::UnknownOrientation ? 360.0 : setting.alpha_deg;
            TransformSpec spec{eval_theta(setting.seed, id), alpha, pad_inputs};
            return apply_ground_transform(pano, spec);
        }
        case EvalKind::UnseenVariation: {
            PerturbationSpec p = setting.perturbation;
            p.pad_to_full = pad_inputs;
            uint64_t q_seed = splitmix64(splitmix64(setting.seed) ^ hash_string(id));
            return perturb(pano, p, q_seed);
        }
    }
    throw std::invalid_argument("run_setting: unknown kind");
}

}  // namespace

EvalOutput run_setting_full(const DualEncoder& encoder, const std::vector<LocationRecord>& records,
                            const EvalSetting& setting) {
    Gallery g = build_gallery(encoder, records);
    bool pad = encoder.config().pad_inputs_to_full;

    std::vector<Panorama> queries;
    queries.reserve(g.test_records.size());
    for (const LocationRecord* rec : g.test_records)
        queries.push_back(transform_query(rec->load_ground(), setting, rec->id, pad));
    EmbeddingBatch q = encode_queries(encoder, queries);

    EvalOutput out;
    out.rankings.reserve(g.test_records.size());
    for (size_t i = 0; i < g.test_records.size(); ++i)
        out.rankings.push_back(rank_gallery(q.row(static_cast<Eigen::Index>(i)).transpose(),
                                            g.embeddings, g.positives[i], g.test_records[i]->id));
    out.report = compute_metrics(out.rankings, static_cast<int>(g.embeddings.rows()));
    return out;
}

MetricsReport run_setting(const DualEncoder& encoder, const std::vector<LocationRecord>& records,
                          const EvalSetting& setting) {
    return run_setting_full(encoder, records, setting).report;
}

std::vector<double> default_sweep_angles() {
    std::vector<double> angles;
    for (int i = 0; i < 16; ++i) angles.push_back(i * 22.5);
    return angles;
}

SweepResult orientation_sweep(const DualEncoder& encoder,
                              const std::vector<LocationRecord>& records,
                              const std::vector<double>& angles) {
    if (angles.empty()) throw std::invalid_argument("orientation_sweep: no angles");
    for (double a : angles)
        if (a < 0.0 || a >= 360.0)
            throw std::invalid_argument("orientation_sweep: angles must be in [0, 360)");

    Gallery g = build_gallery(encoder, records);
    std::vector<Panorama> originals;
    originals.reserve(g.test_records.size());
    for (const LocationRecord* rec : g.test_records) originals.push_back(rec->load_ground());

    SweepResult sweep;
    sweep.angles = angles;
    for (double theta : angles) {
        std::vector<Panorama> shifted;
        shifted.reserve(originals.size());
        for (const Panorama& p : originals) shifted.push_back(cyclic_shift(p, theta));
        EmbeddingBatch q = encode_queries(encoder, shifted);
        std::vector<RankedResult> rankings;
        rankings.reserve(originals.size());
        for (size_t i = 0; i < originals.size(); ++i)
            rankings.push_back(rank_gallery(q.row(static_cast<Eigen::Index>(i)).transpose(),
                                            g.embeddings, g.positives[i], g.test_records[i]->id));
        sweep.recall_curve.push_back(recall_at_k(rankings, 1));
    }
    double lo = *std::min_element(sweep.recall_curve.begin(), sweep.recall_curve.end());
    double hi = *std::max_element(sweep.recall_curve.begin(), sweep.recall_curve.end());
    sweep.invariance_gap = hi - lo;
    return sweep;
}

std::map<PerturbationKind, MetricsReport> run_unseen_suite(
    const DualEncoder& encoder, const std::vector<LocationRecord>& records,
    const std::vector<PerturbationSpec>& suite, uint64_t seed) {
    if (suite.empty()) throw std::invalid_argument("run_unseen_suite: empty suite");
    std::map<PerturbationKind, MetricsReport> out;
    for (const PerturbationSpec& spec : suite) {
        EvalSetting setting;
        setting.kind = EvalKind::UnseenVariation;
        setting.perturbation = spec;
        setting.seed = splitmix64(seed ^ (static_cast<uint64_t>(spec.kind) + 1));
        out[spec.kind] = run_setting(encoder, records, setting);
    }
    return out;
}

}  // namespace congeo
