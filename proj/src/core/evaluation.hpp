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

#include <map>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoders.hpp"
#include "core/retrieval.hpp"
#include "core/transforms.hpp"

namespace congeo {

enum class EvalKind { NorthAligned, UnknownOrientation, LimitedFoV, UnseenVariation };

std::string to_string(EvalKind k);
EvalKind eval_kind_from_string(const std::string& s);

/// One evaluation protocol. UnknownOrientation is LimitedFoV with alpha=360.
/// Random per-query orientation angles are a pure function of (seed, id).
struct EvalSetting {
    EvalKind kind = EvalKind::NorthAligned;
    double alpha_deg = 360.0;        // LimitedFoV; presets are 70, 90, 180
    PerturbationSpec perturbation;   // UnseenVariation
    uint64_t seed = 0;

    std::string name() const;
};

/// Angle drawn for a query under a randomized setting, in [0, 360).
double eval_theta(uint64_t seed, const std::string& query_id);

struct EvalOutput {
    MetricsReport report;
    std::vector<RankedResult> rankings;
};

/// Run one setting over the test split of records against the full aerial
/// gallery. Transform policy per query: NorthAligned none; the randomized
/// settings shift by eval_theta and crop to alpha (padding per encoder
/// config); UnseenVariation applies the perturbation to the full query.
EvalOutput run_setting_full(const DualEncoder& encoder, const std::vector<LocationRecord>& records,
                            const EvalSetting& setting);
MetricsReport run_setting(const DualEncoder& encoder, const std::vector<LocationRecord>& records,
                          const EvalSetting& setting);

struct SweepResult {
    std::vector<double> angles;
    std::vector<double> recall_curve;  // R@1 per angle, every query shifted by exactly that angle
    double invariance_gap = 0.0;       // max - min of the curve
};

SweepResult orientation_sweep(const DualEncoder& encoder,
                              const std::vector<LocationRecord>& records,
                              const std::vector<double>& angles);

/// Default 16-point sweep: 0 to 337.5 degrees in 22.5-degree steps.
std::vector<double> default_sweep_angles();

std::map<PerturbationKind, MetricsReport> run_unseen_suite(
    const DualEncoder& encoder, const std::vector<LocationRecord>& records,
    const std::vector<PerturbationSpec>& suite, uint64_t seed);

}  // namespace congeo
