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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoders.hpp"
#include "core/losses.hpp"
#include "core/transforms.hpp"

namespace congeo {

enum class LrSchedule { Cosine, Constant };

/// Training-time FoV angle: a fixed value or a uniform range per item.
struct TrainAlpha {
    enum class Mode { Fixed, Range } mode = Mode::Fixed;
    double value = 180.0;
    double lo = 180.0, hi = 360.0;

    static TrainAlpha fixed(double v) { return {Mode::Fixed, v, 0, 0}; }
    static TrainAlpha range(double lo, double hi) { return {Mode::Range, 0, lo, hi}; }
};

/// Which objectives are active and which transforms feed the transformed
/// query streams (the loss-component ablation axes).
struct AblationFlags {
    bool use_single_q = true;
    bool use_single_r = true;
    bool use_cross = true;
    bool single_q_shift = true;
    bool single_q_fov = true;
    bool cross_shift = true;
    bool cross_fov = true;
};

/// Data-augmentation baseline modes: vanilla loss only, with the query
/// stream itself transformed.
struct AugBaselineFlags {
    bool shift = false;
    bool fov = false;    // random FoV crop in [70, 360] after the shift
    bool rotate = false; // aerial rotation with the matching ground shift
    bool any() const { return shift || fov || rotate; }
};

struct TrainConfig {
    int epochs = 60;
    int batch_size = 16;
    double lr = 1e-4;
    double weight_decay = 0.01;
    LrSchedule schedule = LrSchedule::Cosine;
    TrainAlpha train_alpha = TrainAlpha::fixed(180.0);
    AblationFlags ablation;
    AugBaselineFlags aug_baseline;
    /// "street_pair" draws the ground positive pair from two street images of
    /// the same location instead of (transformed, original).
    std::string positive_strategy = "pano";
    uint64_t seed = 0;

    EncoderConfig encoder;
    LossConfig loss;

    void validate() const;
};

/// The four image streams for one optimization step. queries_single and
/// queries_cross share storage when their transform flags agree.
struct TrainBatch {
    std::vector<std::string> ids;
    std::vector<Panorama> queries;         // I_Q
    std::vector<Panorama> queries_single;  // I_Q* for the ground single-modal term
    std::vector<Panorama> queries_cross;   // I_Q* for the cross-modal term
    std::vector<Aerial> refs;              // I_R
    std::vector<Aerial> refs_star;         // I_R*
    bool single_equals_cross = true;
};

TrainBatch build_batch(const std::vector<const LocationRecord*>& batch_records,
                       const TrainConfig& cfg, Rng& rng,
                       const std::vector<LocationRecord>* all_records = nullptr);

struct StepLosses {
    double vanilla = 0.0;
    double single_q = 0.0;
    double single_r = 0.0;
    double cross = 0.0;
    double total = 0.0;
    double tau_q = 0.0, tau_r = 0.0, tau_v = 0.0, tau_c = 0.0;
    double lr = 0.0;
};

/// Encoder and temperature parameters, optimizer moments, epoch counter and
/// rng state; serializable and resumable to a bit-identical continuation.
class TrainState {
public:
    explicit TrainState(const TrainConfig& cfg);

    DualEncoder& encoder() { return *encoder_; }
    const DualEncoder& encoder() const { return *encoder_; }
    const TrainConfig& config() const { return cfg_; }
    Rng& rng() { return rng_; }

    double tau(int which) const;  // 0 q, 1 r, 2 v, 3 c
    int epoch() const { return epoch_; }
    void set_epoch(int e) { epoch_ = e; }
    int64_t step() const { return step_; }
    const std::vector<double>& loss_history() const { return loss_history_; }

    /// One optimizer update against the ablation-selected total loss.
    StepLosses train_step(const TrainBatch& batch, double lr);

    void save(const std::string& path) const;
    static TrainState load(const std::string& path);

private:
    TrainState() = default;
    void wire_optimizer();

    TrainConfig cfg_;
    std::unique_ptr<DualEncoder> encoder_;
    nn::Param log_taus_;  // 1x4 [q, r, v, c], never weight-decayed
    nn::AdamW opt_;
    Rng rng_{0};
    int epoch_ = 0;
    int64_t step_ = 0;
    std::vector<double> loss_history_;
};

/// Cosine schedule from lr down to zero over total_steps, or constant.
double lr_at(const TrainConfig& cfg, int64_t step, int64_t total_steps);

struct TrainHooks {
    std::string checkpoint_dir;  // per-epoch state files when non-empty
    std::function<void(const StepLosses&, int epoch, int64_t step)> on_step;
};

/// Full loop: seeded epoch shuffling, full batches only, cosine schedule,
/// per-epoch checkpointing. Returns the final state.
TrainState train(const std::vector<LocationRecord>& records, const TrainConfig& cfg,
                 const TrainHooks& hooks = {});

/// Table-style augmentation baselines: vanilla loss only with transformed
/// query images per cfg.aug_baseline. Ablation flags must be off.
TrainState train_augmentation_baseline(const std::vector<LocationRecord>& records,
                                       const TrainConfig& cfg, const TrainHooks& hooks = {});

/// JSON round-trip for the train section (encoder/loss serialized separately).
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

}  // namespace congeo
