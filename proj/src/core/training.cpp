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

#include "core/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "core/archive.hpp"

namespace congeo {

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
    if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
    if (train_alpha.mode == TrainAlpha::Mode::Fixed) {
        if (!(train_alpha.value > 0.0) || train_alpha.value > 360.0)
            throw std::invalid_argument("train: train_alpha must be in (0, 360]");
    } else {
        if (!(train_alpha.lo > 0.0) || train_alpha.hi > 360.0 || train_alpha.lo > train_alpha.hi)
            throw std::invalid_argument("train: train_alpha range must be within (0, 360]");
    }
    if (positive_strategy != "pano" && positive_strategy != "street_pair")
        throw std::invalid_argument("train: positive_strategy must be 'pano' or 'street_pair'");
    if (aug_baseline.any() && (ablation.use_single_q || ablation.use_single_r || ablation.use_cross))
        throw std::invalid_argument("train: augmentation baselines require ablation flags off");
    encoder.validate();
}

TrainBatch build_batch(const std::vector<const LocationRecord*>& batch_records,
                       const TrainConfig& cfg, Rng& rng,
                       const std::vector<LocationRecord>* all_records) {
    if (batch_records.size() < 2) throw std::invalid_argument("build_batch: need at least 2 records");
    const bool pad = cfg.encoder.pad_inputs_to_full;
    const auto& ab = cfg.ablation;

    TrainBatch batch;
    batch.single_equals_cross = ab.single_q_shift == ab.cross_shift && ab.single_q_fov == ab.cross_fov;

    for (const LocationRecord* rec : batch_records) {
        // Per-item draw order is fixed: theta, alpha, rotation step, then any
        // mode-specific extras, so configs with equal seeds see equal streams.
        double theta = rng.uniform(0.0, 360.0);
        double alpha = cfg.train_alpha.mode == TrainAlpha::Mode::Fixed
                           ? cfg.train_alpha.value
                           : rng.uniform(cfg.train_alpha.lo, cfg.train_alpha.hi);
        int rot = 90 * (1 + static_cast<int>(rng.uniform_index(3)));

        Panorama pano = rec->load_ground();
        Aerial aerial = rec->load_aerial();

        if (cfg.aug_baseline.any()) {
            if (cfg.aug_baseline.rotate)
                std::tie(aerial, pano) = aerial_rotate_with_shift(aerial, pano, rot);
            if (cfg.aug_baseline.shift) pano = cyclic_shift(pano, theta);
            if (cfg.aug_baseline.fov) pano = fov_crop(pano, rng.uniform(70.0, 360.0), pad);
        }

        Panorama base = pano;
        Panorama q_primary = base;
        if (cfg.positive_strategy == "street_pair") {
            if (!all_records)
                throw std::invalid_argument("build_batch: street_pair strategy needs the full record list");
            auto [a, b] = sample_street_positive_pair(*all_records, rec->id, rng);
            q_primary = a;
            batch.queries_single.push_back(b);
            base = a;
        } else {
            TransformSpec single_spec{ab.single_q_shift ? theta : 0.0,
                                      ab.single_q_fov ? alpha : 360.0, pad};
            batch.queries_single.push_back(apply_ground_transform(base, single_spec));
        }

        if (batch.single_equals_cross && cfg.positive_strategy != "street_pair") {
            batch.queries_cross.push_back(batch.queries_single.back());
        } else {
            TransformSpec cross_spec{ab.cross_shift ? theta : 0.0, ab.cross_fov ? alpha : 360.0, pad};
            batch.queries_cross.push_back(apply_ground_transform(base, cross_spec));
        }

        Image rotated = aerial.image;
        for (int k = 0; k < rot / 90; ++k) rotated = rot90ccw(rotated);
        batch.refs_star.push_back(Aerial(std::move(rotated)));

        batch.ids.push_back(rec->id);
        batch.queries.push_back(std::move(q_primary));
        batch.refs.push_back(std::move(aerial));
    }
    if (cfg.positive_strategy == "street_pair") batch.single_equals_cross = false;
    return batch;
}

namespace {

// Forward a stream of panoramas that may mix shapes: group by shape, run one
// differentiable forward per group, reassemble rows in input order.
struct GroundForward {
    EmbeddingBatch embeddings;
    std::vector<DualEncoder::Forward> parts;
    std::vector<std::vector<int>> groups;
};

GroundForward forward_ground_grouped(DualEncoder& enc, const std::vector<Panorama>& panos) {
    std::map<std::tuple<int, int, int>, std::vector<int>> by_shape;
    for (size_t i = 0; i < panos.size(); ++i) {
        const Image& img = panos[i].image;
        by_shape[{img.height, img.width, img.channels}].push_back(static_cast<int>(i));
    }
    GroundForward out;
    out.embeddings = EmbeddingBatch(panos.size(), enc.embed_dim());
    for (auto& [shape, idx] : by_shape) {
        std::vector<const Image*> imgs;
        imgs.reserve(idx.size());
        for (int i : idx) imgs.push_back(&panos[i].image);
        out.parts.push_back(enc.forward_ground(imgs));
        const EmbeddingBatch& emb = out.parts.back().embeddings;
        for (size_t r = 0; r < idx.size(); ++r)
            out.embeddings.row(idx[r]) = emb.row(static_cast<Eigen::Index>(r));
        out.groups.push_back(idx);
    }
    return out;
}

void backward_ground_grouped(DualEncoder& enc, const GroundForward& fwd, const EmbeddingBatch& d) {
    for (size_t g = 0; g < fwd.parts.size(); ++g) {
        EmbeddingBatch dg(fwd.groups[g].size(), d.cols());
        for (size_t r = 0; r < fwd.groups[g].size(); ++r)
            dg.row(static_cast<Eigen::Index>(r)) = d.row(fwd.groups[g][r]);
        enc.backward(fwd.parts[g], dg);
    }
}

LossGrad info_nce_grad_pair(const EmbeddingBatch& a, const EmbeddingBatch& c, double tau,
                            bool symmetric) {
    PositiveAssignment id = PositiveAssignment::identity(static_cast<int>(a.rows()));
    LossGrad f = info_nce_grad(a, c, id, tau);
    if (!symmetric) return f;
    LossGrad b = info_nce_grad(c, a, id, tau);
    f.value = 0.5 * (f.value + b.value);
    f.d_anchors = 0.5 * (f.d_anchors + b.d_candidates);
    f.d_candidates = 0.5 * (f.d_candidates + b.d_anchors);
    f.d_tau = 0.5 * (f.d_tau + b.d_tau);
    return f;
}

}  // namespace

TrainState::TrainState(const TrainConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    encoder_ = std::make_unique<DualEncoder>(cfg_.encoder, cfg_.seed);
    log_taus_ = nn::Param("log_taus", 1, 4, false);
    log_taus_.v(0, 0) = static_cast<float>(std::log(cfg_.loss.tau_q));
    log_taus_.v(0, 1) = static_cast<float>(std::log(cfg_.loss.tau_r));
    log_taus_.v(0, 2) = static_cast<float>(std::log(cfg_.loss.tau_v));
    log_taus_.v(0, 3) = static_cast<float>(std::log(cfg_.loss.tau_c));
    rng_ = Rng(splitmix64(cfg_.seed ^ 0x7261696e6c6f6fULL));
    wire_optimizer();
}

void TrainState::wire_optimizer() {
    std::vector<nn::Param*> params;
    encoder_->collect_params(params);
    params.push_back(&log_taus_);
    opt_ = nn::AdamW(params, cfg_.weight_decay);
}

double TrainState::tau(int which) const { return std::exp(static_cast<double>(log_taus_.v(0, which))); }

StepLosses TrainState::train_step(const TrainBatch& batch, double lr) {
    const auto& ab = cfg_.ablation;
    const bool sym = cfg_.loss.symmetric;
    StepLosses out;
    out.lr = lr;
    out.tau_q = tau(0);
    out.tau_r = tau(1);
    out.tau_v = tau(2);
    out.tau_c = tau(3);

    opt_.zero_grad();

    GroundForward fq = forward_ground_grouped(*encoder_, batch.queries);
    std::vector<const Image*> ref_imgs, ref_star_imgs;
    for (const Aerial& a : batch.refs) ref_imgs.push_back(&a.image);
    for (const Aerial& a : batch.refs_star) ref_star_imgs.push_back(&a.image);
    DualEncoder::Forward fr = encoder_->forward_aerial(ref_imgs);

    GroundForward fq_single, fq_cross;
    bool star_shared = batch.single_equals_cross;
    if (ab.use_single_q) fq_single = forward_ground_grouped(*encoder_, batch.queries_single);
    if (ab.use_cross && !(star_shared && ab.use_single_q))
        fq_cross = forward_ground_grouped(*encoder_, batch.queries_cross);

    EmbeddingBatch d_q = EmbeddingBatch::Zero(fq.embeddings.rows(), fq.embeddings.cols());
    EmbeddingBatch d_r = EmbeddingBatch::Zero(fr.embeddings.rows(), fr.embeddings.cols());
    EmbeddingBatch d_qs, d_qc, d_rs;

    LossGrad vanilla = info_nce_grad_pair(fq.embeddings, fr.embeddings, out.tau_v, sym);
    out.vanilla = vanilla.value;
    d_q += vanilla.d_anchors;
    d_r += vanilla.d_candidates;
    log_taus_.g(0, 2) += static_cast<float>(vanilla.d_tau * out.tau_v);

    const double w1 = cfg_.loss.w1, w2 = cfg_.loss.w2, w3 = cfg_.loss.w3;

    if (ab.use_single_q) {
        LossGrad g = info_nce_grad_pair(fq_single.embeddings, fq.embeddings, out.tau_q, sym);
        out.single_q = g.value;
        d_qs = w1 * g.d_anchors;
        d_q += w1 * g.d_candidates;
        log_taus_.g(0, 0) += static_cast<float>(w1 * g.d_tau * out.tau_q);
    }

    DualEncoder::Forward fr_star;
    if (ab.use_single_r) {
        fr_star = encoder_->forward_aerial(ref_star_imgs);
        LossGrad g = info_nce_grad_pair(fr_star.embeddings, fr.embeddings, out.tau_r, sym);
        out.single_r = g.value;
        d_rs = w2 * g.d_anchors;
        d_r += w2 * g.d_candidates;
        log_taus_.g(0, 1) += static_cast<float>(w2 * g.d_tau * out.tau_r);
    }

    if (ab.use_cross) {
        const EmbeddingBatch& star =
            (star_shared && ab.use_single_q) ? fq_single.embeddings : fq_cross.embeddings;
        LossGrad g = info_nce_grad_pair(star, fr.embeddings, out.tau_c, sym);
        out.cross = g.value;
        if (star_shared && ab.use_single_q) {
            d_qs += w3 * g.d_anchors;
        } else {
            d_qc = w3 * g.d_anchors;
        }
        d_r += w3 * g.d_candidates;
        log_taus_.g(0, 3) += static_cast<float>(w3 * g.d_tau * out.tau_c);
    }

    LossComponents parts{out.vanilla, out.single_q, out.single_r, out.cross};
    out.total = total_loss(parts, cfg_.loss);
    if (!std::isfinite(out.total)) {
        std::ostringstream msg;
        msg << "train_step: non-finite loss at step " << step_ << "; batch ids:";
        for (const auto& id : batch.ids) msg << ' ' << id;
        throw std::runtime_error(msg.str());
    }

    backward_ground_grouped(*encoder_, fq, d_q);
    encoder_->backward(fr, d_r);
    if (ab.use_single_q) backward_ground_grouped(*encoder_, fq_single, d_qs);
    if (ab.use_cross && !(star_shared && ab.use_single_q))
        backward_ground_grouped(*encoder_, fq_cross, d_qc);
    if (ab.use_single_r) encoder_->backward(fr_star, d_rs);

    opt_.step(lr);
    ++step_;
    loss_history_.push_back(out.total);
    return out;
}

double lr_at(const TrainConfig& cfg, int64_t step, int64_t total_steps) {
    if (cfg.schedule == LrSchedule::Constant || total_steps <= 0) return cfg.lr;
    double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return cfg.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * std::min(1.0, t)));
}

namespace {

nlohmann::ordered_json train_alpha_to_json(const TrainAlpha& a) {
    if (a.mode == TrainAlpha::Mode::Fixed) return a.value;
    return nlohmann::ordered_json::array({a.lo, a.hi});
}

TrainAlpha train_alpha_from_json(const nlohmann::ordered_json& j) {
    if (j.is_number()) return TrainAlpha::fixed(j.get<double>());
    if (j.is_string()) {
        if (j.get<std::string>() == "random") return TrainAlpha::range(180.0, 360.0);
        throw std::invalid_argument("train_alpha: unknown keyword " + j.get<std::string>());
    }
    if (j.is_array() && j.size() == 2)
        return TrainAlpha::range(j[0].get<double>(), j[1].get<double>());
    throw std::invalid_argument("train_alpha: expected number, [lo, hi] or \"random\"");
}

}  // namespace

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["schedule"] = cfg.schedule == LrSchedule::Cosine ? "cosine" : "constant";
    j["train_alpha"] = train_alpha_to_json(cfg.train_alpha);
    j["ablation"] = {{"use_single_q", cfg.ablation.use_single_q},
                     {"use_single_r", cfg.ablation.use_single_r},
                     {"use_cross", cfg.ablation.use_cross},
                     {"single_q_shift", cfg.ablation.single_q_shift},
                     {"single_q_fov", cfg.ablation.single_q_fov},
                     {"cross_shift", cfg.ablation.cross_shift},
                     {"cross_fov", cfg.ablation.cross_fov}};
    j["aug_baseline"] = {{"shift", cfg.aug_baseline.shift},
                         {"fov", cfg.aug_baseline.fov},
                         {"rotate", cfg.aug_baseline.rotate}};
    j["positive_strategy"] = cfg.positive_strategy;
    j["seed"] = cfg.seed;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::ordered_json& j) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    std::string sched = j.value("schedule", std::string("cosine"));
    if (sched == "cosine")
        cfg.schedule = LrSchedule::Cosine;
    else if (sched == "constant")
        cfg.schedule = LrSchedule::Constant;
    else
        throw std::invalid_argument("train: unknown schedule " + sched);
    if (j.contains("train_alpha")) cfg.train_alpha = train_alpha_from_json(j.at("train_alpha"));
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        cfg.ablation.use_single_q = a.value("use_single_q", true);
        cfg.ablation.use_single_r = a.value("use_single_r", true);
        cfg.ablation.use_cross = a.value("use_cross", true);
        cfg.ablation.single_q_shift = a.value("single_q_shift", true);
        cfg.ablation.single_q_fov = a.value("single_q_fov", true);
        cfg.ablation.cross_shift = a.value("cross_shift", true);
        cfg.ablation.cross_fov = a.value("cross_fov", true);
    }
    if (j.contains("aug_baseline")) {
        const auto& a = j.at("aug_baseline");
        cfg.aug_baseline.shift = a.value("shift", false);
        cfg.aug_baseline.fov = a.value("fov", false);
        cfg.aug_baseline.rotate = a.value("rotate", false);
    }
    cfg.positive_strategy = j.value("positive_strategy", std::string("pano"));
    cfg.seed = j.value("seed", static_cast<uint64_t>(0));
    return cfg;
}

void TrainState::save(const std::string& path) const {
    Archive ar;
    ar.meta["kind"] = "train_state";
    ar.meta["encoder"] = encoder_config_to_json(cfg_.encoder);
    ar.meta["loss"] = loss_config_to_json(cfg_.loss);
    ar.meta["train"] = train_config_to_json(cfg_);
    ar.meta["epoch"] = epoch_;
    ar.meta["step"] = step_;
    ar.meta["adam_t"] = opt_.step_count();
    ar.meta["rng_state"] = rng_.state();
    ar.meta["loss_history"] = loss_history_;

    auto& self = const_cast<TrainState&>(*this);
    const auto& params = self.opt_.params();
    for (size_t i = 0; i < params.size(); ++i) {
        ar.add(params[i]->name, params[i]->v);
        ar.add(params[i]->name + ".adam_m", self.opt_.moments_m()[i]);
        ar.add(params[i]->name + ".adam_u", self.opt_.moments_u()[i]);
    }
    ar.save(path);
}

TrainState TrainState::load(const std::string& path) {
    Archive ar = Archive::load(path);
    if (ar.meta.value("kind", "") != "train_state")
        throw std::runtime_error("train state: unexpected archive kind in " + path);

    TrainConfig cfg = train_config_from_json(ar.meta.at("train"));
    cfg.encoder = encoder_config_from_json(ar.meta.at("encoder"));
    cfg.loss = loss_config_from_json(ar.meta.at("loss"));

    TrainState state(cfg);
    state.epoch_ = ar.meta.at("epoch").get<int>();
    state.step_ = ar.meta.at("step").get<int64_t>();
    state.opt_.set_step_count(ar.meta.at("adam_t").get<int64_t>());
    state.rng_.set_state(ar.meta.at("rng_state").get<uint64_t>());
    state.loss_history_ = ar.meta.at("loss_history").get<std::vector<double>>();

    const auto& params = state.opt_.params();
    for (size_t i = 0; i < params.size(); ++i) {
        const Eigen::MatrixXf* v = ar.find(params[i]->name);
        const Eigen::MatrixXf* m = ar.find(params[i]->name + ".adam_m");
        const Eigen::MatrixXf* u = ar.find(params[i]->name + ".adam_u");
        if (!v || !m || !u)
            throw std::runtime_error("train state: missing arrays for " + params[i]->name);
        params[i]->v = *v;
        state.opt_.moments_m()[i] = *m;
        state.opt_.moments_u()[i] = *u;
    }
    return state;
}

namespace {

TrainState train_impl(const std::vector<LocationRecord>& records, const TrainConfig& cfg,
                      const TrainHooks& hooks) {
    cfg.validate();
    auto train_split = split_of(records, Split::Train);
    if (train_split.empty()) throw std::invalid_argument("train: empty train split");

    TrainState state(cfg);
    const int64_t batches_per_epoch = static_cast<int64_t>(train_split.size()) / cfg.batch_size;
    if (cfg.epochs > 0 && batches_per_epoch == 0)
        throw std::invalid_argument("train: fewer records than one batch");
    const int64_t total_steps = batches_per_epoch * cfg.epochs;

    namespace fs = std::filesystem;
    if (!hooks.checkpoint_dir.empty()) fs::create_directories(hooks.checkpoint_dir);

    std::vector<int> order(train_split.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        state.rng().shuffle(order);
        for (int64_t b = 0; b < batches_per_epoch; ++b) {
            std::vector<const LocationRecord*> slice;
            slice.reserve(cfg.batch_size);
            for (int i = 0; i < cfg.batch_size; ++i)
                slice.push_back(train_split[order[b * cfg.batch_size + i]]);
            TrainBatch batch = build_batch(slice, cfg, state.rng(), &records);
            double lr = lr_at(cfg, state.step(), total_steps);
            StepLosses losses = state.train_step(batch, lr);
            if (hooks.on_step) hooks.on_step(losses, epoch, state.step());
        }
        state.set_epoch(epoch + 1);
        if (!hooks.checkpoint_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "state_epoch_%04d.ckpt", epoch + 1);
            state.save((fs::path(hooks.checkpoint_dir) / name).string());
        }
    }
    return state;
}

}  // namespace

TrainState train(const std::vector<LocationRecord>& records, const TrainConfig& cfg,
                 const TrainHooks& hooks) {
    return train_impl(records, cfg, hooks);
}

TrainState train_augmentation_baseline(const std::vector<LocationRecord>& records,
                                       const TrainConfig& cfg, const TrainHooks& hooks) {
    TrainConfig base = cfg;
    base.ablation.use_single_q = false;
    base.ablation.use_single_r = false;
    base.ablation.use_cross = false;
    return train_impl(records, base, hooks);
}

}  // namespace congeo
