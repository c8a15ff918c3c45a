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

#include "core/encoders.hpp"

#include <cmath>
#include <stdexcept>

#include "core/archive.hpp"

namespace congeo {

namespace {

constexpr int kCoordChannels = 4;
constexpr int kConvCh1 = 8, kConvCh2 = 16, kConvCh3 = 32;
constexpr int kPatch = 8;
constexpr double kPi = 3.14159265358979323846;

void check_same_shape(const std::vector<const Image*>& batch, int expect_channels) {
    if (batch.empty()) throw std::invalid_argument("encoder: empty batch");
    const Image& first = *batch.front();
    if (first.channels != expect_channels)
        throw std::invalid_argument("encoder: expected " + std::to_string(expect_channels) +
                                    " channels, got " + std::to_string(first.channels));
    for (const Image* img : batch)
        if (!img->same_shape(first)) throw std::invalid_argument("encoder: images in a batch must share one shape");
}

// NCHW tensor from interleaved images, with the fixed sinusoidal coordinate
// channels appended after the pixel channels.
nn::Tensor4 to_tensor_with_coords(const std::vector<const Image*>& batch) {
    const Image& first = *batch.front();
    int n = static_cast<int>(batch.size());
    nn::Tensor4 t(n, first.channels + kCoordChannels, first.height, first.width);
    for (int in = 0; in < n; ++in) {
        const Image& img = *batch[in];
        for (int c = 0; c < img.channels; ++c)
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x) t.at(in, c, y, x) = img.at(y, x, c);
        for (int y = 0; y < img.height; ++y) {
            float sy = static_cast<float>(std::sin(2.0 * kPi * y / img.height));
            float cy = static_cast<float>(std::cos(2.0 * kPi * y / img.height));
            for (int x = 0; x < img.width; ++x) {
                float sx = static_cast<float>(std::sin(2.0 * kPi * x / img.width));
                float cx = static_cast<float>(std::cos(2.0 * kPi * x / img.width));
                t.at(in, img.channels + 0, y, x) = sx;
                t.at(in, img.channels + 1, y, x) = cx;
                t.at(in, img.channels + 2, y, x) = sy;
                t.at(in, img.channels + 3, y, x) = cy;
            }
        }
    }
    return t;
}

class ToyConv final : public Backbone {
public:
    ToyConv(const EncoderConfig& cfg, const std::string& prefix)
        : in_ch_(cfg.in_channels + kCoordChannels),
          conv1_(prefix + "conv1", cfg.in_channels + kCoordChannels, kConvCh1),
          conv2_(prefix + "conv2", kConvCh1, kConvCh2),
          conv3_(prefix + "conv3", kConvCh2, kConvCh3),
          head_(prefix + "head", kConvCh3, cfg.embed_dim) {}

    struct TraceImpl : Trace {
        nn::Tensor4 x0, y1, p1, y2, p2, y3, p3;
        nn::MatF gap;
    };

    nn::MatF forward(const std::vector<const Image*>& batch,
                     std::unique_ptr<Trace>* trace) const override {
        check_same_shape(batch, in_ch_ - kCoordChannels);
        auto t = std::make_unique<TraceImpl>();
        t->x0 = to_tensor_with_coords(batch);
        t->y1 = nn::relu_forward(conv1_.forward(t->x0));
        t->p1 = nn::avgpool2_forward(t->y1);
        t->y2 = nn::relu_forward(conv2_.forward(t->p1));
        t->p2 = nn::avgpool2_forward(t->y2);
        t->y3 = nn::relu_forward(conv3_.forward(t->p2));
        t->p3 = nn::avgpool2_forward(t->y3);
        t->gap = nn::global_avgpool_forward(t->p3);
        nn::MatF raw = head_.forward(t->gap);
        if (trace) *trace = std::move(t);
        return raw;
    }

    void backward(const nn::MatF& d_raw, const Trace& trace) override {
        const auto& t = static_cast<const TraceImpl&>(trace);
        nn::MatF d_gap = head_.backward(t.gap, d_raw);
        nn::Tensor4 d = nn::global_avgpool_backward(t.p3.c, t.p3.h, t.p3.w, d_gap);
        d = nn::avgpool2_backward(t.y3.h, t.y3.w, d);
        d = nn::relu_backward(t.y3, d);
        d = conv3_.backward(t.p2, d);
        d = nn::avgpool2_backward(t.y2.h, t.y2.w, d);
        d = nn::relu_backward(t.y2, d);
        d = conv2_.backward(t.p1, d);
        d = nn::avgpool2_backward(t.y1.h, t.y1.w, d);
        d = nn::relu_backward(t.y1, d);
        conv1_.backward(t.x0, d);
    }

    void collect_params(std::vector<nn::Param*>& out) override {
        conv1_.collect(out);
        conv2_.collect(out);
        conv3_.collect(out);
        head_.collect(out);
    }

    void init(Rng& rng) override {
        conv1_.init(rng);
        conv2_.init(rng);
        conv3_.init(rng);
        head_.init(rng);
    }

private:
    int in_ch_;
    nn::Conv3x3 conv1_, conv2_, conv3_;
    nn::Linear head_;
};

// Fixed sinusoidal embedding of the (row, col) patch grid; first half of the
// dims encodes the row index, second half the column index.
nn::MatF positional_grid(int rows, int cols, int dim) {
    nn::MatF pe(rows * cols, dim);
    int half = dim / 2;
    auto fill = [&](int r, int c) {
        int tok = r * cols + c;
        for (int i = 0; i < half / 2; ++i) {
            double freq = std::pow(10000.0, -2.0 * i / half);
            pe(tok, 2 * i) = static_cast<float>(std::sin(r * freq));
            pe(tok, 2 * i + 1) = static_cast<float>(std::cos(r * freq));
            pe(tok, half + 2 * i) = static_cast<float>(std::sin(c * freq));
            pe(tok, half + 2 * i + 1) = static_cast<float>(std::cos(c * freq));
        }
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) fill(r, c);
    return pe;
}

class ToyAttention final : public Backbone {
public:
    ToyAttention(const EncoderConfig& cfg, const std::string& prefix)
        : in_ch_(cfg.in_channels), dim_(cfg.embed_dim),
          patch_embed_(prefix + "patch", kPatch * kPatch * cfg.in_channels, cfg.embed_dim),
          head_(prefix + "head", cfg.embed_dim, cfg.embed_dim) {
        for (int b = 0; b < 2; ++b) {
            std::string bp = prefix + "block" + std::to_string(b) + ".";
            blocks_[b].ln1 = nn::LayerNorm(bp + "ln1", dim_);
            blocks_[b].attn = nn::SelfAttention(bp + "attn", dim_);
            blocks_[b].ln2 = nn::LayerNorm(bp + "ln2", dim_);
            blocks_[b].fc1 = nn::Linear(bp + "fc1", dim_, 2 * dim_);
            blocks_[b].fc2 = nn::Linear(bp + "fc2", 2 * dim_, dim_);
        }
    }

    struct BlockCache {
        nn::MatF x_in, ln1_out, x_mid, ln2_out, hidden;
        nn::SelfAttention::Cache attn;
    };
    struct PerImage {
        nn::MatF patches;
        BlockCache blocks[2];
        nn::MatF t_final;
        int tokens = 0;
    };
    struct TraceImpl : Trace {
        std::vector<PerImage> imgs;
        nn::MatF pooled;
    };

    nn::MatF forward(const std::vector<const Image*>& batch,
                     std::unique_ptr<Trace>* trace) const override {
        check_same_shape(batch, in_ch_);
        const Image& first = *batch.front();
        if (first.height % kPatch != 0 || first.width % kPatch != 0)
            throw std::invalid_argument("ToyAttention: image sides must be multiples of " +
                                        std::to_string(kPatch));
        int gr = first.height / kPatch, gc = first.width / kPatch;
        nn::MatF pe = positional_grid(gr, gc, dim_);

        auto t = std::make_unique<TraceImpl>();
        t->imgs.resize(batch.size());
        nn::MatF pooled(static_cast<Eigen::Index>(batch.size()), dim_);
        for (size_t bi = 0; bi < batch.size(); ++bi) {
            PerImage& pi = t->imgs[bi];
            pi.tokens = gr * gc;
            pi.patches = patchify(*batch[bi], gr, gc);
            nn::MatF x = patch_embed_.forward(pi.patches) + pe;
            for (int b = 0; b < 2; ++b) {
                BlockCache& bc = pi.blocks[b];
                bc.x_in = x;
                bc.ln1_out = blocks_[b].ln1.forward(x);
                nn::MatF ao = blocks_[b].attn.forward(bc.ln1_out, bc.attn);
                bc.x_mid = bc.x_in + ao;
                bc.ln2_out = blocks_[b].ln2.forward(bc.x_mid);
                bc.hidden = nn::relu_forward(blocks_[b].fc1.forward(bc.ln2_out));
                x = bc.x_mid + blocks_[b].fc2.forward(bc.hidden);
            }
            pi.t_final = x;
            pooled.row(static_cast<Eigen::Index>(bi)) = x.colwise().mean();
        }
        nn::MatF raw = head_.forward(pooled);
        if (trace) {
            // Pooled activations are cheap to rebuild; keep them for backward.
            t->pooled = pooled;
            *trace = std::move(t);
        }
        return raw;
    }

    void backward(const nn::MatF& d_raw, const Trace& trace) override {
        const auto& t = static_cast<const TraceImpl&>(trace);
        nn::MatF d_pooled = head_.backward(t.pooled, d_raw);
        for (size_t bi = 0; bi < t.imgs.size(); ++bi) {
            const PerImage& pi = t.imgs[bi];
            nn::MatF dx = nn::MatF::Zero(pi.tokens, dim_);
            dx.rowwise() += d_pooled.row(static_cast<Eigen::Index>(bi)) /
                            static_cast<float>(pi.tokens);
            for (int b = 1; b >= 0; --b) {
                const BlockCache& bc = pi.blocks[b];
                nn::MatF d_hidden = blocks_[b].fc2.backward(bc.hidden, dx);
                nn::MatF d_h_pre = nn::relu_backward(bc.hidden, d_hidden);
                nn::MatF d_ln2 = blocks_[b].fc1.backward(bc.ln2_out, d_h_pre);
                nn::MatF d_mid = dx + blocks_[b].ln2.backward(bc.x_mid, d_ln2);
                nn::MatF d_ln1 = blocks_[b].attn.backward(bc.attn, d_mid);
                dx = d_mid + blocks_[b].ln1.backward(bc.x_in, d_ln1);
            }
            patch_embed_.backward(pi.patches, dx);
        }
    }

    void collect_params(std::vector<nn::Param*>& out) override {
        patch_embed_.collect(out);
        for (auto& b : blocks_) {
            b.ln1.collect(out);
            b.attn.collect(out);
            b.ln2.collect(out);
            b.fc1.collect(out);
            b.fc2.collect(out);
        }
        head_.collect(out);
    }

    void init(Rng& rng) override {
        patch_embed_.init(rng);
        for (auto& b : blocks_) {
            b.attn.init(rng);
            b.fc1.init(rng);
            b.fc2.init(rng);
        }
        head_.init(rng);
    }

private:
    nn::MatF patchify(const Image& img, int gr, int gc) const {
        nn::MatF out(gr * gc, kPatch * kPatch * in_ch_);
        for (int r = 0; r < gr; ++r)
            for (int c = 0; c < gc; ++c) {
                int tok = r * gc + c;
                int col = 0;
                for (int py = 0; py < kPatch; ++py)
                    for (int px = 0; px < kPatch; ++px)
                        for (int ch = 0; ch < in_ch_; ++ch)
                            out(tok, col++) = img.at(r * kPatch + py, c * kPatch + px, ch);
            }
        return out;
    }

    struct Block {
        nn::LayerNorm ln1;
        nn::SelfAttention attn;
        nn::LayerNorm ln2;
        nn::Linear fc1, fc2;
    };

    int in_ch_;
    int dim_;
    nn::Linear patch_embed_;
    Block blocks_[2];
    nn::Linear head_;
};

std::shared_ptr<Backbone> make_backbone(const EncoderConfig& cfg, const std::string& prefix) {
    if (cfg.backbone == BackboneKind::ToyConv) return std::make_shared<ToyConv>(cfg, prefix);
    return std::make_shared<ToyAttention>(cfg, prefix);
}

}  // namespace

std::string to_string(BackboneKind k) {
    return k == BackboneKind::ToyConv ? "toy_conv" : "toy_attention";
}

BackboneKind backbone_from_string(const std::string& s) {
    if (s == "toy_conv") return BackboneKind::ToyConv;
    if (s == "toy_attention") return BackboneKind::ToyAttention;
    throw std::invalid_argument("unknown backbone: " + s);
}

void EncoderConfig::validate() const {
    if (embed_dim < 8) throw std::invalid_argument("encoder: embed_dim must be >= 8");
    if (in_channels < 1) throw std::invalid_argument("encoder: in_channels must be >= 1");
    if (backbone == BackboneKind::ToyAttention) {
        if (!pad_inputs_to_full)
            throw std::invalid_argument(
                "encoder: toy_attention requires pad_inputs_to_full (fixed positional grid)");
        if (embed_dim % 4 != 0)
            throw std::invalid_argument("encoder: toy_attention requires embed_dim divisible by 4");
    }
}

DualEncoder::DualEncoder(const EncoderConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    if (cfg_.share_weights) {
        ground_ = make_backbone(cfg_, "shared.");
        ground_->init(rng);
        aerial_ = ground_;
    } else {
        ground_ = make_backbone(cfg_, "ground.");
        ground_->init(rng);
        aerial_ = make_backbone(cfg_, "aerial.");
        aerial_->init(rng);
    }
}

int64_t DualEncoder::param_count() const {
    std::vector<nn::Param*> params;
    const_cast<DualEncoder*>(this)->collect_params(params);
    int64_t total = 0;
    for (nn::Param* p : params) total += p->count();
    return total;
}

EmbeddingBatch DualEncoder::normalize_rows(const nn::MatF& raw) const {
    if (!raw.allFinite()) throw std::runtime_error("encoder: non-finite activations");
    EmbeddingBatch out = raw.cast<double>();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double n = out.row(i).norm();
        if (n < 1e-12) throw std::runtime_error("encoder: zero-norm embedding");
        out.row(i) /= n;
    }
    return out;
}

EmbeddingBatch DualEncoder::encode_ground(const std::vector<Panorama>& batch) const {
    std::vector<const Image*> imgs;
    imgs.reserve(batch.size());
    for (const Panorama& p : batch) imgs.push_back(&p.image);
    return normalize_rows(ground_->forward(imgs, nullptr));
}

EmbeddingBatch DualEncoder::encode_aerial(const std::vector<Aerial>& batch) const {
    std::vector<const Image*> imgs;
    imgs.reserve(batch.size());
    for (const Aerial& a : batch) imgs.push_back(&a.image);
    return normalize_rows(aerial_->forward(imgs, nullptr));
}

DualEncoder::Forward DualEncoder::forward_ground(const std::vector<const Image*>& batch) {
    Forward f;
    f.ground = true;
    f.raw = ground_->forward(batch, &f.trace);
    f.embeddings = normalize_rows(f.raw);
    return f;
}

DualEncoder::Forward DualEncoder::forward_aerial(const std::vector<const Image*>& batch) {
    Forward f;
    f.ground = false;
    f.raw = aerial_->forward(batch, &f.trace);
    f.embeddings = normalize_rows(f.raw);
    return f;
}

void DualEncoder::backward(const Forward& fwd, const EmbeddingBatch& d_embeddings) {
    // Chain dL/d(unit rows) through the normalization, in double, then drop
    // to float for the backbone.
    Eigen::MatrixXd raw = fwd.raw.cast<double>();
    Eigen::MatrixXd d_raw(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        double n = raw.row(i).norm();
        Eigen::RowVectorXd unit = raw.row(i) / n;
        double proj = d_embeddings.row(i).dot(unit);
        d_raw.row(i) = (d_embeddings.row(i) - proj * unit) / n;
    }
    nn::MatF d_raw_f = d_raw.cast<float>();
    (fwd.ground ? ground_ : aerial_)->backward(d_raw_f, *fwd.trace);
}

void DualEncoder::collect_params(std::vector<nn::Param*>& out) {
    ground_->collect_params(out);
    if (!cfg_.share_weights) aerial_->collect_params(out);
}

void DualEncoder::load_params_from(const DualEncoder& other) {
    if (!(cfg_ == other.cfg_)) throw std::invalid_argument("encoder: config mismatch in load_params_from");
    std::vector<nn::Param*> mine, theirs;
    collect_params(mine);
    const_cast<DualEncoder&>(other).collect_params(theirs);
    for (size_t i = 0; i < mine.size(); ++i) mine[i]->v = theirs[i]->v;
}

nlohmann::ordered_json encoder_config_to_json(const EncoderConfig& cfg) {
    return {{"backbone", to_string(cfg.backbone)},
            {"embed_dim", cfg.embed_dim},
            {"share_weights", cfg.share_weights},
            {"pad_inputs_to_full", cfg.pad_inputs_to_full},
            {"in_channels", cfg.in_channels}};
}

EncoderConfig encoder_config_from_json(const nlohmann::ordered_json& j) {
    EncoderConfig cfg;
    cfg.backbone = backbone_from_string(j.at("backbone").get<std::string>());
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.share_weights = j.at("share_weights").get<bool>();
    cfg.pad_inputs_to_full = j.at("pad_inputs_to_full").get<bool>();
    cfg.in_channels = j.value("in_channels", 3);
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json loss_config_to_json(const LossConfig& cfg) {
    return {{"tau_q", cfg.tau_q}, {"tau_r", cfg.tau_r}, {"tau_v", cfg.tau_v},
            {"tau_c", cfg.tau_c}, {"w1", cfg.w1},       {"w2", cfg.w2},
            {"w3", cfg.w3},       {"symmetric", cfg.symmetric}};
}

LossConfig loss_config_from_json(const nlohmann::ordered_json& j) {
    LossConfig cfg;
    cfg.tau_q = j.value("tau_q", 0.07);
    cfg.tau_r = j.value("tau_r", 0.07);
    cfg.tau_v = j.value("tau_v", 0.07);
    cfg.tau_c = j.value("tau_c", 0.07);
    cfg.w1 = j.value("w1", 0.5);
    cfg.w2 = j.value("w2", 0.5);
    cfg.w3 = j.value("w3", 0.25);
    cfg.symmetric = j.value("symmetric", false);
    return cfg;
}

void save_checkpoint(const std::string& path, DualEncoder& enc, const LossConfig& loss_cfg) {
    Archive ar;
    ar.meta["kind"] = "checkpoint";
    ar.meta["encoder"] = encoder_config_to_json(enc.config());
    ar.meta["loss"] = loss_config_to_json(loss_cfg);
    std::vector<nn::Param*> params;
    enc.collect_params(params);
    for (nn::Param* p : params) ar.add(p->name, p->v);
    ar.save(path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    Archive ar = Archive::load(path);
    if (ar.meta.value("kind", "") != "checkpoint" && ar.meta.value("kind", "") != "train_state")
        throw std::runtime_error("checkpoint: unexpected archive kind in " + path);
    LoadedCheckpoint out;
    EncoderConfig cfg = encoder_config_from_json(ar.meta.at("encoder"));
    out.loss_cfg = loss_config_from_json(ar.meta.at("loss"));
    out.encoder = std::make_unique<DualEncoder>(cfg, 0);
    std::vector<nn::Param*> params;
    out.encoder->collect_params(params);
    for (nn::Param* p : params) {
        const Eigen::MatrixXf* stored = ar.find(p->name);
        if (!stored) throw std::runtime_error("checkpoint: missing parameter " + p->name);
        if (stored->rows() != p->v.rows() || stored->cols() != p->v.cols())
            throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
        p->v = *stored;
    }
    return out;
}

}  // namespace congeo
