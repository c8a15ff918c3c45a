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

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"
#include "core/losses.hpp"
#include "core/nn.hpp"

namespace congeo {

enum class BackboneKind { ToyConv, ToyAttention };

std::string to_string(BackboneKind k);
BackboneKind backbone_from_string(const std::string& s);

/// Desk-scale stand-ins for the full backbones. Layer sizes are fixed and
/// documented so parameter counts are testable:
///   ToyConv:      3x [3x3 conv (8/16/32 ch) + ReLU + 2x2 avg pool],
///                 global avg pool, linear head to embed_dim. The input is
///                 augmented with 4 fixed sinusoidal coordinate channels so
///                 absolute position is representable after global pooling;
///                 orientation invariance is learned, never built in.
///   ToyAttention: 8x8 patch embedding + fixed sinusoidal positional grid,
///                 2 pre-LN blocks (single-head attention, 2x-wide ReLU MLP),
///                 mean token pooling, linear head. Requires padded inputs.
struct EncoderConfig {
    BackboneKind backbone = BackboneKind::ToyConv;
    int embed_dim = 32;
    bool share_weights = true;
    bool pad_inputs_to_full = false;
    int in_channels = 3;

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

class Backbone {
public:
    virtual ~Backbone() = default;

    struct Trace {
        virtual ~Trace() = default;
    };

    /// Raw (pre-normalization) embeddings for a batch of same-shaped images.
    /// Pass a trace pointer to enable a later backward pass.
    virtual nn::MatF forward(const std::vector<const Image*>& batch,
                             std::unique_ptr<Trace>* trace) const = 0;
    virtual void backward(const nn::MatF& d_raw, const Trace& trace) = 0;
    virtual void collect_params(std::vector<nn::Param*>& out) = 0;
    virtual void init(Rng& rng) = 0;
};

/// Siamese pair of encoders mapping images to unit-norm embeddings. With
/// share_weights the two branches alias one parameter set.
class DualEncoder {
public:
    DualEncoder(const EncoderConfig& cfg, uint64_t seed);

    const EncoderConfig& config() const { return cfg_; }
    bool shares_weights() const { return cfg_.share_weights; }
    int embed_dim() const { return cfg_.embed_dim; }
    int64_t param_count() const;

    /// Eval-mode encodes; rows are unit-norm within 1e-6, double precision.
    EmbeddingBatch encode_ground(const std::vector<Panorama>& batch) const;
    EmbeddingBatch encode_aerial(const std::vector<Aerial>& batch) const;

    /// One differentiable forward pass through a branch.
    struct Forward {
        EmbeddingBatch embeddings;             // unit-norm rows (n x D)
        nn::MatF raw;                          // pre-normalization output
        std::unique_ptr<Backbone::Trace> trace;
        bool ground = true;
    };
    Forward forward_ground(const std::vector<const Image*>& batch);
    Forward forward_aerial(const std::vector<const Image*>& batch);

    /// Accumulate parameter gradients for dL/d(embeddings) of a prior forward.
    void backward(const Forward& fwd, const EmbeddingBatch& d_embeddings);

    void collect_params(std::vector<nn::Param*>& out);

    /// Copy parameter values from another encoder with the same config.
    void load_params_from(const DualEncoder& other);

private:
    EmbeddingBatch normalize_rows(const nn::MatF& raw) const;

    EncoderConfig cfg_;
    std::shared_ptr<Backbone> ground_;
    std::shared_ptr<Backbone> aerial_;  // == ground_ when share_weights
};

/// Checkpoint archive: parameter arrays keyed by canonical names plus the
/// encoder and loss configs embedded as JSON. Version field mandatory.
void save_checkpoint(const std::string& path, DualEncoder& enc, const LossConfig& loss_cfg);
struct LoadedCheckpoint {
    std::unique_ptr<DualEncoder> encoder;
    LossConfig loss_cfg;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

/// JSON <-> config helpers shared by checkpoints and experiment configs.
nlohmann::ordered_json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::ordered_json& j);

}  // namespace congeo
