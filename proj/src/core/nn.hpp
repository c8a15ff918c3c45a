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

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace congeo::nn {

using MatF = Eigen::MatrixXf;

/// Batched feature map, NCHW contiguous.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    Eigen::VectorXf data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(Eigen::VectorXf::Zero(static_cast<Eigen::Index>(n_) * c_ * h_ * w_)) {}

    float& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<Eigen::Index>(in) * c + ic) * h + iy) * w + ix];
    }
    float at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<Eigen::Index>(in) * c + ic) * h + iy) * w + ix];
    }
    Eigen::Index size() const { return data.size(); }
};

/// A named parameter array with its accumulated gradient.
struct Param {
    std::string name;
    MatF v;
    MatF g;
    bool decay = true;

    Param() = default;
    Param(std::string n, int rows, int cols, bool decay_ = true)
        : name(std::move(n)), v(MatF::Zero(rows, cols)), g(MatF::Zero(rows, cols)), decay(decay_) {}
    void zero_grad() { g.setZero(); }
    Eigen::Index count() const { return v.size(); }
};

/// 3x3 convolution, stride 1, zero 'same' padding, via im2col + GEMM.
struct Conv3x3 {
    int in_ch = 0, out_ch = 0;
    Param w;  // (in_ch * 9) x out_ch
    Param b;  // 1 x out_ch

    Conv3x3() = default;
    Conv3x3(const std::string& name, int in_c, int out_c);
    void init(Rng& rng);
    Tensor4 forward(const Tensor4& x) const;
    Tensor4 backward(const Tensor4& x, const Tensor4& dy);
    void collect(std::vector<Param*>& out);
};

Tensor4 relu_forward(const Tensor4& x);
Tensor4 relu_backward(const Tensor4& y, const Tensor4& dy);
MatF relu_forward(const MatF& x);
MatF relu_backward(const MatF& y, const MatF& dy);

/// 2x2 average pooling, stride 2, ceil mode (trailing window may be 1 wide).
Tensor4 avgpool2_forward(const Tensor4& x);
Tensor4 avgpool2_backward(int in_h, int in_w, const Tensor4& dy);

/// Mean over all spatial positions: (n, c, h, w) -> (n x c).
MatF global_avgpool_forward(const Tensor4& x);
Tensor4 global_avgpool_backward(int c, int h, int w, const MatF& dy);

struct Linear {
    Param w;  // in x out
    Param b;  // 1 x out

    Linear() = default;
    Linear(const std::string& name, int in, int out);
    void init(Rng& rng);
    MatF forward(const MatF& x) const;
    MatF backward(const MatF& x, const MatF& dy);
    void collect(std::vector<Param*>& out);
};

/// Per-row layer normalization with learnable scale and shift.
struct LayerNorm {
    Param gamma;  // 1 x dim
    Param beta;   // 1 x dim

    LayerNorm() = default;
    LayerNorm(const std::string& name, int dim);
    MatF forward(const MatF& x) const;
    MatF backward(const MatF& x, const MatF& dy);
    void collect(std::vector<Param*>& out);
};

/// Single-head self-attention over one token sequence (T x d).
struct SelfAttention {
    Linear wq, wk, wv, wo;

    struct Cache {
        MatF x, q, k, v, attn, head;
    };

    SelfAttention() = default;
    SelfAttention(const std::string& name, int dim);
    void init(Rng& rng);
    MatF forward(const MatF& x, Cache& cache) const;
    MatF backward(const Cache& cache, const MatF& dy);
    void collect(std::vector<Param*>& out);
};

/// Decoupled-weight-decay adaptive-moment optimizer.
class AdamW {
public:
    AdamW() = default;
    AdamW(std::vector<Param*> params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8);

    void zero_grad();
    void step(double lr);

    int64_t step_count() const { return t_; }
    const std::vector<Param*>& params() const { return params_; }
    // Moment state, exposed for checkpointing (aligned with params()).
    std::vector<MatF>& moments_m() { return m_; }
    std::vector<MatF>& moments_u() { return u_; }
    void set_step_count(int64_t t) { t_ = t; }

private:
    std::vector<Param*> params_;
    std::vector<MatF> m_, u_;
    double wd_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
};

}  // namespace congeo::nn
