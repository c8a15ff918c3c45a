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

#include "core/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace congeo::nn {

namespace {

// He-style normal init scaled by fan-in.
void init_matrix(MatF& m, double fan_in, Rng& rng) {
    double std_dev = std::sqrt(2.0 / fan_in);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = static_cast<float>(std_dev * rng.gaussian());
}

// Patch rows of x laid out as row r = (img * h + y) * w + x, col = (ic * 3 + ky) * 3 + kx.
MatF im2col3x3(const Tensor4& x) {
    const int hw = x.h * x.w;
    MatF cols = MatF::Zero(static_cast<Eigen::Index>(x.n) * hw, static_cast<Eigen::Index>(x.c) * 9);
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < x.c; ++ic) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    Eigen::Index col = (static_cast<Eigen::Index>(ic) * 3 + ky) * 3 + kx;
                    for (int y = 0; y < x.h; ++y) {
                        int iy = y + ky - 1;
                        if (iy < 0 || iy >= x.h) continue;
                        Eigen::Index row0 = (static_cast<Eigen::Index>(in) * x.h + y) * x.w;
                        int x_lo = std::max(0, 1 - kx);
                        int x_hi = std::min(x.w, x.w + 1 - kx);
                        for (int xx = x_lo; xx < x_hi; ++xx)
                            cols(row0 + xx, col) = x.at(in, ic, iy, xx + kx - 1);
                    }
                }
            }
        }
    }
    return cols;
}

void col2im3x3(const MatF& cols, Tensor4& dx) {
    for (int in = 0; in < dx.n; ++in) {
        for (int ic = 0; ic < dx.c; ++ic) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    Eigen::Index col = (static_cast<Eigen::Index>(ic) * 3 + ky) * 3 + kx;
                    for (int y = 0; y < dx.h; ++y) {
                        int iy = y + ky - 1;
                        if (iy < 0 || iy >= dx.h) continue;
                        Eigen::Index row0 = (static_cast<Eigen::Index>(in) * dx.h + y) * dx.w;
                        int x_lo = std::max(0, 1 - kx);
                        int x_hi = std::min(dx.w, dx.w + 1 - kx);
                        for (int xx = x_lo; xx < x_hi; ++xx)
                            dx.at(in, ic, iy, xx + kx - 1) += cols(row0 + xx, col);
                    }
                }
            }
        }
    }
}

// (n*h*w) x c matrix view of a tensor's rows, NCHW <-> row-major conversion.
MatF to_rows(const Tensor4& x) {
    MatF rows(static_cast<Eigen::Index>(x.n) * x.h * x.w, x.c);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx)
                    rows((static_cast<Eigen::Index>(in) * x.h + y) * x.w + xx, ic) = x.at(in, ic, y, xx);
    return rows;
}

Tensor4 from_rows(const MatF& rows, int n, int c, int h, int w) {
    Tensor4 out(n, c, h, w);
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    out.at(in, ic, y, xx) = rows((static_cast<Eigen::Index>(in) * h + y) * w + xx, ic);
    return out;
}

}  // namespace

Conv3x3::Conv3x3(const std::string& name, int in_c, int out_c)
    : in_ch(in_c), out_ch(out_c), w(name + ".w", in_c * 9, out_c), b(name + ".b", 1, out_c, false) {}

void Conv3x3::init(Rng& rng) {
    init_matrix(w.v, in_ch * 9.0, rng);
    b.v.setZero();
}

Tensor4 Conv3x3::forward(const Tensor4& x) const {
    if (x.c != in_ch) throw std::invalid_argument("Conv3x3: channel mismatch");
    MatF cols = im2col3x3(x);
    MatF y = cols * w.v;
    y.rowwise() += b.v.row(0);
    return from_rows(y, x.n, out_ch, x.h, x.w);
}

Tensor4 Conv3x3::backward(const Tensor4& x, const Tensor4& dy) {
    MatF cols = im2col3x3(x);
    MatF dyr = to_rows(dy);
    w.g.noalias() += cols.transpose() * dyr;
    b.g.row(0) += dyr.colwise().sum();
    MatF dcols = dyr * w.v.transpose();
    Tensor4 dx(x.n, x.c, x.h, x.w);
    col2im3x3(dcols, dx);
    return dx;
}

void Conv3x3::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
}

Tensor4 relu_forward(const Tensor4& x) {
    Tensor4 y = x;
    y.data = y.data.cwiseMax(0.0f);
    return y;
}

Tensor4 relu_backward(const Tensor4& y, const Tensor4& dy) {
    Tensor4 dx = dy;
    for (Eigen::Index i = 0; i < dx.data.size(); ++i)
        if (y.data[i] <= 0.0f) dx.data[i] = 0.0f;
    return dx;
}

MatF relu_forward(const MatF& x) { return x.cwiseMax(0.0f); }

MatF relu_backward(const MatF& y, const MatF& dy) {
    return (y.array() > 0.0f).select(dy, MatF::Zero(dy.rows(), dy.cols()));
}

Tensor4 avgpool2_forward(const Tensor4& x) {
    int oh = (x.h + 1) / 2, ow = (x.w + 1) / 2;
    Tensor4 y(x.n, x.c, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int oy = 0; oy < oh; ++oy) {
                int y0 = 2 * oy, y1 = std::min(x.h, y0 + 2);
                for (int ox = 0; ox < ow; ++ox) {
                    int x0 = 2 * ox, x1 = std::min(x.w, x0 + 2);
                    float acc = 0.0f;
                    for (int yy = y0; yy < y1; ++yy)
                        for (int xx = x0; xx < x1; ++xx) acc += x.at(in, ic, yy, xx);
                    y.at(in, ic, oy, ox) = acc / static_cast<float>((y1 - y0) * (x1 - x0));
                }
            }
    return y;
}

Tensor4 avgpool2_backward(int in_h, int in_w, const Tensor4& dy) {
    Tensor4 dx(dy.n, dy.c, in_h, in_w);
    for (int in = 0; in < dy.n; ++in)
        for (int ic = 0; ic < dy.c; ++ic)
            for (int oy = 0; oy < dy.h; ++oy) {
                int y0 = 2 * oy, y1 = std::min(in_h, y0 + 2);
                for (int ox = 0; ox < dy.w; ++ox) {
                    int x0 = 2 * ox, x1 = std::min(in_w, x0 + 2);
                    float g = dy.at(in, ic, oy, ox) / static_cast<float>((y1 - y0) * (x1 - x0));
                    for (int yy = y0; yy < y1; ++yy)
                        for (int xx = x0; xx < x1; ++xx) dx.at(in, ic, yy, xx) += g;
                }
            }
    return dx;
}

MatF global_avgpool_forward(const Tensor4& x) {
    MatF y = MatF::Zero(x.n, x.c);
    float inv = 1.0f / static_cast<float>(x.h * x.w);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            float acc = 0.0f;
            for (int yy = 0; yy < x.h; ++yy)
                for (int xx = 0; xx < x.w; ++xx) acc += x.at(in, ic, yy, xx);
            y(in, ic) = acc * inv;
        }
    return y;
}

Tensor4 global_avgpool_backward(int c, int h, int w, const MatF& dy) {
    Tensor4 dx(static_cast<int>(dy.rows()), c, h, w);
    float inv = 1.0f / static_cast<float>(h * w);
    for (int in = 0; in < dx.n; ++in)
        for (int ic = 0; ic < c; ++ic) {
            float g = dy(in, ic) * inv;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) dx.at(in, ic, yy, xx) = g;
        }
    return dx;
}

Linear::Linear(const std::string& name, int in, int out)
    : w(name + ".w", in, out), b(name + ".b", 1, out, false) {}

void Linear::init(Rng& rng) {
    init_matrix(w.v, static_cast<double>(w.v.rows()), rng);
    b.v.setZero();
}

MatF Linear::forward(const MatF& x) const {
    MatF y = x * w.v;
    y.rowwise() += b.v.row(0);
    return y;
}

MatF Linear::backward(const MatF& x, const MatF& dy) {
    w.g.noalias() += x.transpose() * dy;
    b.g.row(0) += dy.colwise().sum();
    return dy * w.v.transpose();
}

void Linear::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
}

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", 1, dim, false), beta(name + ".beta", 1, dim, false) {
    gamma.v.setOnes();
}

MatF LayerNorm::forward(const MatF& x) const {
    MatF y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        float mu = x.row(i).mean();
        float var = (x.row(i).array() - mu).square().mean();
        float inv = 1.0f / std::sqrt(var + 1e-5f);
        y.row(i) = ((x.row(i).array() - mu) * inv) * gamma.v.row(0).array() + beta.v.row(0).array();
    }
    return y;
}

MatF LayerNorm::backward(const MatF& x, const MatF& dy) {
    MatF dx(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        float mu = x.row(i).mean();
        float var = (x.row(i).array() - mu).square().mean();
        float inv = 1.0f / std::sqrt(var + 1e-5f);
        Eigen::ArrayXf xhat = (x.row(i).array() - mu) * inv;
        Eigen::ArrayXf g = dy.row(i).array() * gamma.v.row(0).array();
        float g_mean = g.mean();
        float gx_mean = (g * xhat).mean();
        dx.row(i) = (inv * (g - g_mean - xhat * gx_mean)).matrix();
        gamma.g.row(0).array() += dy.row(i).array() * xhat.transpose();
        beta.g.row(0) += dy.row(i);
    }
    return dx;
}

void LayerNorm::collect(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

SelfAttention::SelfAttention(const std::string& name, int dim)
    : wq(name + ".q", dim, dim), wk(name + ".k", dim, dim), wv(name + ".v", dim, dim),
      wo(name + ".o", dim, dim) {}

void SelfAttention::init(Rng& rng) {
    wq.init(rng);
    wk.init(rng);
    wv.init(rng);
    wo.init(rng);
}

MatF SelfAttention::forward(const MatF& x, Cache& cache) const {
    const float scale = 1.0f / std::sqrt(static_cast<float>(x.cols()));
    cache.x = x;
    cache.q = wq.forward(x);
    cache.k = wk.forward(x);
    cache.v = wv.forward(x);
    MatF scores = (cache.q * cache.k.transpose()) * scale;
    cache.attn = scores;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        float mx = scores.row(i).maxCoeff();
        Eigen::ArrayXf e = (scores.row(i).array() - mx).exp();
        cache.attn.row(i) = (e / e.sum()).matrix();
    }
    cache.head = cache.attn * cache.v;
    return wo.forward(cache.head);
}

MatF SelfAttention::backward(const Cache& cache, const MatF& dy) {
    const float scale = 1.0f / std::sqrt(static_cast<float>(cache.x.cols()));
    MatF dhead = wo.backward(cache.head, dy);
    MatF dattn = dhead * cache.v.transpose();
    MatF dv = cache.attn.transpose() * dhead;
    // Softmax backward per row: a .* (da - sum(da .* a)).
    MatF dscores(dattn.rows(), dattn.cols());
    for (Eigen::Index i = 0; i < dattn.rows(); ++i) {
        float dot = dattn.row(i).dot(cache.attn.row(i));
        dscores.row(i) = cache.attn.row(i).cwiseProduct(dattn.row(i).array().matrix()) -
                         dot * cache.attn.row(i);
    }
    dscores *= scale;
    MatF dq = dscores * cache.k;
    MatF dk = dscores.transpose() * cache.q;
    MatF dx = wq.backward(cache.x, dq);
    dx += wk.backward(cache.x, dk);
    dx += wv.backward(cache.x, dv);
    return dx;
}

void SelfAttention::collect(std::vector<Param*>& out) {
    wq.collect(out);
    wk.collect(out);
    wv.collect(out);
    wo.collect(out);
}

AdamW::AdamW(std::vector<Param*> params, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param* p : params_) {
        m_.emplace_back(MatF::Zero(p->v.rows(), p->v.cols()));
        u_.emplace_back(MatF::Zero(p->v.rows(), p->v.cols()));
    }
}

void AdamW::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void AdamW::step(double lr) {
    ++t_;
    const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    const float flr = static_cast<float>(lr), feps = static_cast<float>(eps_);
    for (size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        m_[i] = b1 * m_[i] + (1.0f - b1) * p.g;
        u_[i] = b2 * u_[i].array().matrix() + (1.0f - b2) * p.g.cwiseProduct(p.g);
        MatF mhat = m_[i] / bc1;
        MatF uhat = u_[i] / bc2;
        p.v.array() -= flr * (mhat.array() / (uhat.array().sqrt() + feps));
        if (p.decay && wd_ > 0.0) p.v.array() -= flr * static_cast<float>(wd_) * p.v.array();
    }
}

}  // namespace congeo::nn
