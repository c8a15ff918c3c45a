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

#include "core/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace congeo {

namespace {

// Inputs are produced unit-norm by the encoders; the slack here admits
// finite-difference probes while still catching unnormalized batches.
constexpr double kNormTolerance = 1e-3;

void check_batch(const EmbeddingBatch& m, const char* name) {
    if (m.rows() < 1 || m.cols() < 2)
        throw std::invalid_argument(std::string("losses: ") + name + " must be at least 1x2");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double n = m.row(i).norm();
        if (std::abs(n - 1.0) > kNormTolerance)
            throw std::invalid_argument(std::string("losses: ") + name + " row " + std::to_string(i) +
                                        " is not unit-norm (|v| = " + std::to_string(n) + ")");
    }
}

void check_pair(const EmbeddingBatch& a, const EmbeddingBatch& c, const PositiveAssignment& pos,
                double tau) {
    check_batch(a, "anchors");
    check_batch(c, "candidates");
    if (a.cols() != c.cols()) throw std::invalid_argument("losses: embedding dimensions differ");
    if (!(tau > 0.0)) throw std::invalid_argument("losses: temperature must be positive");
    if (pos.multi()) {
        if (static_cast<Eigen::Index>(pos.pos_sets.size()) != a.rows())
            throw std::invalid_argument("losses: positive sets do not match anchor count");
        for (const auto& set : pos.pos_sets) {
            if (set.empty()) throw std::invalid_argument("losses: empty positive set");
            for (int j : set)
                if (j < 0 || j >= c.rows())
                    throw std::invalid_argument("losses: positive index out of range");
        }
    } else {
        if (static_cast<Eigen::Index>(pos.pos_index.size()) != a.rows())
            throw std::invalid_argument("losses: positive indices do not match anchor count");
        for (int j : pos.pos_index)
            if (j < 0 || j >= c.rows()) throw std::invalid_argument("losses: positive index out of range");
    }
}

Eigen::MatrixXd row_normalized(const EmbeddingBatch& m) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= out.row(i).norm();
    return out;
}

// d/dv of f(v / |v|): project through the normalization Jacobian
// (I - u u^T) / |v| with u = v / |v|.
Eigen::MatrixXd chain_through_normalization(const EmbeddingBatch& raw, const Eigen::MatrixXd& unit,
                                            const Eigen::MatrixXd& d_unit) {
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        double n = raw.row(i).norm();
        double proj = d_unit.row(i).dot(unit.row(i));
        out.row(i) = (d_unit.row(i) - proj * unit.row(i)) / n;
    }
    return out;
}

struct SoftmaxRows {
    Eigen::MatrixXd p;           // row-wise softmax of logits / tau
    Eigen::VectorXd log_denom;   // log sum exp per row (shifted form)
    Eigen::VectorXd row_max;
};

SoftmaxRows softmax_rows(const Eigen::MatrixXd& logits, double tau) {
    SoftmaxRows s;
    Eigen::MatrixXd z = logits / tau;
    s.row_max = z.rowwise().maxCoeff();
    z.colwise() -= s.row_max;
    s.p = z.array().exp().matrix();
    Eigen::VectorXd denom = s.p.rowwise().sum();
    s.log_denom = denom.array().log().matrix();
    for (Eigen::Index i = 0; i < s.p.rows(); ++i) s.p.row(i) /= denom(i);
    return s;
}

}  // namespace

PositiveAssignment PositiveAssignment::identity(int n) {
    PositiveAssignment pa;
    pa.pos_index.resize(n);
    for (int i = 0; i < n; ++i) pa.pos_index[i] = i;
    return pa;
}

PositiveAssignment PositiveAssignment::from_indices(std::vector<int> idx) {
    PositiveAssignment pa;
    pa.pos_index = std::move(idx);
    return pa;
}

double info_nce(const EmbeddingBatch& anchors, const EmbeddingBatch& candidates,
                const PositiveAssignment& pos, double tau) {
    check_pair(anchors, candidates, pos, tau);
    Eigen::MatrixXd a = row_normalized(anchors);
    Eigen::MatrixXd c = row_normalized(candidates);
    Eigen::MatrixXd logits = a * c.transpose();
    SoftmaxRows s = softmax_rows(logits, tau);

    double total = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (pos.multi()) {
            double num = 0.0;
            for (int j : pos.pos_sets[i]) num += std::exp(logits(i, j) / tau - s.row_max(i));
            total += -(std::log(num) - s.log_denom(i));
        } else {
            int j = pos.pos_index[i];
            total += -(logits(i, j) / tau - s.row_max(i) - s.log_denom(i));
        }
    }
    return total / static_cast<double>(a.rows());
}

LossGrad info_nce_grad(const EmbeddingBatch& anchors, const EmbeddingBatch& candidates,
                       const PositiveAssignment& pos, double tau) {
    check_pair(anchors, candidates, pos, tau);
    Eigen::MatrixXd a = row_normalized(anchors);
    Eigen::MatrixXd c = row_normalized(candidates);
    Eigen::MatrixXd logits = a * c.transpose();
    SoftmaxRows s = softmax_rows(logits, tau);
    const double n = static_cast<double>(a.rows());

    // dL/dz with z = logits / tau: softmax minus the positive distribution.
    Eigen::MatrixXd g = s.p;
    double value = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (pos.multi()) {
            double num = 0.0;
            for (int j : pos.pos_sets[i]) num += std::exp(logits(i, j) / tau - s.row_max(i));
            for (int j : pos.pos_sets[i])
                g(i, j) -= std::exp(logits(i, j) / tau - s.row_max(i)) / num;
            value += -(std::log(num) - s.log_denom(i));
        } else {
            int j = pos.pos_index[i];
            g(i, j) -= 1.0;
            value += -(logits(i, j) / tau - s.row_max(i) - s.log_denom(i));
        }
    }
    g /= n;

    LossGrad out;
    out.value = value / n;
    Eigen::MatrixXd d_a_unit = (g * c) / tau;
    Eigen::MatrixXd d_c_unit = (g.transpose() * a) / tau;
    out.d_anchors = chain_through_normalization(anchors, a, d_a_unit);
    out.d_candidates = chain_through_normalization(candidates, c, d_c_unit);
    out.d_tau = -(g.array() * logits.array()).sum() / (tau * tau);
    return out;
}

namespace {

double directional_or_symmetric(const EmbeddingBatch& a, const EmbeddingBatch& c, double tau,
                                bool symmetric) {
    int n = static_cast<int>(a.rows());
    if (c.rows() != a.rows())
        throw std::invalid_argument("losses: paired batches must have matching row counts");
    PositiveAssignment id = PositiveAssignment::identity(n);
    double fwd = info_nce(a, c, id, tau);
    if (!symmetric) return fwd;
    return 0.5 * (fwd + info_nce(c, a, id, tau));
}

}  // namespace

double single_modal_ground_loss(const EmbeddingBatch& q_star, const EmbeddingBatch& q, double tau_q,
                                bool symmetric) {
    return directional_or_symmetric(q_star, q, tau_q, symmetric);
}

double single_modal_aerial_loss(const EmbeddingBatch& r_star, const EmbeddingBatch& r, double tau_r,
                                bool symmetric) {
    return directional_or_symmetric(r_star, r, tau_r, symmetric);
}

double vanilla_cross_loss(const EmbeddingBatch& q, const EmbeddingBatch& r, double tau_v,
                          bool symmetric) {
    return directional_or_symmetric(q, r, tau_v, symmetric);
}

double cross_modal_loss(const EmbeddingBatch& q_star, const EmbeddingBatch& r, double tau_c,
                        bool symmetric) {
    return directional_or_symmetric(q_star, r, tau_c, symmetric);
}

double total_loss(const LossComponents& parts, const LossConfig& cfg) {
    if (!(cfg.w1 >= 0.0) || !(cfg.w2 >= 0.0) || !(cfg.w3 >= 0.0) || !std::isfinite(cfg.w1) ||
        !std::isfinite(cfg.w2) || !std::isfinite(cfg.w3))
        throw std::invalid_argument("total_loss: weights must be finite and nonnegative");
    return parts.vanilla + cfg.w1 * parts.single_q + cfg.w2 * parts.single_r + cfg.w3 * parts.cross;
}

double soft_triplet_loss(const EmbeddingBatch& q, const EmbeddingBatch& r) {
    return soft_triplet_loss_grad(q, r).value;
}

LossGrad soft_triplet_loss_grad(const EmbeddingBatch& q, const EmbeddingBatch& r) {
    check_batch(q, "queries");
    check_batch(r, "references");
    if (q.rows() != r.rows() || q.cols() != r.cols())
        throw std::invalid_argument("soft_triplet_loss: paired batches must match in shape");
    const int n = static_cast<int>(q.rows());
    if (n < 2) throw std::invalid_argument("soft_triplet_loss: need at least 2 pairs for negatives");

    Eigen::MatrixXd qu = row_normalized(q);
    Eigen::MatrixXd ru = row_normalized(r);

    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            dist(i, j) = std::sqrt(std::max(1e-24, (qu.row(i) - ru.row(j)).squaredNorm()));

    Eigen::MatrixXd d_qu = Eigen::MatrixXd::Zero(n, q.cols());
    Eigen::MatrixXd d_ru = Eigen::MatrixXd::Zero(n, q.cols());
    double total = 0.0;
    const double count = static_cast<double>(n) * (n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double m = dist(i, i) - dist(i, j);
            // log(1 + e^m), computed stably.
            total += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
            double sig = 1.0 / (1.0 + std::exp(-m));  // d loss / d m
            double w = sig / count;
            Eigen::RowVectorXd u_pos = (qu.row(i) - ru.row(i)) / dist(i, i);
            Eigen::RowVectorXd u_neg = (qu.row(i) - ru.row(j)) / dist(i, j);
            d_qu.row(i) += w * (u_pos - u_neg);
            d_ru.row(i) -= w * u_pos;
            d_ru.row(j) += w * u_neg;
        }
    }

    LossGrad out;
    out.value = total / count;
    out.d_anchors = chain_through_normalization(q, qu, d_qu);
    out.d_candidates = chain_through_normalization(r, ru, d_ru);
    out.d_tau = 0.0;
    return out;
}

}  // namespace congeo
