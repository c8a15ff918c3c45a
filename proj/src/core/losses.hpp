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
#include <vector>

namespace congeo {

/// N x D matrix with one embedding per row. Rows are expected unit-norm;
/// the losses re-normalize internally so dot products are cosine similarities.
using EmbeddingBatch = Eigen::MatrixXd;

/// Maps each anchor row to its positive(s) in the candidate batch.
struct PositiveAssignment {
    /// One positive per anchor (the usual one-to-one protocols).
    std::vector<int> pos_index;
    /// Optional multi-positive variant (semi-positive protocols): when
    /// non-empty it replaces pos_index and the numerator sums over the set.
    std::vector<std::vector<int>> pos_sets;

    static PositiveAssignment identity(int n);
    static PositiveAssignment from_indices(std::vector<int> idx);
    bool multi() const { return !pos_sets.empty(); }
};

/// Temperatures and mixture weights for the total objective.
struct LossConfig {
    double tau_q = 0.07;
    double tau_r = 0.07;
    double tau_v = 0.07;
    double tau_c = 0.07;
    double w1 = 0.5;
    double w2 = 0.5;
    double w3 = 0.25;
    /// Off by default: the printed objectives are one-directional. When set,
    /// each term is averaged with its anchor/candidate-swapped counterpart.
    bool symmetric = false;
};

/// Loss value plus exact gradients w.r.t. the (pre-normalization) inputs
/// and the temperature.
struct LossGrad {
    double value = 0.0;
    Eigen::MatrixXd d_anchors;
    Eigen::MatrixXd d_candidates;
    double d_tau = 0.0;
};

/// Mean over anchors of -log( exp(a.c_pos / tau) / sum_j exp(a.c_j / tau) ).
double info_nce(const EmbeddingBatch& anchors, const EmbeddingBatch& candidates,
                const PositiveAssignment& pos, double tau);
LossGrad info_nce_grad(const EmbeddingBatch& anchors, const EmbeddingBatch& candidates,
                       const PositiveAssignment& pos, double tau);

/// Ground-view variation alignment: anchors are transformed queries, the
/// candidate pool is the original query batch, positive i -> i.
double single_modal_ground_loss(const EmbeddingBatch& q_star, const EmbeddingBatch& q, double tau_q,
                                bool symmetric = false);

/// Aerial alignment between an augmented orientation and the original batch.
double single_modal_aerial_loss(const EmbeddingBatch& r_star, const EmbeddingBatch& r, double tau_r,
                                bool symmetric = false);

/// The base cross-view objective (query against reference pool).
double vanilla_cross_loss(const EmbeddingBatch& q, const EmbeddingBatch& r, double tau_v,
                          bool symmetric = false);

/// Transformed query against reference pool.
double cross_modal_loss(const EmbeddingBatch& q_star, const EmbeddingBatch& r, double tau_c,
                        bool symmetric = false);

struct LossComponents {
    double vanilla = 0.0;
    double single_q = 0.0;
    double single_r = 0.0;
    double cross = 0.0;
};

/// total = vanilla + w1 * single_q + w2 * single_r + w3 * cross.
double total_loss(const LossComponents& parts, const LossConfig& cfg);

/// Soft-margin triplet objective over all in-batch triplets (q_i, r_i, r_j),
/// j != i, with Euclidean distances on the normalized embeddings:
/// mean log(1 + exp(d_pos - d_neg)). Minimal reference for triplet-based
/// base models; requires N >= 2.
double soft_triplet_loss(const EmbeddingBatch& q, const EmbeddingBatch& r);
LossGrad soft_triplet_loss_grad(const EmbeddingBatch& q, const EmbeddingBatch& r);

}  // namespace congeo
