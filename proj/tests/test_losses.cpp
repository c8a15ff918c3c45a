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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/losses.hpp"
#include "test_helpers.hpp"

using namespace congeo;

namespace {

// Independent scalar oracle: naive softmax cross entropy over candidates,
// computed in long double without the implementation's shift trick.
long double info_nce_oracle(const EmbeddingBatch& a, const EmbeddingBatch& c,
                            const std::vector<int>& pos, double tau) {
    EmbeddingBatch an = a, cn = c;
    for (Eigen::Index i = 0; i < an.rows(); ++i) an.row(i) /= an.row(i).norm();
    for (Eigen::Index i = 0; i < cn.rows(); ++i) cn.row(i) /= cn.row(i).norm();
    long double total = 0;
    for (Eigen::Index i = 0; i < an.rows(); ++i) {
        long double denom = 0;
        for (Eigen::Index j = 0; j < cn.rows(); ++j)
            denom += std::exp(static_cast<long double>(an.row(i).dot(cn.row(j))) / tau);
        long double num = std::exp(static_cast<long double>(an.row(i).dot(cn.row(pos[i]))) / tau);
        total += -std::log(num / denom);
    }
    return total / an.rows();
}

}  // namespace

TEST_CASE("info_nce: uniform logits give ln N for any temperature") {
    const int n = 4, d = 8;
    EmbeddingBatch anchors(n, d), candidates(n, d);
    for (int i = 0; i < n; ++i) {
        anchors.row(i).setZero();
        anchors(i, 0) = 1.0;
        candidates.row(i).setZero();
        candidates(i, 1) = 1.0;  // every similarity is exactly 0
    }
    for (double tau : {0.05, 0.5, 1.0, 7.0}) {
        double loss = info_nce(anchors, candidates, PositiveAssignment::identity(n), tau);
        CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
}

TEST_CASE("info_nce: dominant positive against antipodal negatives") {
    const int d = 4;
    EmbeddingBatch anchors(1, d), candidates(4, d);
    anchors.setZero();
    anchors(0, 0) = 1.0;
    candidates.setZero();
    candidates(0, 0) = 1.0;   // the positive, similarity +1
    for (int j = 1; j < 4; ++j) candidates(j, 0) = -1.0;  // similarity -1
    double tau = 0.1;
    double loss = info_nce(anchors, candidates, PositiveAssignment::from_indices({0}), tau);
    double expect = -std::log(std::exp(10.0) / (std::exp(10.0) + 3.0 * std::exp(-10.0)));
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("info_nce: matches the brute-force oracle on random batches") {
    for (int trial = 0; trial < 5; ++trial) {
        EmbeddingBatch a = test::random_unit_batch(8, 16, 100 + trial);
        EmbeddingBatch c = test::random_unit_batch(8, 16, 200 + trial);
        std::vector<int> pos(8);
        std::iota(pos.begin(), pos.end(), 0);
        double got = info_nce(a, c, PositiveAssignment::from_indices(pos), 0.07);
        long double want = info_nce_oracle(a, c, pos, 0.07);
        CHECK(std::abs(got - static_cast<double>(want)) / std::abs(static_cast<double>(want)) < 1e-10);
    }
}

TEST_CASE("info_nce: rejects bad inputs") {
    EmbeddingBatch ok = test::random_unit_batch(3, 4, 1);
    auto id = PositiveAssignment::identity(3);
    CHECK_THROWS_AS(info_nce(ok, ok, id, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(info_nce(ok, ok, id, -1.0), std::invalid_argument);

    EmbeddingBatch bad = ok;
    bad.row(1) *= 2.0;  // clearly not unit norm
    CHECK_THROWS_AS(info_nce(bad, ok, id, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(info_nce(ok, bad, id, 0.1), std::invalid_argument);

    CHECK_THROWS_AS(info_nce(ok, ok, PositiveAssignment::from_indices({0, 1, 3}), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(info_nce(ok, ok, PositiveAssignment::from_indices({0, 1}), 0.1),
                    std::invalid_argument);
}

TEST_CASE("info_nce: multi-positive sets reduce to the single-positive case") {
    EmbeddingBatch a = test::random_unit_batch(5, 8, 7);
    EmbeddingBatch c = test::random_unit_batch(5, 8, 8);
    PositiveAssignment single = PositiveAssignment::identity(5);
    PositiveAssignment multi;
    for (int i = 0; i < 5; ++i) multi.pos_sets.push_back({i});
    CHECK(info_nce(a, c, multi, 0.2) == doctest::Approx(info_nce(a, c, single, 0.2)).epsilon(1e-14));

    // A genuine two-positive set: -log((e_a + e_b) / denom), checked by hand.
    PositiveAssignment two;
    two.pos_sets = {{0, 1}, {1}, {2}, {3}, {4}};
    double got = info_nce(a, c, two, 0.2);
    EmbeddingBatch an = a, cn = c;
    long double denom = 0, num = 0;
    for (int j = 0; j < 5; ++j) denom += std::exp(static_cast<long double>(a.row(0).dot(c.row(j))) / 0.2);
    num = std::exp(static_cast<long double>(a.row(0).dot(c.row(0))) / 0.2) +
          std::exp(static_cast<long double>(a.row(0).dot(c.row(1))) / 0.2);
    long double row0 = -std::log(num / denom);
    long double others = 0;
    for (int i = 1; i < 5; ++i) {
        long double den2 = 0;
        for (int j = 0; j < 5; ++j)
            den2 += std::exp(static_cast<long double>(a.row(i).dot(c.row(j))) / 0.2);
        others += -std::log(std::exp(static_cast<long double>(a.row(i).dot(c.row(i))) / 0.2) / den2);
    }
    CHECK(got == doctest::Approx(static_cast<double>((row0 + others) / 5.0)).epsilon(1e-12));
}

TEST_CASE("single_modal_ground_loss: two orthogonal untransformed rows") {
    EmbeddingBatch q(2, 4);
    q.setZero();
    q(0, 0) = 1.0;
    q(1, 1) = 1.0;
    double loss = single_modal_ground_loss(q, q, 1.0);
    double expect = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single_modal losses: identical rows give ln N") {
    const int n = 6;
    EmbeddingBatch q(n, 4);
    for (int i = 0; i < n; ++i) {
        q.row(i).setZero();
        q(i, 2) = 1.0;
    }
    CHECK(single_modal_ground_loss(q, q, 0.3) == doctest::Approx(std::log(n)).epsilon(1e-12));
    CHECK(single_modal_aerial_loss(q, q, 0.3) == doctest::Approx(std::log(n)).epsilon(1e-12));
}

TEST_CASE("paired losses delegate to info_nce with the identity assignment") {
    EmbeddingBatch a = test::random_unit_batch(4, 8, 31);
    EmbeddingBatch c = test::random_unit_batch(4, 8, 32);
    double manual = info_nce(a, c, PositiveAssignment::identity(4), 0.11);
    CHECK(single_modal_ground_loss(a, c, 0.11) == doctest::Approx(manual));
    CHECK(single_modal_aerial_loss(a, c, 0.11) == doctest::Approx(manual));
    CHECK(vanilla_cross_loss(a, c, 0.11) == doctest::Approx(manual));
    CHECK(cross_modal_loss(a, c, 0.11) == doctest::Approx(manual));
}

TEST_CASE("vanilla_cross_loss: matched rows keep the loss under ln N") {
    EmbeddingBatch q = test::random_unit_batch(16, 8, 41);
    CHECK(vanilla_cross_loss(q, q, 0.05) < std::log(16.0));
}

TEST_CASE("total_loss: degenerate weights, paper weights and linearity") {
    LossComponents parts{1.25, 0.5, 2.0, 0.75};

    LossConfig zero;
    zero.w1 = zero.w2 = zero.w3 = 0.0;
    CHECK(total_loss(parts, zero) == parts.vanilla);

    LossConfig paper;  // w1 = w2 = 0.5, w3 = 0.25
    CHECK(total_loss(parts, paper) ==
          doctest::Approx(1.25 + 0.5 * 0.5 + 0.5 * 2.0 + 0.25 * 0.75).epsilon(1e-15));

    LossConfig doubled = paper;
    doubled.w1 *= 2; doubled.w2 *= 2; doubled.w3 *= 2;
    double extra = total_loss(parts, paper) - parts.vanilla;
    CHECK(total_loss(parts, doubled) - parts.vanilla == doctest::Approx(2.0 * extra).epsilon(1e-12));
}

TEST_CASE("losses are invariant under a joint row permutation") {
    EmbeddingBatch a = test::random_unit_batch(6, 8, 50);
    EmbeddingBatch c = test::random_unit_batch(6, 8, 51);
    double base = info_nce(a, c, PositiveAssignment::identity(6), 0.09);

    std::vector<int> perm = {3, 0, 5, 1, 4, 2};
    EmbeddingBatch ap(6, 8), cp(6, 8);
    for (int i = 0; i < 6; ++i) {
        ap.row(i) = a.row(perm[i]);
        cp.row(i) = c.row(perm[i]);
    }
    CHECK(info_nce(ap, cp, PositiveAssignment::identity(6), 0.09) ==
          doctest::Approx(base).epsilon(1e-12));

    // Permuting only the candidates needs the matching index remap.
    std::vector<int> remap(6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (perm[j] == i) remap[i] = j;
    CHECK(info_nce(a, cp, PositiveAssignment::from_indices(remap), 0.09) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("info_nce gradient: decreasing in the positive logit, increasing in negatives") {
    // One anchor, many candidates: moving candidate j changes exactly one
    // logit, so the loss delta carries the sign of dL/ds_j.
    for (int trial = 0; trial < 5; ++trial) {
        EmbeddingBatch a = test::random_unit_batch(1, 8, 60 + trial);
        EmbeddingBatch c = test::random_unit_batch(8, 8, 70 + trial);
        auto pos = PositiveAssignment::from_indices({3});
        double base = info_nce(a, c, pos, 0.2);

        for (int j = 0; j < 8; ++j) {
            EmbeddingBatch c2 = c;
            c2.row(j) += 1e-4 * a.row(0);  // raises s_j after renormalization
            c2.row(j) /= c2.row(j).norm();
            double delta = info_nce(a, c2, pos, 0.2) - base;
            if (j == 3) {
                CHECK(delta < 0);  // strengthening the positive lowers the loss
            } else {
                CHECK(delta > 0);  // strengthening a negative raises it
            }
        }
    }
}

TEST_CASE("info_nce gradients match central finite differences") {
    const double step = 1e-5, tol = 1e-4;
    for (int trial = 0; trial < 4; ++trial) {
        int n = 3 + trial, d = 6 + trial;
        EmbeddingBatch a = test::random_unit_batch(n, d, 300 + trial);
        EmbeddingBatch c = test::random_unit_batch(n, d, 400 + trial);
        auto id = PositiveAssignment::identity(n);
        double tau = 0.05 + 0.05 * trial;
        LossGrad g = info_nce_grad(a, c, id, tau);

        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                EmbeddingBatch ap = a, am = a;
                ap(i, j) += step;
                am(i, j) -= step;
                double fd = (info_nce(ap, c, id, tau) - info_nce(am, c, id, tau)) / (2 * step);
                CHECK(g.d_anchors(i, j) == doctest::Approx(fd).epsilon(tol).scale(1.0));
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                EmbeddingBatch cp = c, cm = c;
                cp(i, j) += step;
                cm(i, j) -= step;
                double fd = (info_nce(a, cp, id, tau) - info_nce(a, cm, id, tau)) / (2 * step);
                CHECK(g.d_candidates(i, j) == doctest::Approx(fd).epsilon(tol).scale(1.0));
            }
        double fd_tau =
            (info_nce(a, c, id, tau + step) - info_nce(a, c, id, tau - step)) / (2 * step);
        CHECK(g.d_tau == doctest::Approx(fd_tau).epsilon(tol).scale(1.0));
    }
}

TEST_CASE("soft_triplet_loss: symmetric margin gives ln 2") {
    // Orthonormal queries and references: every distance is sqrt(2).
    EmbeddingBatch q(2, 4), r(2, 4);
    q.setZero();
    r.setZero();
    q(0, 0) = 1.0;
    q(1, 1) = 1.0;
    r(0, 2) = 1.0;
    r(1, 3) = 1.0;
    CHECK(soft_triplet_loss(q, r) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("soft_triplet_loss: perfect positives against antipodal negatives") {
    EmbeddingBatch q(2, 4), r(2, 4);
    q.setZero();
    q(0, 0) = 1.0;
    q(1, 0) = -1.0;
    r = q;  // d_pos = 0, d_neg = 2
    CHECK(soft_triplet_loss(q, r) == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-9));
}

TEST_CASE("soft_triplet_loss: agrees with an explicit triplet enumeration") {
    EmbeddingBatch q = test::random_unit_batch(4, 6, 80);
    EmbeddingBatch r = test::random_unit_batch(4, 6, 81);
    long double total = 0;
    int count = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (j == i) continue;
            long double dpos = (q.row(i) - r.row(i)).norm();
            long double dneg = (q.row(i) - r.row(j)).norm();
            total += std::log(1.0L + std::exp(dpos - dneg));
            ++count;
        }
    CHECK(soft_triplet_loss(q, r) ==
          doctest::Approx(static_cast<double>(total / count)).epsilon(1e-12));
}

TEST_CASE("soft_triplet_loss: rejects batches without negatives") {
    EmbeddingBatch q = test::random_unit_batch(1, 4, 90);
    CHECK_THROWS_AS(soft_triplet_loss(q, q), std::invalid_argument);
}

TEST_CASE("soft_triplet_loss gradients match central finite differences") {
    const double step = 1e-5, tol = 1e-4;
    EmbeddingBatch q = test::random_unit_batch(4, 6, 91);
    EmbeddingBatch r = test::random_unit_batch(4, 6, 92);
    LossGrad g = soft_triplet_loss_grad(q, r);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) {
            EmbeddingBatch qp = q, qm = q;
            qp(i, j) += step;
            qm(i, j) -= step;
            double fd = (soft_triplet_loss(qp, r) - soft_triplet_loss(qm, r)) / (2 * step);
            CHECK(g.d_anchors(i, j) == doctest::Approx(fd).epsilon(tol).scale(1.0));

            EmbeddingBatch rp = r, rm = r;
            rp(i, j) += step;
            rm(i, j) -= step;
            fd = (soft_triplet_loss(q, rp) - soft_triplet_loss(q, rm)) / (2 * step);
            CHECK(g.d_candidates(i, j) == doctest::Approx(fd).epsilon(tol).scale(1.0));
        }
}

TEST_CASE("symmetric variant averages both directions") {
    EmbeddingBatch a = test::random_unit_batch(4, 8, 95);
    EmbeddingBatch c = test::random_unit_batch(4, 8, 96);
    double fwd = vanilla_cross_loss(a, c, 0.2, false);
    double bwd = vanilla_cross_loss(c, a, 0.2, false);
    CHECK(vanilla_cross_loss(a, c, 0.2, true) == doctest::Approx(0.5 * (fwd + bwd)).epsilon(1e-12));
}
