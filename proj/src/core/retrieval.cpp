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

#include "core/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace congeo {

RankedResult rank_gallery(const Eigen::VectorXd& query, const EmbeddingBatch& gallery,
                          const std::vector<int>& positives, const std::string& query_id) {
    if (gallery.rows() == 0) throw std::invalid_argument("rank_gallery: empty gallery");
    if (gallery.cols() != query.size())
        throw std::invalid_argument("rank_gallery: dimension mismatch");

    const int n = static_cast<int>(gallery.rows());
    Eigen::VectorXd sims = gallery * query;

    RankedResult res;
    res.query_id = query_id;
    res.order.resize(n);
    std::iota(res.order.begin(), res.order.end(), 0);
    std::sort(res.order.begin(), res.order.end(), [&](int a, int b) {
        if (sims(a) != sims(b)) return sims(a) > sims(b);
        return a < b;
    });
    res.similarities.reserve(n);
    for (int idx : res.order) res.similarities.push_back(sims(idx));

    if (!positives.empty()) {
        std::vector<char> is_pos(n, 0);
        for (int p : positives) {
            if (p < 0 || p >= n) throw std::invalid_argument("rank_gallery: positive index out of range");
            is_pos[p] = 1;
        }
        for (int rank = 0; rank < n; ++rank)
            if (is_pos[res.order[rank]]) res.positive_ranks.push_back(rank);
        res.rank_of_truth = res.positive_ranks.front();
    }
    return res;
}

double recall_at_k(const std::vector<RankedResult>& results, int k) {
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (results.empty()) return 0.0;
    int hits = 0;
    for (const auto& r : results) {
        int kk = std::min<int>(k, static_cast<int>(r.order.size()));
        if (r.rank_of_truth >= 0 && r.rank_of_truth < kk) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double recall_at_1pct(const std::vector<RankedResult>& results, int n_gallery) {
    int k = static_cast<int>(std::ceil(0.01 * n_gallery));
    return recall_at_k(results, std::max(1, k));
}

double average_precision(const std::vector<RankedResult>& results) {
    if (results.empty()) return 0.0;
    double total = 0.0;
    for (const auto& r : results) {
        if (r.positive_ranks.empty())
            throw std::invalid_argument("average_precision: query '" + r.query_id +
                                        "' has no positives");
        double ap = 0.0;
        for (size_t i = 0; i < r.positive_ranks.size(); ++i)
            ap += static_cast<double>(i + 1) / static_cast<double>(r.positive_ranks[i] + 1);
        total += ap / static_cast<double>(r.positive_ranks.size());
    }
    return total / static_cast<double>(results.size());
}

std::vector<int> rank_distribution(const std::vector<RankedResult>& results, int n_bins,
                                   int n_gallery) {
    if (n_bins < 1) throw std::invalid_argument("rank_distribution: need at least one bin");
    int width = (n_gallery + n_bins - 1) / n_bins;
    std::vector<int> hist(n_bins, 0);
    for (const auto& r : results) {
        int bin = std::min(n_bins - 1, r.rank_of_truth / std::max(1, width));
        ++hist[bin];
    }
    return hist;
}

nlohmann::ordered_json MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    auto& recalls = j["r_at"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r_at) recalls[std::to_string(k)] = v;
    j["r_at_1pct"] = r_at_1pct;
    j["ap"] = ap;
    j["n_queries"] = n_queries;
    j["n_gallery"] = n_gallery;
    return j;
}

MetricsReport compute_metrics(const std::vector<RankedResult>& results, int n_gallery,
                              const std::vector<int>& ks) {
    MetricsReport rep;
    rep.n_queries = static_cast<int>(results.size());
    rep.n_gallery = n_gallery;
    for (int k : ks) rep.r_at[k] = recall_at_k(results, k);
    rep.r_at_1pct = recall_at_1pct(results, n_gallery);
    rep.ap = average_precision(results);
    return rep;
}

void save_embeddings(const EmbeddingBatch& embeddings, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_embeddings: cannot open " + path);
    Eigen::MatrixXf f = embeddings.cast<float>();
    // Row-major on disk.
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) {
            float v = f(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
    nlohmann::ordered_json side{{"n", f.rows()}, {"d", f.cols()}, {"dtype", "float32"}};
    std::ofstream sidecar(path + ".json");
    sidecar << side.dump(2) << "\n";
}

EmbeddingBatch load_embeddings(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("load_embeddings: missing sidecar for " + path);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(side);
    Eigen::Index n = j.at("n").get<Eigen::Index>();
    Eigen::Index d = j.at("d").get<Eigen::Index>();
    if (j.at("dtype").get<std::string>() != "float32")
        throw std::runtime_error("load_embeddings: unsupported dtype");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
    EmbeddingBatch out(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index jj = 0; jj < d; ++jj) {
            float v;
            in.read(reinterpret_cast<char*>(&v), sizeof(float));
            out(i, jj) = v;
        }
    if (!in) throw std::runtime_error("load_embeddings: truncated data in " + path);
    return out;
}

}  // namespace congeo
