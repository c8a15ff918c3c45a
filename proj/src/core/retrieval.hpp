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

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/losses.hpp"

namespace congeo {

/// Gallery ranking for one query. Ordering is by descending cosine
/// similarity with ties broken by ascending gallery index, so results are
/// deterministic and platform independent.
struct RankedResult {
    std::string query_id;
    std::vector<int> order;            // gallery indices, best first
    std::vector<double> similarities;  // aligned with order
    int rank_of_truth = -1;            // 0-based rank of the best positive
    std::vector<int> positive_ranks;   // sorted ranks of all positives
};

/// Rank the whole gallery against one query embedding (double precision).
/// positives lists the gallery indices counted as ground truth.
RankedResult rank_gallery(const Eigen::VectorXd& query, const EmbeddingBatch& gallery,
                          const std::vector<int>& positives = {},
                          const std::string& query_id = "");

/// Fraction of queries whose best positive sits in the top k; k larger than
/// the gallery clamps to the gallery size.
double recall_at_k(const std::vector<RankedResult>& results, int k);

/// recall_at_k with k = ceil(0.01 * n_gallery).
double recall_at_1pct(const std::vector<RankedResult>& results, int n_gallery);

/// Mean over queries of the mean precision at each positive hit rank.
/// Queries with no positives are rejected.
double average_precision(const std::vector<RankedResult>& results);

/// Histogram of rank_of_truth over n_bins equal-width bins covering
/// [0, n_gallery); counts sum to the number of queries.
std::vector<int> rank_distribution(const std::vector<RankedResult>& results, int n_bins,
                                   int n_gallery);

/// All evaluation metrics for one setting.
struct MetricsReport {
    std::map<int, double> r_at;  // k -> recall
    double r_at_1pct = 0.0;
    double ap = 0.0;
    int n_queries = 0;
    int n_gallery = 0;

    nlohmann::ordered_json to_json() const;
};

MetricsReport compute_metrics(const std::vector<RankedResult>& results, int n_gallery,
                              const std::vector<int>& ks = {1, 5, 10});

/// Raw embedding dump: N x D float32 binary plus a JSON sidecar describing
/// the shape ("<path>.json" with n, d, dtype).
void save_embeddings(const EmbeddingBatch& embeddings, const std::string& path);
EmbeddingBatch load_embeddings(const std::string& path);

}  // namespace congeo
