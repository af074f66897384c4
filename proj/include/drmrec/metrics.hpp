// Copyright 2026 The drmrec Authors
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

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drmrec/common.hpp"
#include "drmrec/interactions.hpp"

namespace drmrec {

class FactorModel;

// Choice of w(k, K) in O(K) = sum_k w(k, K) Hit(u, k).
enum class WeightKind { kPrecision, kRecall, kNdcg, kAp, kConstantOne };

WeightKind parse_weight_kind(std::string_view name);
std::string_view to_string(WeightKind kind);

struct MetricWeight {
  WeightKind kind = WeightKind::kConstantOne;
  std::size_t cutoff = 10;
};

// Rankings are item ids sorted by predicted score, best first. Holdouts are
// sorted ascending. Ranks are 1-based throughout.

// 1 iff ranking[k-1] is in the holdout. Throws std::out_of_range unless
// 1 <= k <= ranking.size().
int hit(std::size_t k, std::span<const ItemId> ranking, std::span<const ItemId> holdout);

// Positions past the end of a short ranking count as misses. An empty holdout
// yields 0 for every metric.
double precision_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout);
double recall_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout);
double ndcg_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout);
double ap_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout);

// DCG of min(cutoff, num_relevant) leading hits.
double ideal_dcg(std::size_t cutoff, std::size_t num_relevant);

// sum_{k<=K} w(k, K) Hit(u, k). The weight is applied as gain(k) / normalizer,
// e.g. NDCG uses gain 1/log2(k+1) and normalizer IDCG@K.
double unified_metric(const MetricWeight& weight, std::span<const ItemId> ranking,
                      std::span<const ItemId> holdout);

// w(1..K, K) for weights that do not depend on the ranking itself, given the
// number of relevant items. AP is rank-dependent and throws ConfigError.
std::vector<double> rank_weights(const MetricWeight& weight, std::size_t num_relevant);

// Items ordered by descending score, ties by ascending id, skipping the sorted
// `exclude` list, truncated to `limit`.
std::vector<ItemId> rank_items(std::span<const double> scores, std::span<const ItemId> exclude,
                               std::size_t limit);

struct MetricRequest {
  WeightKind kind;
  std::size_t cutoff;
};

std::string metric_label(WeightKind kind, std::size_t cutoff);

// MAP@10, NDCG@10, Recall@50, NDCG@50.
std::vector<MetricRequest> default_report_metrics();
// The defaults plus Precision/Recall/NDCG/MAP at each extra cutoff.
std::vector<MetricRequest> report_metrics(std::span<const std::size_t> extra_cutoffs);

struct MetricSummary {
  MetricRequest metric;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over users
  std::size_t num_users = 0;
};

struct EvaluationReport {
  std::vector<UserId> users;
  std::vector<MetricSummary> rows;
  // per_user[r][n] is metric r for users[n].
  std::vector<std::vector<double>> per_user;

  const MetricSummary& find(WeightKind kind, std::size_t cutoff) const;
  const std::vector<double>& values(WeightKind kind, std::size_t cutoff) const;

  // Tab-separated table with a header row.
  std::string to_table() const;
  // `metric@K = mean ± std, n_users` lines.
  std::string to_key_values() const;
};

// Writes scores for every item of user u into `out`.
using UserScorer = std::function<void(UserId u, std::span<double> out)>;

// Ranks all items not in `known` for each eligible user (>= min_train known
// interactions, >= 1 holdout interaction) and averages the metrics. Throws
// EmptyDatasetError when no user is eligible.
EvaluationReport evaluate_scores(const UserScorer& scorer, const InteractionMatrix& known,
                                 const InteractionMatrix& holdout, std::span<const MetricRequest> metrics,
                                 std::size_t min_train = 5);

EvaluationReport evaluate_model(const FactorModel& model, const InteractionMatrix& known,
                                const InteractionMatrix& holdout, std::span<const MetricRequest> metrics,
                                std::size_t min_train = 5);

}  // namespace drmrec
