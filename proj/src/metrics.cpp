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

#include "drmrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "drmrec/factor_model.hpp"

namespace drmrec {

WeightKind parse_weight_kind(std::string_view name) {
  if (name == "precision") return WeightKind::kPrecision;
  if (name == "recall") return WeightKind::kRecall;
  if (name == "ndcg") return WeightKind::kNdcg;
  if (name == "ap" || name == "map") return WeightKind::kAp;
  if (name == "one" || name == "constant-one") return WeightKind::kConstantOne;
  throw ConfigError(fmt::format("unknown metric weight '{}'", name));
}

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::kPrecision: return "precision";
    case WeightKind::kRecall: return "recall";
    case WeightKind::kNdcg: return "ndcg";
    case WeightKind::kAp: return "ap";
    case WeightKind::kConstantOne: return "constant-one";
  }
  return "?";
}

namespace {

bool in_holdout(ItemId item, std::span<const ItemId> holdout) {
  return std::binary_search(holdout.begin(), holdout.end(), item);
}

void check_cutoff(std::size_t cutoff) {
  if (cutoff == 0) throw std::invalid_argument("cutoff K must be >= 1");
}

std::size_t hits_up_to(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  const std::size_t last = std::min(cutoff, ranking.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < last; ++k) hits += in_holdout(ranking[k], holdout);
  return hits;
}

}  // namespace

int hit(std::size_t k, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  if (k < 1 || k > ranking.size())
    throw std::out_of_range(fmt::format("rank {} outside [1, {}]", k, ranking.size()));
  return in_holdout(ranking[k - 1], holdout) ? 1 : 0;
}

double precision_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  check_cutoff(cutoff);
  if (holdout.empty()) return 0.0;
  return static_cast<double>(hits_up_to(cutoff, ranking, holdout)) / static_cast<double>(cutoff);
}

double recall_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  check_cutoff(cutoff);
  if (holdout.empty()) return 0.0;
  return static_cast<double>(hits_up_to(cutoff, ranking, holdout)) / static_cast<double>(holdout.size());
}

double ideal_dcg(std::size_t cutoff, std::size_t num_relevant) {
  const std::size_t ideal_hits = std::min(cutoff, num_relevant);
  double idcg = 0.0;
  for (std::size_t k = 1; k <= ideal_hits; ++k) idcg += 1.0 / std::log2(static_cast<double>(k + 1));
  return idcg;
}

double ndcg_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  check_cutoff(cutoff);
  if (holdout.empty()) return 0.0;
  const std::size_t last = std::min(cutoff, ranking.size());
  double dcg = 0.0;
  for (std::size_t k = 1; k <= last; ++k)
    if (in_holdout(ranking[k - 1], holdout)) dcg += 1.0 / std::log2(static_cast<double>(k + 1));
  return dcg / ideal_dcg(cutoff, holdout.size());
}

double ap_at(std::size_t cutoff, std::span<const ItemId> ranking, std::span<const ItemId> holdout) {
  check_cutoff(cutoff);
  if (holdout.empty()) return 0.0;
  const std::size_t last = std::min(cutoff, ranking.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= last; ++k) {
    if (!in_holdout(ranking[k - 1], holdout)) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k);
  }
  return sum / static_cast<double>(std::min(cutoff, holdout.size()));
}

double unified_metric(const MetricWeight& weight, std::span<const ItemId> ranking,
                      std::span<const ItemId> holdout) {
  const std::size_t cutoff = weight.cutoff;
  check_cutoff(cutoff);
  if (holdout.empty()) return 0.0;

  double normalizer = 1.0;
  switch (weight.kind) {
    case WeightKind::kPrecision: normalizer = static_cast<double>(cutoff); break;
    case WeightKind::kRecall: normalizer = static_cast<double>(holdout.size()); break;
    case WeightKind::kNdcg: normalizer = ideal_dcg(cutoff, holdout.size()); break;
    case WeightKind::kAp: normalizer = static_cast<double>(std::min(cutoff, holdout.size())); break;
    case WeightKind::kConstantOne: break;
  }

  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t last = std::min(cutoff, ranking.size());
  for (std::size_t k = 1; k <= last; ++k) {
    if (!hit(k, ranking, holdout)) continue;
    ++hits;
    double gain = 1.0;
    if (weight.kind == WeightKind::kNdcg) gain = 1.0 / std::log2(static_cast<double>(k + 1));
    // AP weights each hit by Precision@k.
    if (weight.kind == WeightKind::kAp) gain = static_cast<double>(hits) / static_cast<double>(k);
    sum += gain;
  }
  return sum / normalizer;
}

std::vector<double> rank_weights(const MetricWeight& weight, std::size_t num_relevant) {
  check_cutoff(weight.cutoff);
  const std::size_t cutoff = weight.cutoff;
  std::vector<double> w(cutoff, 1.0);
  switch (weight.kind) {
    case WeightKind::kPrecision:
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(cutoff));
      break;
    case WeightKind::kRecall:
      if (num_relevant == 0) throw std::invalid_argument("recall weight needs num_relevant >= 1");
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(num_relevant));
      break;
    case WeightKind::kNdcg: {
      if (num_relevant == 0) throw std::invalid_argument("ndcg weight needs num_relevant >= 1");
      const double idcg = ideal_dcg(cutoff, num_relevant);
      for (std::size_t k = 1; k <= cutoff; ++k) w[k - 1] = 1.0 / (idcg * std::log2(static_cast<double>(k + 1)));
      break;
    }
    case WeightKind::kAp:
      throw ConfigError("the AP weight depends on the ranking and cannot weight relaxed rows");
    case WeightKind::kConstantOne:
      break;
  }
  return w;
}

std::vector<ItemId> rank_items(std::span<const double> scores, std::span<const ItemId> exclude,
                               std::size_t limit) {
  std::vector<ItemId> candidates;
  candidates.reserve(scores.size());
  for (ItemId i = 0; i < scores.size(); ++i)
    if (!std::binary_search(exclude.begin(), exclude.end(), i)) candidates.push_back(i);
  const std::size_t keep = std::min(limit, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                    [&](ItemId a, ItemId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
  candidates.resize(keep);
  return candidates;
}

std::string metric_label(WeightKind kind, std::size_t cutoff) {
  switch (kind) {
    case WeightKind::kPrecision: return fmt::format("Precision@{}", cutoff);
    case WeightKind::kRecall: return fmt::format("Recall@{}", cutoff);
    case WeightKind::kNdcg: return fmt::format("NDCG@{}", cutoff);
    case WeightKind::kAp: return fmt::format("MAP@{}", cutoff);
    case WeightKind::kConstantOne: return fmt::format("Hits@{}", cutoff);
  }
  return "?";
}

std::vector<MetricRequest> default_report_metrics() {
  return {{WeightKind::kAp, 10}, {WeightKind::kNdcg, 10}, {WeightKind::kRecall, 50}, {WeightKind::kNdcg, 50}};
}

std::vector<MetricRequest> report_metrics(std::span<const std::size_t> extra_cutoffs) {
  auto out = default_report_metrics();
  for (std::size_t k : extra_cutoffs) {
    for (WeightKind kind : {WeightKind::kAp, WeightKind::kNdcg, WeightKind::kRecall, WeightKind::kPrecision}) {
      const bool present = std::any_of(out.begin(), out.end(),
                                       [&](const MetricRequest& r) { return r.kind == kind && r.cutoff == k; });
      if (!present) out.push_back({kind, k});
    }
  }
  return out;
}

const MetricSummary& EvaluationReport::find(WeightKind kind, std::size_t cutoff) const {
  for (const auto& row : rows)
    if (row.metric.kind == kind && row.metric.cutoff == cutoff) return row;
  throw std::out_of_range(fmt::format("{} not in report", metric_label(kind, cutoff)));
}

const std::vector<double>& EvaluationReport::values(WeightKind kind, std::size_t cutoff) const {
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].metric.kind == kind && rows[r].metric.cutoff == cutoff) return per_user[r];
  throw std::out_of_range(fmt::format("{} not in report", metric_label(kind, cutoff)));
}

std::string EvaluationReport::to_table() const {
  std::string out = "metric\tmean\tstd\tn_users\n";
  for (const auto& row : rows)
    out += fmt::format("{}\t{:.6f}\t{:.6f}\t{}\n", metric_label(row.metric.kind, row.metric.cutoff), row.mean,
                       row.stddev, row.num_users);
  return out;
}

std::string EvaluationReport::to_key_values() const {
  std::string out;
  for (const auto& row : rows)
    out += fmt::format("{} = {:.6f} ± {:.6f}, {}\n", metric_label(row.metric.kind, row.metric.cutoff), row.mean,
                       row.stddev, row.num_users);
  return out;
}

EvaluationReport evaluate_scores(const UserScorer& scorer, const InteractionMatrix& known,
                                 const InteractionMatrix& holdout, std::span<const MetricRequest> metrics,
                                 std::size_t min_train) {
  EvaluationReport report;
  report.users = eligible_users(known, holdout, min_train);
  if (report.users.empty()) throw EmptyDatasetError("no eligible users to evaluate");

  std::size_t max_cutoff = 1;
  for (const auto& m : metrics) max_cutoff = std::max(max_cutoff, m.cutoff);

  report.per_user.assign(metrics.size(), std::vector<double>(report.users.size(), 0.0));
  std::vector<double> scores(known.num_items());
  for (std::size_t n = 0; n < report.users.size(); ++n) {
    const UserId u = report.users[n];
    scorer(u, scores);
    const auto ranking = rank_items(scores, known.items(u), max_cutoff);
    for (std::size_t r = 0; r < metrics.size(); ++r)
      report.per_user[r][n] = unified_metric({metrics[r].kind, metrics[r].cutoff}, ranking, holdout.items(u));
  }

  for (std::size_t r = 0; r < metrics.size(); ++r) {
    const auto& v = report.per_user[r];
    const double count = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / count;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    report.rows.push_back({metrics[r], mean, std::sqrt(var / count), v.size()});
  }
  return report;
}

EvaluationReport evaluate_model(const FactorModel& model, const InteractionMatrix& known,
                                const InteractionMatrix& holdout, std::span<const MetricRequest> metrics,
                                std::size_t min_train) {
  if (model.num_users() != known.num_users() || model.num_items() != known.num_items())
    throw std::invalid_argument("model does not cover the data's index space");
  return evaluate_scores([&](UserId u, std::span<double> out) { model.score_all(u, out); }, known, holdout,
                         metrics, min_train);
}

}  // namespace drmrec
