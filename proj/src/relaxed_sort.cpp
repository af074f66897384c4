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

#include "drmrec/relaxed_sort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace drmrec {

void check_temperature(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument(fmt::format("temperature must be positive, got {}", tau));
  if (tau < kMinTemperature)
    throw std::invalid_argument(fmt::format("temperature {} is below the supported floor {}", tau, kMinTemperature));
}

DenseMatrix abs_diff_matrix(std::span<const double> s) {
  DenseMatrix a(s.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) a(i, j) = std::abs(s[i] - s[j]);
  return a;
}

std::vector<double> abs_diff_row_sums(std::span<const double> s) {
  std::vector<double> sums(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) sums[i] += std::abs(s[i] - s[j]);
  return sums;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  if (z.empty()) return out;
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

HardPermutation::HardPermutation(std::vector<std::size_t> columns) : columns_(std::move(columns)) {
  std::vector<bool> seen(columns_.size(), false);
  for (std::size_t c : columns_) {
    if (c >= columns_.size() || seen[c]) throw std::invalid_argument("not a permutation");
    seen[c] = true;
  }
}

DenseMatrix HardPermutation::to_matrix() const {
  DenseMatrix p(size(), size());
  for (std::size_t k = 0; k < size(); ++k) p(k, columns_[k]) = 1.0;
  return p;
}

std::vector<double> HardPermutation::apply(std::span<const double> v) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = v[columns_[k]];
  return out;
}

std::size_t sort_logit_argmax(std::span<const double> s, std::size_t k) {
  const std::size_t n = s.size();
  if (k < 1 || k > n) throw std::out_of_range(fmt::format("rank {} outside [1, {}]", k, n));
  const auto sums = abs_diff_row_sums(s);
  const double scale = static_cast<double>(n + 1) - 2.0 * static_cast<double>(k);
  std::size_t best = 0;
  double best_value = scale * s[0] - sums[0];
  for (std::size_t j = 1; j < n; ++j) {
    const double v = scale * s[j] - sums[j];
    if (v > best_value) {
      best = j;
      best_value = v;
    }
  }
  return best;
}

HardPermutation hard_perm(std::span<const double> s) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return HardPermutation(std::move(order));
}

RelaxedSort::RelaxedSort(std::span<const double> scores, double tau)
    : scores_(scores.begin(), scores.end()), tau_(tau) {
  check_temperature(tau);
  if (scores_.empty()) throw std::invalid_argument("score vector must be non-empty");
  row_sums_ = abs_diff_row_sums(scores_);
}

std::vector<double> RelaxedSort::logits(std::size_t k) const {
  const std::size_t n = size();
  if (k < 1 || k > n) throw std::out_of_range(fmt::format("rank {} outside [1, {}]", k, n));
  const double scale = static_cast<double>(n + 1) - 2.0 * static_cast<double>(k);
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = (scale * scores_[j] - row_sums_[j]) / tau_;
  return z;
}

std::vector<double> RelaxedSort::row(std::size_t k) const { return softmax(logits(k)); }

std::vector<double> relaxed_perm_row(std::span<const double> s, std::size_t k, double tau) {
  return RelaxedSort(s, tau).row(k);
}

std::vector<double> weighted_truncated_sum(std::span<const double> s, std::span<const double> weights, double tau) {
  const RelaxedSort sorter(s, tau);
  if (weights.empty() || weights.size() > s.size())
    throw std::invalid_argument(fmt::format("cutoff {} outside [1, {}]", weights.size(), s.size()));
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t k = 1; k <= weights.size(); ++k) {
    const auto row = sorter.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights[k - 1] * row[j];
  }
  return out;
}

std::vector<double> weighted_truncated_sum(std::span<const double> s, const MetricWeight& weight,
                                           std::size_t num_relevant, double tau) {
  const auto w = rank_weights(weight, num_relevant);
  return weighted_truncated_sum(s, w, tau);
}

}  // namespace drmrec
