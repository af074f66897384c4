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
#include <span>
#include <vector>

#include "drmrec/common.hpp"
#include "drmrec/metrics.hpp"

namespace drmrec {

// Temperatures below this overflow the softmax logits for ordinary scores.
inline constexpr double kMinTemperature = 1e-6;

// Throws std::invalid_argument for tau <= 0 or tau < kMinTemperature.
void check_temperature(double tau);

// A[i][j] = |s_i - s_j|.
DenseMatrix abs_diff_matrix(std::span<const double> s);
// A_s 1, i.e. sum_j |s_i - s_j| for each i.
std::vector<double> abs_diff_row_sums(std::span<const double> s);

// Numerically stable softmax (max subtracted before exponentiation).
std::vector<double> softmax(std::span<const double> z);

// 0/1 permutation matrix stored by the column of the single 1 in each row.
class HardPermutation {
 public:
  explicit HardPermutation(std::vector<std::size_t> columns);

  std::size_t size() const { return columns_.size(); }
  // Column of the 1 in row k (0-based).
  std::size_t column(std::size_t k) const { return columns_[k]; }
  const std::vector<std::size_t>& columns() const { return columns_; }

  DenseMatrix to_matrix() const;
  std::vector<double> apply(std::span<const double> v) const;

 private:
  std::vector<std::size_t> columns_;
};

// Index of max_j [(n+1-2k) s - A_s 1]_j for 1-based rank k; the lowest index
// wins ties.
std::size_t sort_logit_argmax(std::span<const double> s, std::size_t k);

// Permutation sorting s in descending order. Equals the row-wise
// sort_logit_argmax when entries are distinct; tied entries keep ascending
// index order so the result is always a permutation.
HardPermutation hard_perm(std::span<const double> s);

// Rows of the relaxed (softmax) permutation matrix at temperature tau,
// computed on demand. A_s 1 is computed once at construction.
class RelaxedSort {
 public:
  RelaxedSort(std::span<const double> scores, double tau);

  std::size_t size() const { return scores_.size(); }
  double tau() const { return tau_; }
  std::span<const double> scores() const { return scores_; }
  std::span<const double> abs_diff_sums() const { return row_sums_; }

  // z^(k) = ((n+1-2k) s - A_s 1) / tau, k 1-based.
  std::vector<double> logits(std::size_t k) const;
  // softmax(z^(k)).
  std::vector<double> row(std::size_t k) const;

 private:
  std::vector<double> scores_;
  double tau_;
  std::vector<double> row_sums_;
};

std::vector<double> relaxed_perm_row(std::span<const double> s, std::size_t k, double tau);

// sum_{k<=K} w_k P~_k(s), with K = weights.size().
std::vector<double> weighted_truncated_sum(std::span<const double> s, std::span<const double> weights, double tau);
std::vector<double> weighted_truncated_sum(std::span<const double> s, const MetricWeight& weight,
                                           std::size_t num_relevant, double tau);

}  // namespace drmrec
