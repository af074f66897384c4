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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "drmrec/common.hpp"

namespace drmrec {

// dot: a.b ; neg-l2: -||a - b||^2
enum class ScoreKind { kDot, kNegL2 };

ScoreKind parse_score_kind(std::string_view name);
std::string_view to_string(ScoreKind kind);

double score_vectors(ScoreKind kind, std::span<const double> user, std::span<const double> item);

// Free user and item embeddings in R^d.
class FactorModel {
 public:
  FactorModel() = default;
  // All-zero factors.
  FactorModel(std::size_t num_users, std::size_t num_items, std::size_t dim, ScoreKind kind,
              std::uint64_t seed = 0);

  std::size_t num_users() const { return users_.rows(); }
  std::size_t num_items() const { return items_.rows(); }
  std::size_t dim() const { return dim_; }
  ScoreKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> user(UserId u) { return users_.row(u); }
  std::span<const double> user(UserId u) const { return users_.row(u); }
  std::span<double> item(ItemId i) { return items_.row(i); }
  std::span<const double> item(ItemId i) const { return items_.row(i); }

  const DenseMatrix& user_factors() const { return users_; }
  const DenseMatrix& item_factors() const { return items_; }
  DenseMatrix& user_factors() { return users_; }
  DenseMatrix& item_factors() { return items_; }

  double score(UserId u, ItemId i) const { return score_vectors(kind_, user(u), item(i)); }
  std::vector<double> score_list(UserId u, std::span<const ItemId> items) const;
  void score_all(UserId u, std::span<double> out) const;

  // Copy with every factor rounded to float32, i.e. what save/load yields.
  FactorModel quantized() const;

  friend bool operator==(const FactorModel&, const FactorModel&) = default;

 private:
  std::size_t dim_ = 0;
  ScoreKind kind_ = ScoreKind::kDot;
  std::uint64_t seed_ = 0;
  DenseMatrix users_;
  DenseMatrix items_;
};

// Entries uniform in [-scale, scale] (default 1/sqrt(d)), then each row is
// projected into the unit ball. Deterministic per seed.
FactorModel init_model(std::size_t num_users, std::size_t num_items, std::size_t dim, ScoreKind kind,
                       std::uint64_t seed, std::optional<double> scale = std::nullopt);

// theta / max(1, ||theta||), in place.
void project_unit_ball(std::span<double> theta);
std::vector<double> projected(std::span<const double> theta);

// Pooled factor covariance C = (1/|T|) sum_t (theta_t - mu)(theta_t - mu)^T.
struct CovarianceStats {
  DenseMatrix covariance;
  std::vector<double> mean;
  std::size_t count = 0;
};

CovarianceStats covariance_stats(const DenseMatrix& factors, std::span<const double> mean);
std::vector<double> column_mean(const DenseMatrix& factors);

// L_C = (||C||_F^2 - ||diag C||^2) / |T|, the squared off-diagonal mass of C,
// and its gradient with respect to every row of `factors`.
struct CovarianceLoss {
  double value = 0.0;
  DenseMatrix gradient;
  CovarianceStats stats;
};

// Exact: the mean is a function of the factors.
CovarianceLoss covariance_loss(const DenseMatrix& factors);
// Mean held fixed (e.g. a cached global mean while only a batch is pooled).
CovarianceLoss covariance_loss(const DenseMatrix& factors, std::span<const double> fixed_mean);
// Users then items pooled; gradient rows follow the same order.
CovarianceLoss covariance_loss(const FactorModel& model);

// Header (magic "DRMF", version, M, N, d, score kind, seed) then user and
// item factors row-major as little-endian float32.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(std::ostream& out, const FactorModel& model);
void save_model(const std::filesystem::path& path, const FactorModel& model);
// Throws ModelFormatError on bad magic, version mismatch or truncation.
FactorModel load_model(std::istream& in);
FactorModel load_model(const std::filesystem::path& path);

}  // namespace drmrec
