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

#include "drmrec/factor_model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace drmrec {

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "dot") return ScoreKind::kDot;
  if (name == "neg-l2" || name == "l2") return ScoreKind::kNegL2;
  throw ConfigError(fmt::format("unknown score kind '{}' (expected dot or neg-l2)", name));
}

std::string_view to_string(ScoreKind kind) { return kind == ScoreKind::kDot ? "dot" : "neg-l2"; }

double score_vectors(ScoreKind kind, std::span<const double> user, std::span<const double> item) {
  return kind == ScoreKind::kDot ? dot(user, item) : -squared_distance(user, item);
}

FactorModel::FactorModel(std::size_t num_users, std::size_t num_items, std::size_t dim, ScoreKind kind,
                         std::uint64_t seed)
    : dim_(dim), kind_(kind), seed_(seed), users_(num_users, dim), items_(num_items, dim) {
  if (dim == 0) throw ConfigError("latent dimension must be >= 1");
}

std::vector<double> FactorModel::score_list(UserId u, std::span<const ItemId> items) const {
  std::vector<double> out(items.size());
  for (std::size_t t = 0; t < items.size(); ++t) out[t] = score(u, items[t]);
  return out;
}

void FactorModel::score_all(UserId u, std::span<double> out) const {
  for (ItemId i = 0; i < num_items(); ++i) out[i] = score(u, i);
}

FactorModel FactorModel::quantized() const {
  FactorModel q = *this;
  for (double& x : q.users_.data()) x = static_cast<double>(static_cast<float>(x));
  for (double& x : q.items_.data()) x = static_cast<double>(static_cast<float>(x));
  return q;
}

FactorModel init_model(std::size_t num_users, std::size_t num_items, std::size_t dim, ScoreKind kind,
                       std::uint64_t seed, std::optional<double> scale) {
  FactorModel model(num_users, num_items, dim, kind, seed);
  const double s = scale.value_or(1.0 / std::sqrt(static_cast<double>(dim)));
  Rng rng(seed);
  for (double& x : model.user_factors().data()) x = rng.uniform(-s, s);
  for (double& x : model.item_factors().data()) x = rng.uniform(-s, s);
  for (UserId u = 0; u < num_users; ++u) project_unit_ball(model.user(u));
  for (ItemId i = 0; i < num_items; ++i) project_unit_ball(model.item(i));
  return model;
}

void project_unit_ball(std::span<double> theta) {
  const double norm = std::sqrt(squared_norm(theta));
  if (norm <= 1.0) return;
  for (double& x : theta) x /= norm;
  // Rounding can leave the norm a few ulps above 1; shrink until it is not,
  // so a second projection is a no-op.
  while (squared_norm(theta) > 1.0)
    for (double& x : theta) x = std::nextafter(x, 0.0);
}

std::vector<double> projected(std::span<const double> theta) {
  std::vector<double> out(theta.begin(), theta.end());
  project_unit_ball(out);
  return out;
}

std::vector<double> column_mean(const DenseMatrix& factors) {
  std::vector<double> mean(factors.cols(), 0.0);
  for (std::size_t t = 0; t < factors.rows(); ++t)
    for (std::size_t a = 0; a < factors.cols(); ++a) mean[a] += factors(t, a);
  for (double& m : mean) m /= static_cast<double>(factors.rows());
  return mean;
}

CovarianceStats covariance_stats(const DenseMatrix& factors, std::span<const double> mean) {
  const std::size_t d = factors.cols();
  CovarianceStats stats{DenseMatrix(d, d), std::vector<double>(mean.begin(), mean.end()), factors.rows()};
  std::vector<double> x(d);
  for (std::size_t t = 0; t < factors.rows(); ++t) {
    for (std::size_t a = 0; a < d; ++a) x[a] = factors(t, a) - mean[a];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) stats.covariance(a, b) += x[a] * x[b];
  }
  for (double& c : stats.covariance.data()) c /= static_cast<double>(factors.rows());
  return stats;
}

CovarianceLoss covariance_loss(const DenseMatrix& factors, std::span<const double> fixed_mean) {
  if (factors.rows() == 0) throw std::invalid_argument("covariance needs at least one factor");
  const std::size_t d = factors.cols();
  const double count = static_cast<double>(factors.rows());
  CovarianceLoss out;
  out.stats = covariance_stats(factors, fixed_mean);
  const auto& c = out.stats.covariance;

  double off_diagonal = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (a != b) off_diagonal += c(a, b) * c(a, b);
  out.value = off_diagonal / count;

  // dL/dtheta_t = (4 / |T|^2) offdiag(C) (theta_t - mu). When mu is the
  // pooled mean its own derivative drops out because the centred rows sum
  // to zero.
  out.gradient = DenseMatrix(factors.rows(), d);
  const double scale = 4.0 / (count * count);
  std::vector<double> x(d);
  for (std::size_t t = 0; t < factors.rows(); ++t) {
    for (std::size_t a = 0; a < d; ++a) x[a] = factors(t, a) - fixed_mean[a];
    for (std::size_t a = 0; a < d; ++a) {
      double g = 0.0;
      for (std::size_t b = 0; b < d; ++b)
        if (a != b) g += c(a, b) * x[b];
      out.gradient(t, a) = scale * g;
    }
  }
  return out;
}

CovarianceLoss covariance_loss(const DenseMatrix& factors) {
  const auto mean = column_mean(factors);
  return covariance_loss(factors, mean);
}

CovarianceLoss covariance_loss(const FactorModel& model) {
  DenseMatrix pooled(model.num_users() + model.num_items(), model.dim());
  for (UserId u = 0; u < model.num_users(); ++u) std::ranges::copy(model.user(u), pooled.row(u).begin());
  for (ItemId i = 0; i < model.num_items(); ++i)
    std::ranges::copy(model.item(i), pooled.row(model.num_users() + i).begin());
  return covariance_loss(pooled);
}

namespace {

constexpr std::array<char, 4> kMagic = {'D', 'R', 'M', 'F'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  char bytes[sizeof(T)];
  for (std::size_t b = 0; b < sizeof(T); ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ModelFormatError("model file is truncated");
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(bytes[b]) << (8 * b);
  return value;
}

}  // namespace

void save_model(std::ostream& out, const FactorModel& model) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint64_t>(out, model.num_users());
  put_le<std::uint64_t>(out, model.num_items());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  put_le<std::uint32_t>(out, model.kind() == ScoreKind::kDot ? 0u : 1u);
  put_le<std::uint64_t>(out, model.seed());
  for (const DenseMatrix* m : {&model.user_factors(), &model.item_factors()})
    for (double x : m->data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  if (!out) throw std::ios_base::failure("failed to write model");
}

void save_model(const std::filesystem::path& path, const FactorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure(fmt::format("cannot write '{}'", path.string()));
  save_model(out, model);
}

FactorModel load_model(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ModelFormatError("not a drmrec model file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw ModelFormatError(
        fmt::format("model format version {} is not supported (expected {})", version, kModelFormatVersion));
  const auto num_users = get_le<std::uint64_t>(in);
  const auto num_items = get_le<std::uint64_t>(in);
  const auto dim = get_le<std::uint32_t>(in);
  const auto kind = get_le<std::uint32_t>(in);
  const auto seed = get_le<std::uint64_t>(in);
  if (kind > 1) throw ModelFormatError(fmt::format("unknown score kind tag {}", kind));
  if (dim == 0) throw ModelFormatError("model dimension is zero");

  FactorModel model(num_users, num_items, dim, kind == 0 ? ScoreKind::kDot : ScoreKind::kNegL2, seed);
  for (DenseMatrix* m : {&model.user_factors(), &model.item_factors()})
    for (double& x : m->data()) x = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
  if (in.peek() != std::char_traits<char>::eof()) throw ModelFormatError("trailing bytes after model data");
  return model;
}

FactorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open model '{}'", path.string()));
  return load_model(in);
}

}  // namespace drmrec
