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

#include "drmrec/objectives.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "drmrec/relaxed_sort.hpp"

namespace drmrec {

double phi_weight(double positive_score, std::span<const double> negative_scores, std::size_t num_items) {
  if (negative_scores.empty()) throw std::invalid_argument("phi_weight needs at least one negative");
  std::size_t violations = 0;
  for (double s : negative_scores) violations += (1.0 - positive_score + s >= 0.0);
  return std::log(1.0 + static_cast<double>(num_items) * static_cast<double>(violations) /
                            static_cast<double>(negative_scores.size()));
}

double phi_weight(const FactorModel& model, UserId u, ItemId positive, std::span<const ItemId> negatives) {
  const auto scores = model.score_list(u, negatives);
  return phi_weight(model.score(u, positive), scores, model.num_items());
}

double hinge_loss(std::span<const double> scores, std::size_t i, std::size_t j, double margin, double phi) {
  return phi * std::max(0.0, margin - scores[i] + scores[j]);
}

HingeGradients hinge_grads(ScoreKind kind, std::span<const double> user, std::span<const double> positive,
                           std::span<const double> negative, double margin, double phi) {
  const std::size_t d = user.size();
  HingeGradients g{false, std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const double slack = margin - score_vectors(kind, user, positive) + score_vectors(kind, user, negative);
  if (!(slack > 0.0)) return g;
  g.active = true;
  if (kind == ScoreKind::kDot) {
    for (std::size_t a = 0; a < d; ++a) {
      g.user[a] = phi * (negative[a] - positive[a]);
      g.positive[a] = -phi * user[a];
      g.negative[a] = phi * user[a];
    }
  } else {
    for (std::size_t a = 0; a < d; ++a) {
      g.user[a] = 2.0 * phi * (negative[a] - positive[a]);
      g.positive[a] = 2.0 * phi * (positive[a] - user[a]);
      g.negative[a] = 2.0 * phi * (user[a] - negative[a]);
    }
  }
  return g;
}

HingeGradients hinge_grads(const FactorModel& model, UserId u, ItemId positive, ItemId negative, double margin,
                           double phi) {
  return hinge_grads(model.kind(), model.user(u), model.item(positive), model.item(negative), margin, phi);
}

double drm_loss(std::span<const double> y, std::span<const double> scores, std::span<const double> weights,
                double tau) {
  if (y.size() != scores.size()) throw std::invalid_argument("label and score vectors differ in length");
  const auto q = weighted_truncated_sum(scores, weights, tau);
  double loss = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) loss += (y[j] - q[j]) * (y[j] - q[j]);
  return loss;
}

double DrmGradientWorkspace::evaluate(std::span<const double> y, std::span<const double> scores,
                                      std::span<const double> weights, double tau, std::span<double> grad) {
  const std::size_t n = scores.size();
  const std::size_t cutoff = weights.size();
  if (y.size() != n || grad.size() != n) throw std::invalid_argument("label/score/gradient lengths differ");
  if (cutoff == 0 || cutoff > n) throw std::invalid_argument(fmt::format("cutoff {} outside [1, {}]", cutoff, n));

  const RelaxedSort sorter(scores, tau);
  n_ = n;
  tau_ = tau;
  weights_.assign(weights.begin(), weights.end());

  sign_ = DenseMatrix(n, n);
  r_ = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double row_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l == j) continue;
      const double sgn = scores[j] > scores[l] ? 1.0 : (scores[j] < scores[l] ? -1.0 : 0.0);
      sign_(j, l) = sgn;
      r_(j, l) = sgn;
      row_sum += sgn;
    }
    r_(j, j) = -row_sum;
  }

  sigma_ = DenseMatrix(cutoff, n);
  truncated_.assign(n, 0.0);
  for (std::size_t k = 1; k <= cutoff; ++k) {
    const auto row = sorter.row(k);
    std::ranges::copy(row, sigma_.row(k - 1).begin());
    for (std::size_t j = 0; j < n; ++j) truncated_[j] += weights[k - 1] * row[j];
  }

  residual_.resize(n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    residual_[j] = y[j] - truncated_[j];
    loss += residual_[j] * residual_[j];
  }

  // acc_diag = sum_k w_k (n+1-2k) H^(k) v, acc_r = sum_k w_k H^(k) v.
  acc_diag_.assign(n, 0.0);
  acc_r_.assign(n, 0.0);
  hv_.resize(n);
  for (std::size_t k = 1; k <= cutoff; ++k) {
    const auto sigma = sigma_.row(k - 1);
    const double sv = dot(sigma, residual_);
    for (std::size_t j = 0; j < n; ++j) hv_[j] = sigma[j] * (residual_[j] - sv);
    const double w = weights[k - 1];
    const double diag = static_cast<double>(n + 1) - 2.0 * static_cast<double>(k);
    for (std::size_t j = 0; j < n; ++j) {
      acc_diag_[j] += w * diag * hv_[j];
      acc_r_[j] += w * hv_[j];
    }
  }

  const double scale = -2.0 / tau;
  for (std::size_t j = 0; j < n; ++j) {
    double rt = 0.0;  // (R^T acc_r)_j
    for (std::size_t l = 0; l < n; ++l) rt += r_(l, j) * acc_r_[l];
    grad[j] = scale * (acc_diag_[j] + rt);
  }
  return loss;
}

DenseMatrix DrmGradientWorkspace::softmax_jacobian(std::size_t k) const {
  if (k < 1 || k > cutoff()) throw std::out_of_range("rank outside the evaluated cutoff");
  const auto sigma = sigma_.row(k - 1);
  DenseMatrix h(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) h(i, j) = (i == j ? sigma[i] : 0.0) - sigma[i] * sigma[j];
  return h;
}

DenseMatrix DrmGradientWorkspace::weight_matrix(std::size_t k) const {
  const DenseMatrix h = softmax_jacobian(k);
  const double diag = static_cast<double>(n_ + 1) - 2.0 * static_cast<double>(k);
  DenseMatrix jac(n_, n_);  // H^(k) (D^(k) + R)
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      double s = h(i, j) * diag;
      for (std::size_t l = 0; l < n_; ++l) s += h(i, l) * r_(l, j);
      jac(i, j) = s;
    }
  DenseMatrix w = jac.transpose();
  for (double& x : w.data()) x *= weights_[k - 1];
  return w;
}

std::vector<double> drm_grad_scores(std::span<const double> y, std::span<const double> scores,
                                    std::span<const double> weights, double tau) {
  DrmGradientWorkspace ws;
  std::vector<double> grad(scores.size());
  ws.evaluate(y, scores, weights, tau, grad);
  return grad;
}

void chain_to_factors(ScoreKind kind, std::span<const double> user, const DenseMatrix& item_rows,
                      FactorGradients& out) {
  const std::size_t d = user.size();
  const std::size_t n = item_rows.rows();
  out.user.assign(d, 0.0);
  out.items = DenseMatrix(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    const double g = out.score_gradient[t];
    const auto beta = item_rows.row(t);
    auto gb = out.items.row(t);
    if (kind == ScoreKind::kDot) {
      for (std::size_t a = 0; a < d; ++a) {
        out.user[a] += g * beta[a];
        gb[a] = g * user[a];
      }
    } else {
      for (std::size_t a = 0; a < d; ++a) {
        const double diff = user[a] - beta[a];
        out.user[a] += -2.0 * g * diff;
        gb[a] = 2.0 * g * diff;
      }
    }
  }
}

FactorGradients drm_grads_factors(const FactorModel& model, UserId u, std::span<const ItemId> items,
                                  std::span<const double> y, std::span<const double> weights, double tau) {
  const auto scores = model.score_list(u, items);
  FactorGradients out;
  out.score_gradient.resize(items.size());
  DrmGradientWorkspace ws;
  out.loss = ws.evaluate(y, scores, weights, tau, out.score_gradient);
  DenseMatrix rows(items.size(), model.dim());
  for (std::size_t t = 0; t < items.size(); ++t) std::ranges::copy(model.item(items[t]), rows.row(t).begin());
  chain_to_factors(model.kind(), model.user(u), rows, out);
  return out;
}

MseResult mse_loss(std::span<const double> y, std::span<const double> scores) {
  if (y.size() != scores.size()) throw std::invalid_argument("label and score vectors differ in length");
  MseResult out{0.0, std::vector<double>(y.size())};
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double r = scores[j] - y[j];
    out.value += r * r;
    out.gradient[j] = 2.0 * r;
  }
  return out;
}

}  // namespace drmrec
