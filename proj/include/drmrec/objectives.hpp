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
#include "drmrec/factor_model.hpp"

namespace drmrec {

// Rank-estimate weight of a positive item from sampled negatives:
// log(1 + (N / |J|) * #{j in J : 1 - s_i + s_j >= 0}). The margin inside the
// indicator is the constant 1, independent of the hinge margin.
double phi_weight(double positive_score, std::span<const double> negative_scores, std::size_t num_items);
double phi_weight(const FactorModel& model, UserId u, ItemId positive, std::span<const ItemId> negatives);

// phi * max(0, margin - s_i + s_j) for positions i, j of `scores`.
double hinge_loss(std::span<const double> scores, std::size_t i, std::size_t j, double margin, double phi);

struct HingeGradients {
  bool active = false;
  std::vector<double> user;
  std::vector<double> positive;
  std::vector<double> negative;
};

// Gradients of phi * [margin - s(u,i) + s(u,j)]_+ with respect to the user,
// positive and negative item factors. Zero when the margin is satisfied.
HingeGradients hinge_grads(ScoreKind kind, std::span<const double> user, std::span<const double> positive,
                           std::span<const double> negative, double margin, double phi);
HingeGradients hinge_grads(const FactorModel& model, UserId u, ItemId positive, ItemId negative, double margin,
                           double phi);

// ||y - sum_{k<=K} w_k P~_k(scores)||^2, K = weights.size().
double drm_loss(std::span<const double> y, std::span<const double> scores, std::span<const double> weights,
                double tau);

// Gradient of the DRM loss with respect to the score vector,
//
//   grad = -(2 / tau) sum_k W^(k) (y - P~[1:K]),
//   W^(k) = w_k (H^(k) (D^(k) + R))^T,
//   H^(k) = diag(sigma_k) - sigma_k sigma_k^T, sigma_k = softmax(z^(k)),
//   D^(k) = (n + 1 - 2k) I,
//   R_jl  = sgn(s_j - s_l) off the diagonal, R_jj = -sum_{l != j} sgn(s_j - s_l).
//
// H^(k) is symmetric and R does not depend on k, so the sum is evaluated as
// (D + R)^T applied to H^(k) v without forming any n x n product. The
// explicit matrices are available for inspection after evaluate().
// Ties get sgn = 0.
class DrmGradientWorkspace {
 public:
  // Returns the loss and writes the score gradient into `grad` (size n).
  double evaluate(std::span<const double> y, std::span<const double> scores, std::span<const double> weights,
                  double tau, std::span<double> grad);

  std::size_t size() const { return n_; }
  std::size_t cutoff() const { return weights_.size(); }

  std::span<const double> truncated_sum() const { return truncated_; }
  std::span<const double> softmax_row(std::size_t k) const { return sigma_.row(k - 1); }
  const DenseMatrix& sign_matrix() const { return sign_; }
  const DenseMatrix& sign_structure() const { return r_; }
  DenseMatrix softmax_jacobian(std::size_t k) const;
  DenseMatrix weight_matrix(std::size_t k) const;

 private:
  std::size_t n_ = 0;
  double tau_ = 1.0;
  std::vector<double> weights_;
  DenseMatrix sign_;
  DenseMatrix r_;
  DenseMatrix sigma_;  // K x n
  std::vector<double> truncated_;
  std::vector<double> residual_, acc_diag_, acc_r_, hv_;
};

std::vector<double> drm_grad_scores(std::span<const double> y, std::span<const double> scores,
                                    std::span<const double> weights, double tau);

// Gradient of a score-vector loss pushed through the score function.
struct FactorGradients {
  double loss = 0.0;
  std::vector<double> score_gradient;
  std::vector<double> user;
  DenseMatrix items;  // row t belongs to the t-th listed item
};

// dot:    ds_t/dalpha = beta_t,            ds_t/dbeta_t = alpha
// neg-l2: ds_t/dalpha = -2 (alpha - beta_t), ds_t/dbeta_t = 2 (alpha - beta_t)
void chain_to_factors(ScoreKind kind, std::span<const double> user, const DenseMatrix& item_rows,
                      FactorGradients& out);

FactorGradients drm_grads_factors(const FactorModel& model, UserId u, std::span<const ItemId> items,
                                  std::span<const double> y, std::span<const double> weights, double tau);

struct MseResult {
  double value = 0.0;
  std::vector<double> gradient;
};

// ||y - s||^2 and 2 (s - y).
MseResult mse_loss(std::span<const double> y, std::span<const double> scores);

}  // namespace drmrec
