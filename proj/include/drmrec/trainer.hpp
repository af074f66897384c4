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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drmrec/common.hpp"
#include "drmrec/factor_model.hpp"
#include "drmrec/interactions.hpp"
#include "drmrec/metrics.hpp"
#include "drmrec/objectives.hpp"
#include "drmrec/relaxed_sort.hpp"

namespace drmrec {

// Objective paired with the DRM term. kNone trains on DRM alone.
enum class BaseLoss { kHinge, kMse, kNone };

BaseLoss parse_base_loss(std::string_view name);
std::string_view to_string(BaseLoss loss);

// kBatch pools the factors touched by a step around a cached global mean;
// kFull recomputes mean and covariance over every factor each step.
enum class CovarianceMode { kBatch, kFull };

struct HyperParams {
  std::size_t dim = 64;
  double learning_rate = 0.05;
  double tau = 1.0;
  double lambda = 1.0;          // weight of the DRM loss
  double lambda_cov = 1.0;      // covariance regularization, neg-l2 only
  std::size_t positives = 3;    // rho
  std::size_t negatives = 0;    // eta; 0 means 15 * rho
  double margin = 1.0;          // mu
  std::size_t cutoff = 10;      // K of the relaxed metric
  WeightKind weight = WeightKind::kConstantOne;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  ScoreKind score_kind = ScoreKind::kDot;
  std::size_t min_train = 5;
  BaseLoss base_loss = BaseLoss::kHinge;
  std::size_t patience = 10;
  std::size_t validation_cutoff = 50;
  std::optional<double> init_scale;
  double adagrad_epsilon = 1e-8;
  CovarianceMode covariance_mode = CovarianceMode::kBatch;
  std::size_t covariance_refresh = 128;
  bool track_train_metrics = true;

  std::size_t effective_negatives() const { return negatives ? negatives : 15 * positives; }
  // Throws ConfigError.
  void validate() const;
};

// Items are the sampled positives followed by the sampled negatives; labels
// are 1 for the former and 0 for the latter.
struct TrainingSample {
  UserId user = 0;
  std::vector<ItemId> positives;
  std::vector<ItemId> negatives;
  std::vector<ItemId> items;
  std::vector<double> labels;
};

// min(rho, |V_u|) positives and eta negatives, each uniform without
// replacement. Throws std::invalid_argument if the user has no positives or
// fewer than eta negatives exist.
TrainingSample draw_sample(const InteractionMatrix& train, UserId u, std::size_t rho, std::size_t eta, Rng& rng);

// Lowest-scored positive and highest-scored negative, as indices into
// sample.positives and sample.negatives. `scores` follows sample.items.
struct HardestPair {
  std::size_t positive = 0;
  std::size_t negative = 0;
};
HardestPair hardest_pair(const TrainingSample& sample, std::span<const double> scores);

// Per-coordinate Adagrad: G += g^2, theta -= lr * g / sqrt(G + eps).
class AdagradState {
 public:
  AdagradState(std::size_t num_users, std::size_t num_items, std::size_t dim, double learning_rate, double epsilon);

  void apply_user(UserId u, std::span<double> theta, std::span<const double> grad);
  void apply_item(ItemId i, std::span<double> theta, std::span<const double> grad);

  const DenseMatrix& user_accumulator() const { return user_acc_; }
  const DenseMatrix& item_accumulator() const { return item_acc_; }

 private:
  void apply(std::span<double> acc, std::span<double> theta, std::span<const double> grad) const;

  double learning_rate_;
  double epsilon_;
  DenseMatrix user_acc_;
  DenseMatrix item_acc_;
};

// Loss terms of one step, measured before the update.
struct StepStats {
  double hinge_loss = 0.0;
  double drm_loss = 0.0;
  double mse_loss = 0.0;
  double cov_loss = 0.0;
  double phi = 0.0;
  bool hinge_active = false;
  HardestPair pair;

  double total(const HyperParams& hp) const {
    return hinge_loss + hp.lambda * drm_loss + mse_loss + hp.lambda_cov * cov_loss;
  }
};

// Owns a model and its optimizer state for one training run.
class Trainer {
 public:
  Trainer(const InteractionMatrix& train, const HyperParams& hp, FactorModel model);

  // Accumulates the base-loss, lambda * DRM and lambda_C * covariance
  // gradients for every factor in the sample, applies one Adagrad update
  // and projects each touched factor into the unit ball. Throws
  // NonFiniteGradientError (model untouched) if any gradient is not finite.
  StepStats step(const TrainingSample& sample);

  // Loss terms for `sample` at the current parameters; no update.
  StepStats measure(const TrainingSample& sample) const;

  const FactorModel& model() const { return model_; }
  FactorModel& model() { return model_; }
  const AdagradState& optimizer() const { return optimizer_; }
  const HyperParams& hyper_params() const { return hp_; }
  Rng& rng() { return rng_; }

  std::size_t steps() const { return steps_; }
  // Number of DRM gradient evaluations so far.
  std::size_t drm_evaluations() const { return drm_evaluations_; }

 private:
  std::vector<double> drm_weights(const TrainingSample& sample, std::size_t n) const;

  const InteractionMatrix* train_;
  HyperParams hp_;
  FactorModel model_;
  AdagradState optimizer_;
  Rng rng_;
  std::size_t steps_ = 0;
  std::size_t drm_evaluations_ = 0;
  std::vector<double> cached_mean_;
  DrmGradientWorkspace workspace_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double hinge_loss_mean = 0.0;
  double drm_loss_mean = 0.0;
  double mse_loss_mean = 0.0;
  double cov_loss = 0.0;
  double total_loss_mean = 0.0;
  double recall_val = 0.0;  // Recall@validation_cutoff
  double ndcg10_val = 0.0;
  double map10_val = 0.0;
  double ndcg10_train = 0.0;
  double map10_train = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct FitResult {
  FactorModel model;  // best-by-validation snapshot
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  std::size_t drm_evaluations = 0;
};

using EpochCallback = std::function<void(const EpochRecord&, const FactorModel&)>;

// Runs epochs of one sampled step per trainable user (shuffled each epoch).
// Epoch 0 records the initial model, measured on one sampled pass without
// updates. Keeps the snapshot with the best validation recall and stops
// after `patience` epochs without improvement. epochs == 0 returns the
// initial model and an empty trace.
FitResult fit(const InteractionMatrix& train, const InteractionMatrix& validation, const HyperParams& hp,
              const EpochCallback& callback = {});

// Tab-separated trace with a header row.
std::string format_trace(std::span<const EpochRecord> trace, const HyperParams& hp);

}  // namespace drmrec
