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

#include "drmrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace drmrec {

BaseLoss parse_base_loss(std::string_view name) {
  if (name == "hinge") return BaseLoss::kHinge;
  if (name == "mse") return BaseLoss::kMse;
  if (name == "none") return BaseLoss::kNone;
  throw ConfigError(fmt::format("unknown base loss '{}' (expected hinge, mse or none)", name));
}

std::string_view to_string(BaseLoss loss) {
  switch (loss) {
    case BaseLoss::kHinge: return "hinge";
    case BaseLoss::kMse: return "mse";
    case BaseLoss::kNone: return "none";
  }
  return "?";
}

void HyperParams::validate() const {
  if (dim == 0) throw ConfigError("dim must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("lr must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError(fmt::format("tau must be positive, got {}", tau));
  if (tau < kMinTemperature)
    throw ConfigError(fmt::format("tau {} is below the supported floor {}", tau, kMinTemperature));
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(lambda_cov >= 0.0)) throw ConfigError("lambda_cov must be >= 0");
  if (positives == 0) throw ConfigError("rho (positives) must be >= 1");
  if (effective_negatives() == 0) throw ConfigError("eta (negatives) must be >= 1");
  if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
  if (cutoff == 0) throw ConfigError("cutoff K must be >= 1");
  if (validation_cutoff == 0) throw ConfigError("validation cutoff must be >= 1");
  if (lambda > 0.0 && weight == WeightKind::kAp)
    throw ConfigError("the AP weight depends on the ranking; use precision, recall, ndcg or constant-one");
  if (base_loss == BaseLoss::kNone && lambda == 0.0) throw ConfigError("nothing to optimize: base_loss=none and lambda=0");
  if (!(adagrad_epsilon > 0.0)) throw ConfigError("adagrad epsilon must be positive");
  if (covariance_refresh == 0) throw ConfigError("covariance refresh interval must be >= 1");
  if (init_scale && !(*init_scale >= 0.0)) throw ConfigError("init scale must be >= 0");
}

TrainingSample draw_sample(const InteractionMatrix& train, UserId u, std::size_t rho, std::size_t eta, Rng& rng) {
  const auto owned = train.items(u);
  if (owned.empty()) throw std::invalid_argument(fmt::format("user {} has no positives to sample", u));
  const std::size_t available = train.num_items() - owned.size();
  if (eta > available)
    throw std::invalid_argument(fmt::format("cannot sample {} negatives for user {}: only {} exist", eta, u, available));

  TrainingSample s;
  s.user = u;
  std::vector<ItemId> pool(owned.begin(), owned.end());
  const std::size_t take = std::min(rho, pool.size());
  for (std::size_t t = 0; t < take; ++t) {
    const std::size_t pick = t + static_cast<std::size_t>(rng.uniform_index(pool.size() - t));
    std::swap(pool[t], pool[pick]);
  }
  s.positives.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));

  if (2 * eta <= available) {
    // Sparse users: rejection sampling is cheap.
    while (s.negatives.size() < eta) {
      const auto j = static_cast<ItemId>(rng.uniform_index(train.num_items()));
      if (train.contains(u, j) || std::find(s.negatives.begin(), s.negatives.end(), j) != s.negatives.end()) continue;
      s.negatives.push_back(j);
    }
  } else {
    std::vector<ItemId> complement;
    complement.reserve(available);
    for (ItemId j = 0; j < train.num_items(); ++j)
      if (!train.contains(u, j)) complement.push_back(j);
    for (std::size_t t = 0; t < eta; ++t) {
      const std::size_t pick = t + static_cast<std::size_t>(rng.uniform_index(complement.size() - t));
      std::swap(complement[t], complement[pick]);
    }
    s.negatives.assign(complement.begin(), complement.begin() + static_cast<std::ptrdiff_t>(eta));
  }

  s.items = s.positives;
  s.items.insert(s.items.end(), s.negatives.begin(), s.negatives.end());
  s.labels.assign(s.items.size(), 0.0);
  std::fill(s.labels.begin(), s.labels.begin() + static_cast<std::ptrdiff_t>(s.positives.size()), 1.0);
  return s;
}

HardestPair hardest_pair(const TrainingSample& sample, std::span<const double> scores) {
  const std::size_t rho = sample.positives.size();
  if (rho == 0 || sample.negatives.empty()) throw std::invalid_argument("sample needs a positive and a negative");
  HardestPair pair;
  for (std::size_t t = 1; t < rho; ++t)
    if (scores[t] < scores[pair.positive]) pair.positive = t;
  for (std::size_t t = 1; t < sample.negatives.size(); ++t)
    if (scores[rho + t] > scores[rho + pair.negative]) pair.negative = t;
  return pair;
}

AdagradState::AdagradState(std::size_t num_users, std::size_t num_items, std::size_t dim, double learning_rate,
                           double epsilon)
    : learning_rate_(learning_rate), epsilon_(epsilon), user_acc_(num_users, dim), item_acc_(num_items, dim) {}

void AdagradState::apply(std::span<double> acc, std::span<double> theta, std::span<const double> grad) const {
  for (std::size_t a = 0; a < theta.size(); ++a) {
    acc[a] += grad[a] * grad[a];
    theta[a] -= learning_rate_ * grad[a] / std::sqrt(acc[a] + epsilon_);
  }
}

void AdagradState::apply_user(UserId u, std::span<double> theta, std::span<const double> grad) {
  apply(user_acc_.row(u), theta, grad);
}

void AdagradState::apply_item(ItemId i, std::span<double> theta, std::span<const double> grad) {
  apply(item_acc_.row(i), theta, grad);
}

Trainer::Trainer(const InteractionMatrix& train, const HyperParams& hp, FactorModel model)
    : train_(&train),
      hp_(hp),
      model_(std::move(model)),
      optimizer_(model_.num_users(), model_.num_items(), model_.dim(), hp.learning_rate, hp.adagrad_epsilon),
      rng_(hp.seed) {
  hp_.validate();
  if (model_.num_users() != train.num_users() || model_.num_items() != train.num_items())
    throw std::invalid_argument("model does not cover the training index space");
}

std::vector<double> Trainer::drm_weights(const TrainingSample& sample, std::size_t n) const {
  // The relaxed metric cannot look past the sampled list.
  return rank_weights({hp_.weight, std::min(hp_.cutoff, n)}, sample.positives.size());
}

namespace {

DenseMatrix item_rows(const FactorModel& model, std::span<const ItemId> items) {
  DenseMatrix rows(items.size(), model.dim());
  for (std::size_t t = 0; t < items.size(); ++t) std::ranges::copy(model.item(items[t]), rows.row(t).begin());
  return rows;
}

bool uses_covariance(const HyperParams& hp) { return hp.score_kind == ScoreKind::kNegL2 && hp.lambda_cov > 0.0; }

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
  for (std::size_t a = 0; a < dst.size(); ++a) dst[a] += scale * src[a];
}

}  // namespace

StepStats Trainer::measure(const TrainingSample& sample) const {
  const auto scores = model_.score_list(sample.user, sample.items);
  StepStats st;
  st.pair = hardest_pair(sample, scores);
  const std::size_t rho = sample.positives.size();
  const std::size_t pos_t = st.pair.positive;
  const std::size_t neg_t = rho + st.pair.negative;
  if (hp_.base_loss == BaseLoss::kHinge) {
    st.phi = phi_weight(scores[pos_t], std::span(scores).subspan(rho), model_.num_items());
    st.hinge_loss = hinge_loss(scores, pos_t, neg_t, hp_.margin, st.phi);
    st.hinge_active = hp_.margin - scores[pos_t] + scores[neg_t] > 0.0;
  } else if (hp_.base_loss == BaseLoss::kMse) {
    st.mse_loss = mse_loss(sample.labels, scores).value;
  }
  if (hp_.lambda > 0.0)
    st.drm_loss = drm_loss(sample.labels, scores, drm_weights(sample, scores.size()), hp_.tau);
  if (uses_covariance(hp_)) {
    if (hp_.covariance_mode == CovarianceMode::kFull) {
      st.cov_loss = covariance_loss(model_).value;
    } else {
      DenseMatrix rows(sample.items.size() + 1, model_.dim());
      std::ranges::copy(model_.user(sample.user), rows.row(0).begin());
      for (std::size_t t = 0; t < sample.items.size(); ++t)
        std::ranges::copy(model_.item(sample.items[t]), rows.row(t + 1).begin());
      const auto mean = cached_mean_.empty() ? covariance_loss(model_).stats.mean : cached_mean_;
      st.cov_loss = covariance_loss(rows, mean).value;
    }
  }
  return st;
}

StepStats Trainer::step(const TrainingSample& sample) {
  const UserId u = sample.user;
  const std::size_t n = sample.items.size();
  const std::size_t d = model_.dim();
  const std::size_t rho = sample.positives.size();
  const auto scores = model_.score_list(u, sample.items);
  const DenseMatrix rows = item_rows(model_, sample.items);

  StepStats st;
  st.pair = hardest_pair(sample, scores);
  const std::size_t pos_t = st.pair.positive;
  const std::size_t neg_t = rho + st.pair.negative;

  std::vector<double> delta_user(d, 0.0);
  DenseMatrix delta_items(n, d);

  if (hp_.base_loss == BaseLoss::kHinge) {
    st.phi = phi_weight(scores[pos_t], std::span(scores).subspan(rho), model_.num_items());
    st.hinge_loss = hinge_loss(scores, pos_t, neg_t, hp_.margin, st.phi);
    const auto g = hinge_grads(model_.kind(), model_.user(u), rows.row(pos_t), rows.row(neg_t), hp_.margin, st.phi);
    st.hinge_active = g.active;
    add_scaled(delta_user, g.user, 1.0);
    add_scaled(delta_items.row(pos_t), g.positive, 1.0);
    add_scaled(delta_items.row(neg_t), g.negative, 1.0);
  } else if (hp_.base_loss == BaseLoss::kMse) {
    auto mse = mse_loss(sample.labels, scores);
    st.mse_loss = mse.value;
    FactorGradients fg;
    fg.score_gradient = std::move(mse.gradient);
    chain_to_factors(model_.kind(), model_.user(u), rows, fg);
    add_scaled(delta_user, fg.user, 1.0);
    add_scaled(delta_items.data(), fg.items.data(), 1.0);
  }

  if (hp_.lambda > 0.0) {
    FactorGradients fg;
    fg.score_gradient.resize(n);
    fg.loss = workspace_.evaluate(sample.labels, scores, drm_weights(sample, n), hp_.tau, fg.score_gradient);
    chain_to_factors(model_.kind(), model_.user(u), rows, fg);
    st.drm_loss = fg.loss;
    add_scaled(delta_user, fg.user, hp_.lambda);
    add_scaled(delta_items.data(), fg.items.data(), hp_.lambda);
    ++drm_evaluations_;
  }

  if (uses_covariance(hp_)) {
    if (hp_.covariance_mode == CovarianceMode::kFull) {
      const auto cl = covariance_loss(model_);
      st.cov_loss = cl.value;
      add_scaled(delta_user, cl.gradient.row(u), hp_.lambda_cov);
      for (std::size_t t = 0; t < n; ++t)
        add_scaled(delta_items.row(t), cl.gradient.row(model_.num_users() + sample.items[t]), hp_.lambda_cov);
    } else {
      if (cached_mean_.empty() || steps_ % hp_.covariance_refresh == 0)
        cached_mean_ = covariance_loss(model_).stats.mean;
      DenseMatrix pooled(n + 1, d);
      std::ranges::copy(model_.user(u), pooled.row(0).begin());
      for (std::size_t t = 0; t < n; ++t) std::ranges::copy(rows.row(t), pooled.row(t + 1).begin());
      const auto cl = covariance_loss(pooled, cached_mean_);
      st.cov_loss = cl.value;
      add_scaled(delta_user, cl.gradient.row(0), hp_.lambda_cov);
      for (std::size_t t = 0; t < n; ++t) add_scaled(delta_items.row(t), cl.gradient.row(t + 1), hp_.lambda_cov);
    }
  }

  const auto finite = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(delta_user) || !finite(delta_items.data()))
    throw NonFiniteGradientError(
        fmt::format("non-finite gradient for user {} (tau={}, scores=[{:.6g}])", u, hp_.tau, fmt::join(scores, ", ")));

  optimizer_.apply_user(u, model_.user(u), delta_user);
  project_unit_ball(model_.user(u));
  for (std::size_t t = 0; t < n; ++t) {
    const ItemId i = sample.items[t];
    optimizer_.apply_item(i, model_.item(i), delta_items.row(t));
    project_unit_ball(model_.item(i));
  }
  ++steps_;
  return st;
}

namespace {

struct LossTotals {
  double hinge = 0.0, drm = 0.0, mse = 0.0, cov = 0.0, total = 0.0;
  std::size_t count = 0;

  void add(const StepStats& st, const HyperParams& hp) {
    hinge += st.hinge_loss;
    drm += st.drm_loss;
    mse += st.mse_loss;
    cov += st.cov_loss;
    total += st.total(hp);
    ++count;
  }

  void write(EpochRecord& rec) const {
    const double c = count ? static_cast<double>(count) : 1.0;
    rec.hinge_loss_mean = hinge / c;
    rec.drm_loss_mean = drm / c;
    rec.mse_loss_mean = mse / c;
    rec.cov_loss = cov / c;
    rec.total_loss_mean = total / c;
  }
};

}  // namespace

FitResult fit(const InteractionMatrix& train, const InteractionMatrix& validation, const HyperParams& hp,
              const EpochCallback& callback) {
  hp.validate();
  if (train.num_users() != validation.num_users() || train.num_items() != validation.num_items())
    throw std::invalid_argument("train and validation do not share an index space");

  FitResult result;
  result.model = init_model(train.num_users(), train.num_items(), hp.dim, hp.score_kind, hp.seed, hp.init_scale);
  if (hp.epochs == 0) return result;

  const std::size_t eta = hp.effective_negatives();
  std::vector<UserId> users;
  for (UserId u = 0; u < train.num_users(); ++u) {
    const std::size_t owned = train.items(u).size();
    if (owned > 0 && train.num_items() - owned >= eta) users.push_back(u);
  }
  if (users.empty()) throw EmptyDatasetError("no user has both positives and enough negatives to train on");

  Trainer trainer(train, hp, result.model);

  const std::vector<MetricRequest> val_metrics = {
      {WeightKind::kRecall, hp.validation_cutoff}, {WeightKind::kNdcg, 10}, {WeightKind::kAp, 10}};
  const std::vector<MetricRequest> train_metrics = {{WeightKind::kNdcg, 10}, {WeightKind::kAp, 10}};
  const bool has_validation = !eligible_users(train, validation, hp.min_train).empty();
  const InteractionMatrix nothing_known = train.with_lists(std::vector<std::vector<ItemId>>(train.num_users()));

  auto fill_metrics = [&](EpochRecord& rec, const FactorModel& model) {
    if (has_validation) {
      const auto report = evaluate_model(model, train, validation, val_metrics, hp.min_train);
      rec.recall_val = report.rows[0].mean;
      rec.ndcg10_val = report.rows[1].mean;
      rec.map10_val = report.rows[2].mean;
    }
    if (hp.track_train_metrics) {
      const auto report = evaluate_model(model, nothing_known, train, train_metrics, 0);
      rec.ndcg10_train = report.rows[0].mean;
      rec.map10_train = report.rows[1].mean;
    }
  };

  {
    EpochRecord rec;
    LossTotals totals;
    Rng probe(hp.seed ^ 0x9E3779B97F4A7C15ULL);
    for (UserId u : users) totals.add(trainer.measure(draw_sample(train, u, hp.positives, eta, probe)), hp);
    totals.write(rec);
    fill_metrics(rec, trainer.model());
    result.trace.push_back(rec);
    if (callback) callback(rec, trainer.model());
  }

  double best_recall = result.trace.front().recall_val;
  std::size_t stale = 0;
  std::vector<UserId> order = users;
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    order = users;
    trainer.rng().shuffle(order);
    LossTotals totals;
    for (UserId u : order) {
      const auto sample = draw_sample(train, u, hp.positives, eta, trainer.rng());
      totals.add(trainer.step(sample), hp);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    totals.write(rec);
    fill_metrics(rec, trainer.model());
    result.trace.push_back(rec);
    if (callback) callback(rec, trainer.model());

    if (!has_validation || rec.recall_val > best_recall) {
      best_recall = rec.recall_val;
      result.model = trainer.model();
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= hp.patience) {
      break;
    }
  }
  result.drm_evaluations = trainer.drm_evaluations();
  return result;
}

std::string format_trace(std::span<const EpochRecord> trace, const HyperParams& hp) {
  std::string out = fmt::format(
      "epoch\thinge_loss_mean\tdrm_loss_mean\tmse_loss_mean\tcov_loss\ttotal_loss_mean\t"
      "recall@{}_val\tndcg@10_val\tmap@10_val\tndcg@10_train\tmap@10_train\n",
      hp.validation_cutoff);
  for (const auto& r : trace)
    out += fmt::format("{}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\t{:.10g}\n",
                       r.epoch, r.hinge_loss_mean, r.drm_loss_mean, r.mse_loss_mean, r.cov_loss, r.total_loss_mean,
                       r.recall_val, r.ndcg10_val, r.map10_val, r.ndcg10_train, r.map10_train);
  return out;
}

}  // namespace drmrec
