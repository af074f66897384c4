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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: drmrec_acceptance [--only N] [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "drmrec/factor_model.hpp"
#include "drmrec/harness.hpp"
#include "drmrec/interactions.hpp"
#include "drmrec/metrics.hpp"
#include "drmrec/objectives.hpp"
#include "drmrec/relaxed_sort.hpp"
#include "drmrec/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace drmrec;
using oracle::Vec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Gradient coordinates smaller than this are compared in absolute terms:
// central differences at h = 1e-5 carry roughly 1e-11 of rounding noise,
// which a purely relative test would misread on near-zero coordinates.
constexpr double kRelFloor = 1e-6;

// ---------------------------------------------------------------------------
// 1. DRM gradients against central differences.

Outcome drm_gradient_oracle() {
  const auto t0 = Clock::now();
  std::size_t total = 0, within = 0, cases = 0;
  double worst = 0.0;
  // Side measurements against exact forward-mode derivatives of the scores.
  double worst_exact = 0.0, worst_fd_exact = 0.0;
  std::string worst_case;
  for (std::size_t n : {3u, 5u, 10u})
    for (std::size_t d : {2u, 8u})
      for (double tau : {0.1, 1.0, 10.0})
        for (std::size_t K : {std::size_t{1}, (n + 1) / 2, n})
          for (ScoreKind kind : {ScoreKind::kDot, ScoreKind::kNegL2})
            for (std::uint64_t seed = 0; seed < 50; ++seed) {
              std::mt19937_64 gen(seed * 1000003ULL + n * 7919ULL + d * 104729ULL + K * 31ULL +
                                  static_cast<std::uint64_t>(tau * 100) + (kind == ScoreKind::kDot ? 0 : 17));
              std::uniform_real_distribution<double> u(-1.0, 1.0);
              const double scale = 1.0 / std::sqrt(static_cast<double>(d));
              FactorModel model(1, n, d, kind);
              std::vector<double> scores;
              std::vector<ItemId> items(n);
              std::iota(items.begin(), items.end(), 0u);
              do {
                for (double& v : model.user(0)) v = scale * u(gen);
                for (ItemId i = 0; i < n; ++i)
                  for (double& v : model.item(i)) v = scale * u(gen);
                scores = model.score_list(0, items);
              } while (oracle::min_gap(scores) < 1e-3);

              const std::size_t positives = 1 + gen() % (n - 1);
              Vec y(n, 0.0);
              std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(positives), 1.0);
              const Vec w(K, 1.0);

              std::vector<double> analytic = drm_grad_scores(y, scores, w, tau);
              const auto fg = drm_grads_factors(model, 0, items, y, w, tau);
              analytic.insert(analytic.end(), fg.user.begin(), fg.user.end());
              analytic.insert(analytic.end(), fg.items.data().begin(), fg.items.data().end());

              Vec numeric = oracle::fd_gradient([&](const Vec& s) { return oracle::drm_loss(y, s, w, tau); }, scores);
              for (std::size_t c = 0; c < n; ++c) {
                const double exact = oracle::drm_loss_derivative(y, scores, w, tau, c);
                worst_exact = std::max(worst_exact, oracle::rel_error(analytic[c], exact, kRelFloor));
                worst_fd_exact = std::max(worst_fd_exact, oracle::rel_error(numeric[c], exact, kRelFloor));
              }
              Vec x(model.user(0).begin(), model.user(0).end());
              x.insert(x.end(), model.item_factors().data().begin(), model.item_factors().data().end());
              const auto through_factors = [&](const Vec& v) {
                const Vec a(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d));
                Vec s(n);
                for (std::size_t t = 0; t < n; ++t) {
                  const Vec b(v.begin() + static_cast<std::ptrdiff_t>(d * (t + 1)),
                              v.begin() + static_cast<std::ptrdiff_t>(d * (t + 2)));
                  s[t] = kind == ScoreKind::kDot ? oracle::dot_score(a, b) : oracle::neg_l2_score(a, b);
                }
                return oracle::drm_loss(y, s, w, tau);
              };
              const Vec numeric_factors = oracle::fd_gradient(through_factors, x);
              numeric.insert(numeric.end(), numeric_factors.begin(), numeric_factors.end());

              ++cases;
              for (std::size_t c = 0; c < analytic.size(); ++c) {
                const double e = oracle::rel_error(analytic[c], numeric[c], kRelFloor);
                ++total;
                if (e <= 1e-5) ++within;
                if (e > worst) {
                  worst = e;
                  worst_case = fmt::format("n={} d={} tau={} K={} {} seed={} coord={}", n, d, tau, K, to_string(kind),
                                           seed, c);
                }
              }
            }
  const double share = static_cast<double>(within) / static_cast<double>(total);
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = share >= 0.98 && worst <= 1e-3 && elapsed <= 60.0;
  o.detail = fmt::format(
      "{} cases, {} coordinates, {:.4f}% within 1e-5, worst {:.2e} ({}), {:.1f}s; "
      "score gradient vs exact forward-mode derivative: analytic worst {:.1e}, finite differences worst {:.1e}",
      cases, total, 100.0 * share, worst, worst_case, elapsed, worst_exact, worst_fd_exact);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Hinge gradients against central differences.

Outcome hinge_gradient_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> phi_dist(0.1, 5.0);
  double worst = 0.0;       // per instance: max |analytic - fd| / max |fd|
  double worst_coord = 0.0;  // per coordinate, for reference
  std::size_t instances = 0;
  for (ScoreKind kind : {ScoreKind::kDot, ScoreKind::kNegL2}) {
    std::size_t made = 0;
    while (made < 200) {
      const std::size_t d = 1 + gen() % 16;
      const double scale = 1.0 / std::sqrt(static_cast<double>(d));
      Vec a(d), bi(d), bj(d);
      for (auto* v : {&a, &bi, &bj})
        for (double& x : *v) x = scale * u(gen);
      const double margin = 1.0;
      const double phi = phi_dist(gen);
      const auto score = [&](const Vec& p, const Vec& q) {
        return kind == ScoreKind::kDot ? oracle::dot_score(p, q) : oracle::neg_l2_score(p, q);
      };
      // Stay clear of the kink so the finite differences see one branch.
      if (margin - score(a, bi) + score(a, bj) < 1e-3) continue;
      ++made;
      const auto g = hinge_grads(kind, a, bi, bj, margin, phi);
      Vec analytic = g.user;
      analytic.insert(analytic.end(), g.positive.begin(), g.positive.end());
      analytic.insert(analytic.end(), g.negative.begin(), g.negative.end());
      Vec x = a;
      x.insert(x.end(), bi.begin(), bi.end());
      x.insert(x.end(), bj.begin(), bj.end());
      const auto loss = [&](const Vec& v) {
        const Vec pa(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d));
        const Vec pi(v.begin() + static_cast<std::ptrdiff_t>(d), v.begin() + static_cast<std::ptrdiff_t>(2 * d));
        const Vec pj(v.begin() + static_cast<std::ptrdiff_t>(2 * d), v.end());
        return phi * std::max(0.0, margin - score(pa, pi) + score(pa, pj));
      };
      const Vec numeric = oracle::fd_gradient(loss, x);
      double diff = 0.0, magnitude = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) {
        diff = std::max(diff, std::abs(analytic[c] - numeric[c]));
        magnitude = std::max(magnitude, std::abs(numeric[c]));
        worst_coord = std::max(worst_coord, oracle::rel_error(analytic[c], numeric[c], kRelFloor));
      }
      worst = std::max(worst, diff / magnitude);
    }
    instances += made;
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-6 && elapsed <= 5.0,
          fmt::format("{} active instances, worst relative error {:.2e} (per coordinate {:.2e}), {:.2f}s", instances,
                      worst, worst_coord, elapsed)};
}

// ---------------------------------------------------------------------------
// 3. Low-temperature relaxed rows pick the sorted order.

Outcome neuralsort_limit() {
  std::mt19937_64 gen(7);
  std::size_t matches = 0;
  double worst_sum = 0.0;
  for (int v = 0; v < 100; ++v) {
    const std::size_t n = 2 + gen() % 63;
    const Vec s = oracle::separated_scores(n, 1e-6, gen, 10.0);
    const RelaxedSort sorter(s, 1e-3);
    const auto hard = hard_perm(s);
    bool all = true;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto row = sorter.row(k);
      const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      all = all && arg == hard.column(k - 1);
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
    }
    matches += all ? 1 : 0;
  }
  return {matches == 100 && worst_sum <= 1e-9,
          fmt::format("{}/100 vectors match the hard permutation, max |row sum - 1| = {:.1e}", matches, worst_sum)};
}

// ---------------------------------------------------------------------------
// 4. Unified metric against direct definitions, exhaustively.

Outcome metric_oracle() {
  std::size_t checks = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<unsigned> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<std::vector<unsigned>> rankings;
    do rankings.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::vector<int> relevant(n, 0);
      std::vector<ItemId> holdout;
      for (unsigned i = 0; i < n; ++i)
        if (mask & (1u << i)) {
          relevant[i] = 1;
          holdout.push_back(i);
        }
      for (const auto& ranking : rankings) {
        const std::vector<ItemId> r(ranking.begin(), ranking.end());
        for (std::size_t K = 1; K <= n; ++K) {
          const double expected[] = {oracle::precision(ranking, relevant, K), oracle::recall(ranking, relevant, K),
                                     oracle::ndcg(ranking, relevant, K),
                                     oracle::average_precision(ranking, relevant, K)};
          const WeightKind kinds[] = {WeightKind::kPrecision, WeightKind::kRecall, WeightKind::kNdcg, WeightKind::kAp};
          for (int m = 0; m < 4; ++m) {
            ++checks;
            if (unified_metric({kinds[m], K}, r, holdout) != expected[m]) ++mismatches;
          }
        }
      }
    }
  }
  const Vec s = {3.0, 5.0, 1.0};
  const auto p = hard_perm(s);
  const DenseMatrix m = p.to_matrix();
  const DenseMatrix want(3, 3, {0, 1, 0, 1, 0, 0, 0, 0, 1});
  const auto sorted = m.multiply(s);
  const bool example = m == want && sorted == Vec{5.0, 3.0, 1.0} && p.apply(s) == Vec{5.0, 3.0, 1.0};
  return {mismatches == 0 && example,
          fmt::format("{} exhaustive comparisons, {} mismatches; [[0,1,0],[1,0,0],[0,0,1]]·[3,5,1] = [{}] {}", checks,
                      mismatches, fmt::join(sorted, ","), example ? "as expected" : "WRONG")};
}

// ---------------------------------------------------------------------------
// 5. Relaxed metric bounds the DRM loss from below.

Outcome bound_property() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> logtau(-2.0, 1.0);
  double min_margin = std::numeric_limits<double>::infinity();
  double worst_identity = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 1 + gen() % 20;
    const std::size_t K = 1 + gen() % n;
    const double tau = std::pow(10.0, logtau(gen));
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Vec s(n), y(n);
    for (double& v : s) v = u(gen);
    for (double& v : y) v = static_cast<double>(gen() % 2);
    const WeightKind kinds[] = {WeightKind::kConstantOne, WeightKind::kPrecision, WeightKind::kRecall,
                                WeightKind::kNdcg};
    const auto kind = kinds[gen() % 4];
    const auto w = rank_weights({kind, K}, 1 + gen() % n);
    const double loss = drm_loss(y, s, w, tau);
    const double objective = oracle::relaxed_objective(y, s, w, tau);
    const Vec q = weighted_truncated_sum(s, w, tau);
    const double half_norms = 0.5 * (std::inner_product(y.begin(), y.end(), y.begin(), 0.0) +
                                     std::inner_product(q.begin(), q.end(), q.begin(), 0.0));
    min_margin = std::min(min_margin, objective + 0.5 * loss);
    worst_identity = std::max(worst_identity, std::abs(objective + 0.5 * loss - half_norms));
  }
  return {min_margin >= -1e-12 && worst_identity <= 1e-12,
          fmt::format("1000 instances, min(O + L/2) = {:.3e}, max |O + L/2 - (|y|^2 + |q|^2)/2| = {:.1e}", min_margin,
                      worst_identity)};
}

// ---------------------------------------------------------------------------
// 6-8. Desk-scale experiment.

struct ExperimentOutputs {
  TrainResult hinge;
  TrainResult drm;
  std::string hinge_choice;
  std::string drm_choice;
  double random_ndcg10 = 0.0;
  double seconds = 0.0;
};

ExperimentConfig experiment_config(double lambda, const fs::path& data) {
  ExperimentConfig c;
  c.set("data.path", data.string());
  c.set("train.lambda", fmt::format("{}", lambda));
  c.set("train.seed", "0");
  c.set("split.seed", "0");
  c.set("experiment.runs", "5");
  c.set("train.epochs", "100");
  return c;
}

// Grid search on the validation split, one training run per setting and
// Recall@50 as the selection metric. Both arms search the same positive
// sample sizes; the joint arm also searches the temperature. Ties keep the
// earlier setting.
std::string select_on_validation(ExperimentConfig& config, const Splits& splits) {
  const bool joint = config.hyper_params().lambda > 0.0;
  const std::vector<std::string> rhos = {"1", "3", "5"};
  const std::vector<std::string> taus = joint ? std::vector<std::string>{"0.1", "0.3", "1", "3", "10"}
                                              : std::vector<std::string>{"1"};
  double best = -1.0;
  std::string best_rho, best_tau;
  for (const auto& rho : rhos)
    for (const auto& tau : taus) {
      ExperimentConfig candidate = config;
      candidate.set("train.rho", rho);
      candidate.set("train.tau", tau);
      candidate.set("train.track_train_metrics", "false");
      const auto fitted = fit(splits.train, splits.validation, candidate.hyper_params());
      const double recall = fitted.trace.at(fitted.best_epoch).recall_val;
      if (recall > best) {
        best = recall;
        best_rho = rho;
        best_tau = tau;
      }
    }
  config.set("train.rho", best_rho);
  config.set("train.tau", best_tau);
  return joint ? fmt::format("rho={} tau={} (validation Recall@50 {:.4f})", best_rho, best_tau, best)
               : fmt::format("rho={} (validation Recall@50 {:.4f})", best_rho, best);
}

// Writes the synthetic data set once; both repetitions of the experiment
// read the same file so their configs are identical.
fs::path write_synthetic(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path path = dir / "synthetic.tsv";
  std::ofstream out(path, std::ios::binary);
  write_pair_list(out, make_synthetic(SyntheticSpec{}));
  return path;
}

ExperimentOutputs run_desk_experiment(const fs::path& data, const fs::path& dir) {
  const auto t0 = Clock::now();
  ExperimentOutputs o;
  auto hinge_cfg = experiment_config(0.0, data);
  auto drm_cfg = experiment_config(1.0, data);
  const auto splits = split(load_interactions(data, InputFormat::kPairList), drm_cfg.split_spec());
  o.hinge_choice = select_on_validation(hinge_cfg, splits);
  o.drm_choice = select_on_validation(drm_cfg, splits);
  o.hinge = run_experiment(hinge_cfg, dir / "hinge");
  o.drm = run_experiment(drm_cfg, dir / "drm");

  const auto test = eval_data(o.drm.splits, Holdout::kTest);
  const std::vector<MetricRequest> ndcg10 = {{WeightKind::kNdcg, 10}};
  const auto hp = drm_cfg.hyper_params();
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto initial = init_model(test.known.num_users(), test.known.num_items(), hp.dim, hp.score_kind, hp.seed + r);
    o.random_ndcg10 += evaluate_model(initial, test.known, test.holdout, ndcg10, hp.min_train).rows[0].mean / 5.0;
  }
  o.seconds = seconds_since(t0);
  return o;
}

double mean_ndcg10(const TrainResult& r) {
  for (std::size_t m = 0; m < r.report.metrics.size(); ++m)
    if (r.report.metrics[m].kind == WeightKind::kNdcg && r.report.metrics[m].cutoff == 10) return r.report.mean[m];
  return std::nan("");
}

Outcome training_efficacy(const ExperimentOutputs& e) {
  const double h = mean_ndcg10(e.hinge);
  const double d = mean_ndcg10(e.drm);
  const bool ok = e.hinge.report.successful() == 5 && e.drm.report.successful() == 5 && d >= h &&
                  h >= 3.0 * e.random_ndcg10 && d >= 3.0 * e.random_ndcg10 && e.seconds <= 600.0;
  return {ok, fmt::format("test NDCG@10 DRM-joint {:.4f} [{}] vs hinge-only {:.4f} [{}]; random {:.4f} (3x = {:.4f}); "
                          "{:.0f}s",
                          d, e.drm_choice, h, e.hinge_choice, e.random_ndcg10, 3.0 * e.random_ndcg10, e.seconds)};
}

Outcome loss_metric_correlation(const fs::path& dir) {
  std::vector<Table> traces;
  std::vector<std::string> names;
  for (int r = 0; r < 5; ++r) {
    const auto rel = fs::path("drm") / fmt::format("run_{}", r) / "trace.tsv";
    traces.push_back(read_table(dir / rel));
    names.push_back(rel.string());
  }
  const std::vector<std::string> metric = {"ndcg@10_val"};
  const auto report = correlate(traces, names, metric, 3);
  {
    std::ofstream out(dir / "correlation.tsv", std::ios::binary);
    out << report.to_table();
  }
  const auto loss = static_cast<std::size_t>(std::ranges::find(report.losses, "drm_loss_mean") - report.losses.begin());
  std::vector<double> values;
  bool ok = loss < report.losses.size();
  for (const auto& block : report.cells) {
    const auto& c = block.at(loss)[0];
    ok = ok && c.has_value() && *c <= -0.5;
    values.push_back(c ? *c : std::nan(""));
  }
  return {ok, fmt::format("corr(drm_loss_mean, ndcg@10_val) over epochs >= 3 per run: [{:.3f}]", fmt::join(values, ", "))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism(const fs::path& first, const fs::path& second) {
  std::set<fs::path> files;
  for (const auto* root : {&first, &second})
    for (const auto& entry : fs::recursive_directory_iterator(*root))
      if (entry.is_regular_file()) files.insert(fs::relative(entry.path(), *root));
  std::size_t differing = 0;
  std::string example;
  for (const auto& rel : files) {
    if (!fs::exists(first / rel) || !fs::exists(second / rel) || slurp(first / rel) != slurp(second / rel)) {
      ++differing;
      if (example.empty()) example = rel.string();
    }
  }
  return {differing == 0 && files.size() > 10,
          fmt::format("{} files compared across two runs, {} differ{}", files.size(), differing,
                      example.empty() ? "" : " (e.g. " + example + ")")};
}

// ---------------------------------------------------------------------------
// 9. Randomized invariants.

Outcome invariant_suite() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t failures = 0;
  std::string first_failure;
  const auto fail = [&](const std::string& what) {
    if (failures++ == 0) first_failure = what;
  };

  const auto data = make_synthetic({40, 60, 4, 8, 3});
  const InteractionMatrix& train = data;
  std::vector<Trainer> trainers;
  for (ScoreKind kind : {ScoreKind::kDot, ScoreKind::kNegL2}) {
    HyperParams hp;
    hp.dim = 6;
    hp.score_kind = kind;
    hp.learning_rate = 0.3;
    hp.tau = 0.5;
    hp.seed = 5;
    trainers.emplace_back(train, hp, init_model(40, 60, hp.dim, kind, 5));
  }

  for (int c = 0; c < 1000; ++c) {
    // Trainer step: unit ball and Adagrad monotonicity.
    Trainer& t = trainers[c % 2];
    const auto before_users = t.optimizer().user_accumulator();
    const auto before_items = t.optimizer().item_accumulator();
    const auto u_id = static_cast<UserId>(gen() % 40);
    const auto sample = draw_sample(train, u_id, 3, 12, t.rng());
    t.step(sample);
    if (squared_norm(t.model().user(u_id)) > (1 + 1e-9) * (1 + 1e-9)) fail(fmt::format("case {}: user norm", c));
    for (ItemId i : sample.items)
      if (squared_norm(t.model().item(i)) > (1 + 1e-9) * (1 + 1e-9)) fail(fmt::format("case {}: item norm", c));
    const auto& after_users = t.optimizer().user_accumulator().data();
    const auto& after_items = t.optimizer().item_accumulator().data();
    for (std::size_t a = 0; a < after_users.size(); ++a)
      if (after_users[a] < before_users.data()[a] || after_users[a] < 0) fail(fmt::format("case {}: G decreased", c));
    for (std::size_t a = 0; a < after_items.size(); ++a)
      if (after_items[a] < before_items.data()[a] || after_items[a] < 0) fail(fmt::format("case {}: G decreased", c));

    // Softmax Jacobian annihilates constants; relaxed rows are stochastic.
    const std::size_t n = 2 + gen() % 12;
    const std::size_t K = 1 + gen() % n;
    const double tau = std::pow(10.0, u(gen) * 1.5);
    Vec s(n), y(n, 0.0);
    for (double& v : s) v = 2.0 * u(gen);
    y[gen() % n] = 1.0;
    DrmGradientWorkspace ws;
    std::vector<double> grad(n);
    ws.evaluate(y, s, Vec(K, 1.0), tau, grad);
    for (std::size_t k = 1; k <= K; ++k) {
      const auto h = ws.softmax_jacobian(k);
      for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t col = 0; col < n; ++col) sum += h(r, col);
        if (std::abs(sum) > 1e-9) fail(fmt::format("case {}: H row sum {}", c, sum));
      }
    }
    const RelaxedSort sorter(s, tau);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto row = sorter.row(k);
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(row.begin(), row.end()) < 0.0)
        fail(fmt::format("case {}: row {} not stochastic", c, k));
    }

    // Covariance loss: nonnegative and matches finite differences.
    const std::size_t rows = 2 + gen() % 6, dim = 1 + gen() % 4;
    DenseMatrix f(rows, dim);
    for (double& v : f.data()) v = u(gen);
    const auto cov = covariance_loss(f);
    if (cov.value < 0.0) fail(fmt::format("case {}: covariance loss {}", c, cov.value));
    const auto value_at = [&](const Vec& x) {
      DenseMatrix g(rows, dim);
      std::copy(x.begin(), x.end(), g.data().begin());
      const auto mean = column_mean(g);
      // Independent evaluation: sum of squared off-diagonal covariances over T.
      double total = 0.0;
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
          if (a == b) continue;
          double cab = 0.0;
          for (std::size_t r = 0; r < rows; ++r) cab += (g(r, a) - mean[a]) * (g(r, b) - mean[b]);
          cab /= static_cast<double>(rows);
          total += cab * cab;
        }
      return total / static_cast<double>(rows);
    };
    const Vec x(f.data().begin(), f.data().end());
    const Vec numeric = oracle::fd_gradient(value_at, x);
    if (std::abs(value_at(x) - cov.value) > 1e-12) fail(fmt::format("case {}: covariance value", c));
    for (std::size_t a = 0; a < x.size(); ++a)
      if (oracle::rel_error(cov.gradient.data()[a], numeric[a], kRelFloor) > 1e-6)
        fail(fmt::format("case {}: covariance gradient coordinate {}", c, a));
  }
  return {failures == 0, failures == 0 ? "1000 randomized cases, all invariants hold"
                                       : fmt::format("{} violations; first: {}", failures, first_failure)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  fs::path workdir = fs::temp_directory_path() / "drmrec_acceptance";
  for (int a = 1; a + 1 < argc; a += 2) {
    if (std::strcmp(argv[a], "--only") == 0) only = std::atoi(argv[a + 1]);
    else if (std::strcmp(argv[a], "--workdir") == 0) workdir = argv[a + 1];
  }

  bool all = true;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << fmt::format("{} criterion {} ({}): {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::flush;
    all = all && o.pass;
  };
  const auto wanted = [&](int id) { return only == 0 || only == id; };

  if (wanted(1)) report(1, "DRM gradient oracle", drm_gradient_oracle());
  if (wanted(2)) report(2, "hinge gradient oracle", hinge_gradient_oracle());
  if (wanted(3)) report(3, "low-temperature limit", neuralsort_limit());
  if (wanted(4)) report(4, "metric oracle", metric_oracle());
  if (wanted(5)) report(5, "bound property", bound_property());
  if (wanted(6) || wanted(7) || wanted(8)) {
    fs::remove_all(workdir);
    const auto data = write_synthetic(workdir);
    const auto first = run_desk_experiment(data, workdir / "first");
    if (wanted(6)) report(6, "desk-scale training efficacy", training_efficacy(first));
    const auto correlation = loss_metric_correlation(workdir / "first");
    if (wanted(7)) report(7, "loss/metric correlation", correlation);
    if (wanted(8)) {
      run_desk_experiment(data, workdir / "second");
      loss_metric_correlation(workdir / "second");
      report(8, "determinism", determinism(workdir / "first", workdir / "second"));
    }
  }
  if (wanted(9)) report(9, "invariant suite", invariant_suite());
  return all ? 0 : 1;
}
