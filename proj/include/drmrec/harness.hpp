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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drmrec/factor_model.hpp"
#include "drmrec/interactions.hpp"
#include "drmrec/metrics.hpp"
#include "drmrec/trainer.hpp"

namespace drmrec {

// Experiment settings. The text form is
//
//   # comment
//   [section]
//   key = value
//
// Keys are addressed as "section.key"; a bare key is accepted when it names
// exactly one setting. Values are normalized on assignment, so two files
// that differ only in key order or number spelling fingerprint the same.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static ExperimentConfig parse(std::istream& in, std::string_view source = "<config>");
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Throws ConfigError for unknown or ambiguous keys and malformed values.
  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;
  bool has_key(std::string_view key) const;
  // Resolves a bare or dotted key to its canonical "section.key" name.
  std::string resolve_key(std::string_view key) const;
  static std::vector<std::string> known_keys();

  std::filesystem::path dataset() const;
  InputFormat dataset_format() const;
  std::filesystem::path split_dir() const;  // empty unless a persisted split is used
  SplitSpec split_spec() const;
  HyperParams hyper_params() const;
  std::size_t runs() const;
  std::vector<std::size_t> extra_cutoffs() const;
  std::filesystem::path out_dir() const;

  // Throws ConfigError. With check_paths, the dataset (or split
  // directory) must exist.
  void validate(bool check_paths = true) const;

  // Sorted `key = value` lines. Output locations are left out.
  std::string canonical() const;
  // 16 hex digits of FNV-1a over canonical().
  std::string fingerprint() const;

 private:
  std::map<std::string, std::string> values_;
};

struct RunOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<double> values;  // one per RunReport::metrics entry
};

struct RunReport {
  std::string fingerprint;
  std::vector<MetricRequest> metrics;
  std::vector<RunOutcome> runs;
  std::vector<double> mean;    // over successful runs
  std::vector<double> stddev;  // population standard deviation

  std::size_t successful() const;
  // Header row, one row per run, then mean and std rows.
  std::string to_table() const;
  // `key\tvalue` lines: fingerprint, run counts and `metric\tmean\tstd`.
  std::string to_summary() const;
};

// Aggregates per-run metric values; failed runs are excluded.
void summarize(RunReport& report);

struct TrainResult {
  RunReport report;
  std::vector<FitResult> fits;  // one per run; empty model for failed runs
  Splits splits;
};

// Splits (or loads) the data, then trains and evaluates config.runs()
// models with seeds seed .. seed + R - 1. Each model is evaluated on the
// test split with train and validation items excluded. When `out` is
// nonempty the split, every run's model.bin and trace.tsv, report.tsv and
// summary.tsv are written there. Throws RuntimeFailure if every run fails.
TrainResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out = {});

// Same as run_experiment on data already in memory.
TrainResult run_experiment(const ExperimentConfig& config, const Splits& splits,
                           const std::filesystem::path& out = {});

class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads `input` and writes it as a canonical pair list.
void cmd_convert(const std::filesystem::path& input, InputFormat format, const std::filesystem::path& output);

enum class Holdout { kTest, kValidation };
Holdout parse_holdout(std::string_view name);

struct EvalData {
  InteractionMatrix known;    // excluded from rankings
  InteractionMatrix holdout;  // relevant items
};

// Known/holdout pair of a persisted split: test holdout excludes train and
// validation, validation holdout excludes train.
EvalData eval_data(const Splits& splits, Holdout holdout);

// MAP@10, NDCG@10, Recall@50 and NDCG@50 plus extra cutoffs, as a table.
EvaluationReport cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& split_dir,
                          Holdout holdout, std::span<const std::size_t> extra_cutoffs, std::size_t min_train = 5);

// A numeric table read from a trace file.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;  // throws std::out_of_range
  std::vector<double> values(std::size_t column) const;
};

Table read_table(std::istream& in, std::string_view source = "<table>");
Table read_table(const std::filesystem::path& path);

// Pearson correlation; nullopt when either side is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::vector<std::string> losses;
  std::vector<std::string> metrics;
  // cells[t][l][m]: trace t, loss l, metric m.
  std::vector<std::vector<std::vector<std::optional<double>>>> cells;
  std::vector<std::string> sources;

  // One row per (trace, loss), one column per metric; "undefined" marks a
  // constant column.
  std::string to_table() const;
};

// Loss columns end in "_loss_mean" or equal "cov_loss"; metric columns end
// in "_val" or "_train" unless `metrics` names them. Epochs below
// `first_epoch` are skipped; at least three must remain.
CorrelationReport correlate(std::span<const Table> traces, std::span<const std::string> sources,
                            std::span<const std::string> metrics = {}, std::size_t first_epoch = 3);

struct GroupRow {
  std::size_t lower = 0;
  std::optional<std::size_t> upper;  // exclusive; nullopt is unbounded
  std::size_t num_users = 0;
  std::optional<double> ndcg10;
};

// Buckets eligible users by known-interaction count into [b_0, b_1), ...,
// [b_last, inf) and reports NDCG@10 per bucket. Boundaries must be strictly
// increasing.
std::vector<GroupRow> group_report(const FactorModel& model, const EvalData& data,
                                   std::span<const std::size_t> boundaries, std::size_t min_train = 5);
std::string format_groups(std::span<const GroupRow> rows);

}  // namespace drmrec
