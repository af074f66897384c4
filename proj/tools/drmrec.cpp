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

// drmrec command-line front end.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 training or
// runtime failure, 4 input/output or data-format error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "drmrec/harness.hpp"

namespace fs = std::filesystem;
using namespace drmrec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Experiment config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Base seed for training runs");
  app->add_option("--out", c.out, "Output directory");
}

ExperimentConfig load_config(const Common& c, const std::vector<std::string>& extras) {
  ExperimentConfig config = c.config.empty() ? ExperimentConfig() : ExperimentConfig::from_file(c.config);
  // Remaining `--key value` / `--key=value` pairs override config entries.
  for (std::size_t a = 0; a < extras.size(); ++a) {
    std::string arg = extras[a];
    if (arg.rfind("--", 0) != 0) throw ConfigError(fmt::format("unexpected argument '{}'", arg));
    arg.erase(0, 2);
    std::string value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg.resize(eq);
    } else {
      if (a + 1 >= extras.size()) throw ConfigError(fmt::format("--{} needs a value", arg));
      value = extras[++a];
    }
    config.set(arg, value);
  }
  if (c.seed) config.set("train.seed", std::to_string(*c.seed));
  if (!c.out.empty()) config.set("output.dir", c.out);
  return config;
}

void emit(const std::string& text, const std::string& out_dir, const std::string& file) {
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure(fmt::format("cannot write '{}'", (fs::path(out_dir) / file).string()));
    out << text;
  }
  std::cout << text;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!cell.empty()) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.front() == '-') throw ConfigError(fmt::format("'{}' is not a count", cell));
      out.push_back(static_cast<std::size_t>(v));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Train and evaluate top-K recommenders with a differentiable ranking-metric loss"};
  app.require_subcommand(1);

  Common common;

  auto* convert = app.add_subcommand("convert", "Convert interactions to a canonical pair list");
  std::string conv_in, conv_out, conv_format = "pair-list";
  convert->add_option("input", conv_in, "Input file")->required();
  convert->add_option("output", conv_out, "Output pair-list file")->required();
  convert->add_option("--format", conv_format, "pair-list or playlist-json");

  auto* train = app.add_subcommand("train", "Split, train R runs and write models, traces and reports");
  add_common(train, common);
  train->allow_extras();

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a persisted split");
  std::string eval_model, eval_split, eval_holdout = "test", eval_cutoffs;
  std::size_t eval_min_train = 5;
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--split", eval_split, "Split directory written by train")->required();
  eval->add_option("--holdout", eval_holdout, "test or validation");
  eval->add_option("--cutoffs", eval_cutoffs, "Extra cutoffs, comma separated");
  eval->add_option("--min-train", eval_min_train, "Minimum known interactions per evaluated user");
  add_common(eval, common);

  auto* corr = app.add_subcommand("correlate", "Correlate loss and metric columns of trace files");
  std::vector<std::string> corr_traces, corr_metrics;
  std::size_t corr_first = 3;
  corr->add_option("traces", corr_traces, "Trace files")->required();
  corr->add_option("--metric", corr_metrics, "Metric column (repeatable); default all metric columns");
  corr->add_option("--first-epoch", corr_first, "First epoch used");
  add_common(corr, common);

  auto* groups = app.add_subcommand("group-report", "NDCG@10 per user group by interaction count");
  std::string group_model, group_split, group_holdout = "test", group_bounds = "5,10,20,40";
  std::size_t group_min_train = 5;
  groups->add_option("--model", group_model, "Model file")->required();
  groups->add_option("--split", group_split, "Split directory written by train")->required();
  groups->add_option("--boundaries", group_bounds, "Increasing lower bounds, comma separated");
  groups->add_option("--holdout", group_holdout, "test or validation");
  groups->add_option("--min-train", group_min_train, "Minimum known interactions per evaluated user");
  add_common(groups, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (convert->parsed()) {
    cmd_convert(conv_in, parse_input_format(conv_format), conv_out);
    return 0;
  }
  if (train->parsed()) {
    const auto config = load_config(common, train->remaining());
    if (config.out_dir().empty()) throw ConfigError("train needs --out or output.dir");
    config.validate(true);
    const auto result = run_experiment(config, config.out_dir());
    std::cout << result.report.to_summary();
    for (const auto& r : result.report.runs)
      if (!r.ok) std::cerr << fmt::format("run {} (seed {}) failed: {}\n", r.index, r.seed, r.error);
    return 0;
  }
  if (eval->parsed()) {
    const auto cutoffs = parse_list(eval_cutoffs);
    const auto report = cmd_eval(eval_model, eval_split, parse_holdout(eval_holdout), cutoffs, eval_min_train);
    emit(report.to_table(), common.out, "eval.tsv");
    return 0;
  }
  if (corr->parsed()) {
    std::vector<Table> tables;
    for (const auto& path : corr_traces) tables.push_back(read_table(fs::path(path)));
    const auto report = correlate(tables, corr_traces, corr_metrics, corr_first);
    emit(report.to_table(), common.out, "correlation.tsv");
    return 0;
  }
  if (groups->parsed()) {
    const auto bounds = parse_list(group_bounds);
    const auto model = load_model(fs::path(group_model));
    const auto data = eval_data(load_split(group_split).splits, parse_holdout(group_holdout));
    if (model.num_users() != data.known.num_users() || model.num_items() != data.known.num_items())
      throw ModelFormatError("model does not match the split's index space");
    emit(format_groups(group_report(model, data, bounds, group_min_train)), common.out, "groups.tsv");
    return 0;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ModelFormatError& e) {
    std::cerr << "model format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const EmptyDatasetError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
