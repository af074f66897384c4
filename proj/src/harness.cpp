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

#include "drmrec/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

namespace drmrec {
namespace fs = std::filesystem;

namespace {

enum class ValueType { kText, kReal, kOptionalReal, kCount, kSeed, kBool, kCountList, kChoice };

struct KeyInfo {
  const char* name;
  ValueType type;
  const char* fallback;
};

// Canonical keys and their defaults.
constexpr KeyInfo kKeys[] = {
    {"data.path", ValueType::kText, ""},
    {"data.format", ValueType::kChoice, "pair-list"},
    {"data.split_dir", ValueType::kText, ""},
    {"split.train", ValueType::kReal, "0.7"},
    {"split.validation", ValueType::kReal, "0.1"},
    {"split.test", ValueType::kReal, "0.2"},
    {"split.seed", ValueType::kSeed, "0"},
    {"model.dim", ValueType::kCount, "64"},
    {"model.score", ValueType::kChoice, "dot"},
    {"model.init_scale", ValueType::kOptionalReal, ""},
    {"train.lr", ValueType::kReal, "0.05"},
    {"train.tau", ValueType::kReal, "1"},
    {"train.lambda", ValueType::kReal, "1"},
    {"train.lambda_cov", ValueType::kReal, "1"},
    {"train.rho", ValueType::kCount, "3"},
    {"train.eta", ValueType::kCount, "0"},
    {"train.margin", ValueType::kReal, "1"},
    {"train.cutoff", ValueType::kCount, "10"},
    {"train.weight", ValueType::kChoice, "constant-one"},
    {"train.epochs", ValueType::kCount, "100"},
    {"train.seed", ValueType::kSeed, "0"},
    {"train.min_train", ValueType::kCount, "5"},
    {"train.base_loss", ValueType::kChoice, "hinge"},
    {"train.patience", ValueType::kCount, "10"},
    {"train.validation_cutoff", ValueType::kCount, "50"},
    {"train.adagrad_epsilon", ValueType::kReal, "1e-8"},
    {"train.covariance_mode", ValueType::kChoice, "batch"},
    {"train.covariance_refresh", ValueType::kCount, "128"},
    {"train.track_train_metrics", ValueType::kBool, "true"},
    {"experiment.runs", ValueType::kCount, "5"},
    {"experiment.cutoffs", ValueType::kCountList, ""},
    {"output.dir", ValueType::kText, ""},
};

// Alternative spellings of the last key segment.
constexpr std::pair<const char*, const char*> kAliases[] = {
    {"learning_rate", "lr"}, {"positives", "rho"},   {"negatives", "eta"},       {"mu", "margin"},
    {"d", "dim"},            {"lambda_c", "lambda_cov"}, {"score_kind", "score"}, {"k", "cutoff"},
    {"out", "dir"},          {"r", "runs"},          {"w", "weight"},
};

const KeyInfo* find_key(std::string_view canonical) {
  for (const auto& k : kKeys)
    if (canonical == k.name) return &k;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, text));
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size())
    throw ConfigError(fmt::format("{}: '{}' is not a nonnegative integer", key, text));
  return v;
}

std::vector<std::size_t> parse_count_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  while (!trim(text).empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_unsigned(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string normalize_choice(std::string_view key, std::string_view text) {
  if (key == "data.format") {
    return parse_input_format(text) == InputFormat::kPairList ? "pair-list" : "playlist-json";
  }
  if (key == "model.score") return std::string(to_string(parse_score_kind(text)));
  if (key == "train.weight") return std::string(to_string(parse_weight_kind(text)));
  if (key == "train.base_loss") return std::string(to_string(parse_base_loss(text)));
  if (key == "train.covariance_mode") {
    if (text == "batch" || text == "full") return std::string(text);
    throw ConfigError(fmt::format("{}: expected batch or full, got '{}'", key, text));
  }
  throw ConfigError(fmt::format("no choices registered for {}", key));
}

std::string normalize(const KeyInfo& info, std::string_view raw) {
  const auto text = trim(raw);
  switch (info.type) {
    case ValueType::kText:
      return std::string(text);
    case ValueType::kReal:
      return fmt::format("{}", parse_real(info.name, text));
    case ValueType::kOptionalReal:
      return text.empty() ? std::string() : fmt::format("{}", parse_real(info.name, text));
    case ValueType::kCount:
    case ValueType::kSeed:
      return fmt::format("{}", parse_unsigned(info.name, text));
    case ValueType::kBool: {
      const auto t = lower(text);
      if (t == "true" || t == "1" || t == "yes" || t == "on") return "true";
      if (t == "false" || t == "0" || t == "no" || t == "off") return "false";
      throw ConfigError(fmt::format("{}: '{}' is not a boolean", info.name, text));
    }
    case ValueType::kCountList: {
      auto list = parse_count_list(info.name, text);
      std::ranges::sort(list);
      list.erase(std::unique(list.begin(), list.end()), list.end());
      return fmt::format("{}", fmt::join(list, ","));
    }
    case ValueType::kChoice:
      try {
        return normalize_choice(info.name, lower(text));
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", info.name, e.what()));
      }
  }
  return std::string(text);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::ios_base::failure(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : kKeys) values_[k.name] = k.fallback;
}

std::vector<std::string> ExperimentConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& k : kKeys) out.emplace_back(k.name);
  return out;
}

std::string ExperimentConfig::resolve_key(std::string_view key) const {
  std::string k = lower(trim(key));
  std::ranges::replace(k, '-', '_');
  const auto dot = k.rfind('.');
  std::string section = dot == std::string::npos ? std::string() : k.substr(0, dot);
  std::string leaf = dot == std::string::npos ? k : k.substr(dot + 1);
  for (const auto& [alias, target] : kAliases)
    if (leaf == alias) leaf = target;

  if (!section.empty()) {
    const std::string full = section + "." + leaf;
    if (!find_key(full)) throw ConfigError(fmt::format("unknown config key '{}'", key));
    return full;
  }
  std::vector<std::string> matches;
  for (const auto& info : kKeys) {
    const std::string_view name = info.name;
    if (name.substr(name.find('.') + 1) == leaf) matches.emplace_back(name);
  }
  if (matches.empty()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  if (matches.size() > 1)
    throw ConfigError(fmt::format("config key '{}' is ambiguous ({})", key, fmt::join(matches, ", ")));
  return matches.front();
}

bool ExperimentConfig::has_key(std::string_view key) const {
  try {
    resolve_key(key);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const std::string name = resolve_key(key);
  values_[name] = normalize(*find_key(name), value);
}

const std::string& ExperimentConfig::get(std::string_view key) const { return values_.at(resolve_key(key)); }

ExperimentConfig ExperimentConfig::parse(std::istream& in, std::string_view source) {
  ExperimentConfig config;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = trim(text.substr(0, hash));
    if (text.empty() || text.front() == ';') continue;
    try {
      if (text.front() == '[') {
        if (text.back() != ']') throw ConfigError("unterminated section header");
        section = lower(trim(text.substr(1, text.size() - 2)));
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const auto key = trim(text.substr(0, eq));
      if (key.empty()) throw ConfigError("empty key");
      config.set(section.empty() ? std::string(key) : section + "." + std::string(key), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  return config;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open config '{}'", path.string()));
  return parse(in, path.string());
}

fs::path ExperimentConfig::dataset() const { return values_.at("data.path"); }

InputFormat ExperimentConfig::dataset_format() const { return parse_input_format(values_.at("data.format")); }

fs::path ExperimentConfig::split_dir() const { return values_.at("data.split_dir"); }

SplitSpec ExperimentConfig::split_spec() const {
  SplitSpec s;
  s.train = std::stod(values_.at("split.train"));
  s.validation = std::stod(values_.at("split.validation"));
  s.test = std::stod(values_.at("split.test"));
  s.seed = std::stoull(values_.at("split.seed"));
  return s;
}

HyperParams ExperimentConfig::hyper_params() const {
  const auto real = [&](const char* k) { return std::stod(values_.at(k)); };
  const auto count = [&](const char* k) { return static_cast<std::size_t>(std::stoull(values_.at(k))); };
  HyperParams hp;
  hp.dim = count("model.dim");
  hp.score_kind = parse_score_kind(values_.at("model.score"));
  if (const auto& s = values_.at("model.init_scale"); !s.empty()) hp.init_scale = std::stod(s);
  hp.learning_rate = real("train.lr");
  hp.tau = real("train.tau");
  hp.lambda = real("train.lambda");
  hp.lambda_cov = real("train.lambda_cov");
  hp.positives = count("train.rho");
  hp.negatives = count("train.eta");
  hp.margin = real("train.margin");
  hp.cutoff = count("train.cutoff");
  hp.weight = parse_weight_kind(values_.at("train.weight"));
  hp.epochs = count("train.epochs");
  hp.seed = std::stoull(values_.at("train.seed"));
  hp.min_train = count("train.min_train");
  hp.base_loss = parse_base_loss(values_.at("train.base_loss"));
  hp.patience = count("train.patience");
  hp.validation_cutoff = count("train.validation_cutoff");
  hp.adagrad_epsilon = real("train.adagrad_epsilon");
  hp.covariance_mode = values_.at("train.covariance_mode") == "full" ? CovarianceMode::kFull : CovarianceMode::kBatch;
  hp.covariance_refresh = count("train.covariance_refresh");
  hp.track_train_metrics = values_.at("train.track_train_metrics") == "true";
  return hp;
}

std::size_t ExperimentConfig::runs() const { return std::stoull(values_.at("experiment.runs")); }

std::vector<std::size_t> ExperimentConfig::extra_cutoffs() const {
  return parse_count_list("experiment.cutoffs", values_.at("experiment.cutoffs"));
}

fs::path ExperimentConfig::out_dir() const { return values_.at("output.dir"); }

void ExperimentConfig::validate(bool check_paths) const {
  if (runs() == 0) throw ConfigError("experiment.runs must be >= 1");
  for (std::size_t c : extra_cutoffs())
    if (c == 0) throw ConfigError("experiment.cutoffs entries must be >= 1");
  split_spec().validate();
  hyper_params().validate();
  if (!check_paths) return;
  if (!split_dir().empty()) {
    if (!fs::is_directory(split_dir()))
      throw ConfigError(fmt::format("split directory '{}' does not exist", split_dir().string()));
  } else if (dataset().empty()) {
    throw ConfigError("no dataset: set data.path or data.split_dir");
  } else if (!fs::is_regular_file(dataset())) {
    throw ConfigError(fmt::format("dataset '{}' does not exist", dataset().string()));
  }
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    if (key == "output.dir") continue;
    out += fmt::format("{} = {}\n", key, value);
  }
  return out;
}

std::string ExperimentConfig::fingerprint() const { return fmt::format("{:016x}", fnv1a(canonical())); }

// ---------------------------------------------------------------------------

std::size_t RunReport::successful() const {
  return static_cast<std::size_t>(std::ranges::count_if(runs, [](const RunOutcome& r) { return r.ok; }));
}

void summarize(RunReport& report) {
  report.mean.assign(report.metrics.size(), 0.0);
  report.stddev.assign(report.metrics.size(), 0.0);
  const std::size_t ok = report.successful();
  if (ok == 0) return;
  for (std::size_t m = 0; m < report.metrics.size(); ++m) {
    double sum = 0.0;
    for (const auto& r : report.runs)
      if (r.ok) sum += r.values[m];
    const double mean = sum / static_cast<double>(ok);
    double var = 0.0;
    for (const auto& r : report.runs)
      if (r.ok) var += (r.values[m] - mean) * (r.values[m] - mean);
    report.mean[m] = mean;
    report.stddev[m] = std::sqrt(var / static_cast<double>(ok));
  }
}

std::string RunReport::to_table() const {
  std::string out = "run\tseed\tstatus\tbest_epoch\tepochs";
  for (const auto& m : metrics) out += "\t" + metric_label(m.kind, m.cutoff);
  out += "\terror\n";
  for (const auto& r : runs) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}", r.index, r.seed, r.ok ? "ok" : "failed", r.best_epoch, r.epochs_run);
    for (std::size_t m = 0; m < metrics.size(); ++m) out += r.ok ? fmt::format("\t{:.10g}", r.values[m]) : "\t";
    std::string error = r.error;
    std::ranges::replace(error, '\t', ' ');
    std::ranges::replace(error, '\n', ' ');
    out += "\t" + error + "\n";
  }
  for (const auto* label : {"mean", "std"}) {
    const auto& v = std::string_view(label) == "mean" ? mean : stddev;
    out += fmt::format("{}\t\t\t\t", label);
    for (double x : v) out += fmt::format("\t{:.10g}", x);
    out += "\t\n";
  }
  return out;
}

std::string RunReport::to_summary() const {
  std::string out = "key\tvalue\tstd\n";
  out += fmt::format("fingerprint\t{}\t\n", fingerprint);
  out += fmt::format("runs\t{}\t\n", runs.size());
  out += fmt::format("runs_ok\t{}\t\n", successful());
  for (std::size_t m = 0; m < metrics.size(); ++m)
    out += fmt::format("{}\t{:.10g}\t{:.10g}\n", metric_label(metrics[m].kind, metrics[m].cutoff), mean[m], stddev[m]);
  return out;
}

EvalData eval_data(const Splits& splits, Holdout holdout) {
  if (holdout == Holdout::kValidation) return {splits.train, splits.validation};
  return {merge(splits.train, splits.validation), splits.test};
}

Holdout parse_holdout(std::string_view name) {
  if (name == "test") return Holdout::kTest;
  if (name == "validation") return Holdout::kValidation;
  throw ConfigError(fmt::format("unknown holdout '{}' (expected test or validation)", name));
}

TrainResult run_experiment(const ExperimentConfig& config, const fs::path& out) {
  config.validate(true);
  if (!config.split_dir().empty()) return run_experiment(config, load_split(config.split_dir()).splits, out);
  const auto data = load_interactions(config.dataset(), config.dataset_format());
  return run_experiment(config, split(data, config.split_spec()), out);
}

TrainResult run_experiment(const ExperimentConfig& config, const Splits& splits, const fs::path& out) {
  config.validate(false);
  const HyperParams base = config.hyper_params();
  const auto extra = config.extra_cutoffs();

  TrainResult result;
  result.splits = splits;
  result.report.fingerprint = config.fingerprint();
  result.report.metrics = report_metrics(extra);
  const EvalData test = eval_data(splits, Holdout::kTest);

  if (!out.empty()) {
    fs::create_directories(out);
    save_split(out / "split", splits, config.split_spec());
    write_file(out / "config.txt", config.canonical());
  }

  for (std::size_t r = 0; r < config.runs(); ++r) {
    HyperParams hp = base;
    hp.seed = base.seed + r;
    RunOutcome outcome;
    outcome.index = r;
    outcome.seed = hp.seed;
    FitResult fitted;
    try {
      fitted = fit(splits.train, splits.validation, hp);
      // Evaluate exactly what gets persisted.
      fitted.model = fitted.model.quantized();
      const auto eval = evaluate_model(fitted.model, test.known, test.holdout, result.report.metrics, hp.min_train);
      for (const auto& row : eval.rows) outcome.values.push_back(row.mean);
      outcome.ok = true;
      outcome.best_epoch = fitted.best_epoch;
      outcome.epochs_run = fitted.trace.empty() ? 0 : fitted.trace.back().epoch;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::ios_base::failure&) {
      throw;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    if (!out.empty()) {
      const fs::path dir = out / fmt::format("run_{}", r);
      fs::create_directories(dir);
      write_file(dir / "trace.tsv", format_trace(fitted.trace, hp));
      if (outcome.ok) save_model(dir / "model.bin", fitted.model);
    }
    result.report.runs.push_back(std::move(outcome));
    result.fits.push_back(std::move(fitted));
  }

  summarize(result.report);
  if (!out.empty()) {
    write_file(out / "report.tsv", result.report.to_table());
    write_file(out / "summary.tsv", result.report.to_summary());
  }
  if (result.report.successful() == 0)
    throw RuntimeFailure(fmt::format("all {} runs failed; first error: {}", result.report.runs.size(),
                                     result.report.runs.front().error));
  return result;
}

void cmd_convert(const fs::path& input, InputFormat format, const fs::path& output) {
  const auto m = load_interactions(input, format);
  std::ostringstream buf;
  write_pair_list(buf, m);
  write_file(output, buf.str());
}

EvaluationReport cmd_eval(const fs::path& model_path, const fs::path& split_dir, Holdout holdout,
                          std::span<const std::size_t> extra_cutoffs, std::size_t min_train) {
  const auto model = load_model(model_path);
  const auto loaded = load_split(split_dir);
  const auto data = eval_data(loaded.splits, holdout);
  if (model.num_users() != data.known.num_users() || model.num_items() != data.known.num_items())
    throw ModelFormatError(fmt::format("model is {}x{} but the split has {} users and {} items", model.num_users(),
                                       model.num_items(), data.known.num_users(), data.known.num_items()));
  return evaluate_model(model, data.known, data.holdout, report_metrics(extra_cutoffs), min_train);
}

// ---------------------------------------------------------------------------

std::size_t Table::column(std::string_view name) const {
  const auto it = std::ranges::find(header, name);
  if (it == header.end()) throw std::out_of_range(fmt::format("no column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> Table::values(std::size_t column) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(column));
  return out;
}

Table read_table(std::istream& in, std::string_view source) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  const auto split_tabs = [](std::string_view s) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto tab = s.find('\t', start);
      cells.push_back(s.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (t.header.empty()) {
      for (auto c : cells) t.header.emplace_back(c);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(fmt::format("{}: line {}: expected {} columns, found {}", source, line_no, t.header.size(),
                                   cells.size()),
                       line_no);
    std::vector<double> row;
    for (auto c : cells) {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || end != c.data() + c.size())
        throw ParseError(fmt::format("{}: line {}: '{}' is not a number", source, line_no, c), line_no);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(fmt::format("{}: missing header row", source));
  return t;
}

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure(fmt::format("cannot open '{}'", path.string()));
  return read_table(in, path.string());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto constant = [](std::span<const double> v) {
    return std::ranges::all_of(v, [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlate(std::span<const Table> traces, std::span<const std::string> sources,
                            std::span<const std::string> metrics, std::size_t first_epoch) {
  if (traces.empty()) throw ConfigError("correlate needs at least one trace");
  if (sources.size() != traces.size()) throw std::invalid_argument("one source name per trace expected");
  const auto& header = traces.front().header;
  for (std::size_t t = 1; t < traces.size(); ++t)
    if (traces[t].header != header)
      throw ParseError(fmt::format("{}: columns differ from {}", sources[t], sources.front()));

  const auto ends_with = [](std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
  };
  CorrelationReport report;
  report.sources.assign(sources.begin(), sources.end());
  for (const auto& name : header) {
    if (ends_with(name, "_loss_mean") || name == "cov_loss") report.losses.push_back(name);
    if (metrics.empty() && (ends_with(name, "_val") || ends_with(name, "_train"))) report.metrics.push_back(name);
  }
  for (const auto& m : metrics) {
    if (std::ranges::find(header, m) == header.end()) throw ConfigError(fmt::format("no metric column '{}'", m));
    report.metrics.push_back(m);
  }
  if (report.losses.empty()) throw ConfigError("no loss columns found");
  if (report.metrics.empty()) throw ConfigError("no metric columns found");

  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& table = traces[t];
    const std::size_t epoch_col = table.column("epoch");
    Table kept{table.header, {}};
    for (const auto& row : table.rows)
      if (row[epoch_col] >= static_cast<double>(first_epoch)) kept.rows.push_back(row);
    if (kept.rows.size() < 3)
      throw ConfigError(fmt::format("{}: {} epochs at or after epoch {}; at least 3 are needed", sources[t],
                                    kept.rows.size(), first_epoch));
    auto& block = report.cells.emplace_back();
    for (const auto& loss : report.losses) {
      const auto lv = kept.values(kept.column(loss));
      auto& row = block.emplace_back();
      for (const auto& metric : report.metrics) row.push_back(pearson(lv, kept.values(kept.column(metric))));
    }
  }
  return report;
}

std::string CorrelationReport::to_table() const {
  std::string out = "trace\tloss";
  for (const auto& m : metrics) out += "\t" + m;
  out += "\n";
  for (std::size_t t = 0; t < cells.size(); ++t)
    for (std::size_t l = 0; l < losses.size(); ++l) {
      out += sources[t] + "\t" + losses[l];
      for (const auto& c : cells[t][l]) out += c ? fmt::format("\t{:.6f}", *c) : "\tundefined";
      out += "\n";
    }
  return out;
}

std::vector<GroupRow> group_report(const FactorModel& model, const EvalData& data,
                                   std::span<const std::size_t> boundaries, std::size_t min_train) {
  if (boundaries.empty()) throw ConfigError("at least one group boundary is required");
  for (std::size_t b = 1; b < boundaries.size(); ++b)
    if (boundaries[b] <= boundaries[b - 1]) throw ConfigError("group boundaries must be strictly increasing");

  const std::vector<MetricRequest> ndcg = {{WeightKind::kNdcg, 10}};
  const auto eval = evaluate_model(model, data.known, data.holdout, ndcg, min_train);

  std::vector<GroupRow> rows(boundaries.size());
  std::vector<double> sums(boundaries.size(), 0.0);
  for (std::size_t b = 0; b < boundaries.size(); ++b) {
    rows[b].lower = boundaries[b];
    if (b + 1 < boundaries.size()) rows[b].upper = boundaries[b + 1];
  }
  for (std::size_t n = 0; n < eval.users.size(); ++n) {
    const std::size_t count = data.known.items(eval.users[n]).size();
    if (count < boundaries.front()) continue;
    const auto it = std::ranges::upper_bound(boundaries, count);
    const auto b = static_cast<std::size_t>(it - boundaries.begin()) - 1;
    sums[b] += eval.per_user[0][n];
    ++rows[b].num_users;
  }
  for (std::size_t b = 0; b < rows.size(); ++b)
    if (rows[b].num_users > 0) rows[b].ndcg10 = sums[b] / static_cast<double>(rows[b].num_users);
  return rows;
}

std::string format_groups(std::span<const GroupRow> rows) {
  std::string out = "group\tn_users\tndcg@10\n";
  for (const auto& r : rows) {
    const std::string upper = r.upper ? fmt::format("{})", *r.upper) : std::string("inf)");
    out += fmt::format("[{},{}\t{}\t{}\n", r.lower, upper, r.num_users, r.ndcg10 ? fmt::format("{:.10g}", *r.ndcg10) : "");
  }
  return out;
}

}  // namespace drmrec
