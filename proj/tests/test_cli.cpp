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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "drmrec/interactions.hpp"

namespace drmrec {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(DRMREC_CLI_PATH) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("drmrec_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, MalformedPlaylistNamesRecord) {
  const auto dir = fresh_dir("badjson");
  write(dir / "p.json", R"([{"id": "a", "songs": ["x"]}, {"id": "b", "songs": [{"nested": 1}]}])");
  const auto r = run_cli("convert " + q(dir / "p.json") + " " + q(dir / "out.tsv") + " --format playlist-json");
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_NE(r.output.find("record 1"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir / "out.tsv"));
}

TEST(Cli, ConvertIsIdempotent) {
  const auto dir = fresh_dir("convert");
  write(dir / "in.tsv", "b\t2\na\t1\nb\t1\n");
  ASSERT_EQ(run_cli("convert " + q(dir / "in.tsv") + " " + q(dir / "a.tsv")).code, 0);
  ASSERT_EQ(run_cli("convert " + q(dir / "a.tsv") + " " + q(dir / "b.tsv")).code, 0);
  EXPECT_EQ(slurp(dir / "a.tsv"), slurp(dir / "b.tsv"));
  const auto bad = run_cli("convert " + q(dir / "missing.tsv") + " " + q(dir / "c.tsv"));
  EXPECT_EQ(bad.code, 4) << bad.output;
}

TEST(Cli, ZeroTemperatureIsAConfigError) {
  const auto dir = fresh_dir("tau0");
  {
    std::ofstream data(dir / "data.tsv");
    write_pair_list(data, make_synthetic({20, 30, 4, 6, 1}));
  }
  write(dir / "exp.ini", "[data]\npath = " + (dir / "data.tsv").string() + "\n[train]\ntau = 0\n");
  const auto r = run_cli("train --config " + q(dir / "exp.ini") + " --out " + q(dir / "out"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_FALSE(fs::exists(dir / "out" / "report.tsv"));
  const auto unknown = run_cli("train --config " + q(dir / "exp.ini") + " --out " + q(dir / "out") + " --bogus 1");
  EXPECT_EQ(unknown.code, 2) << unknown.output;
}

TEST(Cli, MissingModelWritesNothing) {
  const auto dir = fresh_dir("nomodel");
  const auto r = run_cli("eval --model " + q(dir / "none.bin") + " --split " + q(dir / "split") + " --out " +
                         q(dir / "out"));
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_FALSE(fs::exists(dir / "out" / "eval.tsv"));
}

TEST(Cli, TrainEvalCorrelateGroupReport) {
  const auto dir = fresh_dir("pipeline");
  {
    std::ofstream data(dir / "data.tsv");
    write_pair_list(data, make_synthetic({40, 60, 4, 10, 2}));
  }
  write(dir / "exp.ini",
        "[data]\npath = " + (dir / "data.tsv").string() +
            "\n[model]\ndim = 8\n[train]\nepochs = 4\nlambda_cov = 0\n[experiment]\nruns = 1\n");
  const auto train = run_cli("train --config " + q(dir / "exp.ini") + " --out " + q(dir / "out") +
                             " --seed 3 --tau=0.5");
  ASSERT_EQ(train.code, 0) << train.output;
  EXPECT_NE(train.output.find("fingerprint"), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "config.txt").find("train.tau = 0.5"), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "config.txt").find("train.seed = 3"), std::string::npos);

  const auto model = dir / "out" / "run_0" / "model.bin";
  const auto eval = run_cli("eval --model " + q(model) + " --split " + q(dir / "out" / "split") + " --cutoffs 5 --out " +
                            q(dir / "eval"));
  ASSERT_EQ(eval.code, 0) << eval.output;
  const auto table = slurp(dir / "eval" / "eval.tsv");
  for (const char* label : {"MAP@10", "NDCG@10", "Recall@50", "NDCG@50", "Precision@5"})
    EXPECT_NE(table.find(label), std::string::npos) << label;
  // Rerunning reproduces the report byte for byte.
  ASSERT_EQ(run_cli("eval --model " + q(model) + " --split " + q(dir / "out" / "split") + " --cutoffs 5 --out " +
                    q(dir / "eval2"))
                .code,
            0);
  EXPECT_EQ(table, slurp(dir / "eval2" / "eval.tsv"));

  const auto corr = run_cli("correlate " + q(dir / "out" / "run_0" / "trace.tsv") + " --first-epoch 1 --out " +
                            q(dir / "corr"));
  ASSERT_EQ(corr.code, 0) << corr.output;
  EXPECT_NE(slurp(dir / "corr" / "correlation.tsv").find("drm_loss_mean"), std::string::npos);

  const auto groups = run_cli("group-report --model " + q(model) + " --split " + q(dir / "out" / "split") +
                              " --boundaries 5,8 --out " + q(dir / "groups"));
  ASSERT_EQ(groups.code, 0) << groups.output;
  EXPECT_NE(slurp(dir / "groups" / "groups.tsv").find("[8,inf)"), std::string::npos);
}

}  // namespace
}  // namespace drmrec
