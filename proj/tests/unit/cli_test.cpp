// Copyright 2026 The varid Authors
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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "support/fixtures.hpp"
#include "varid/csv.hpp"

namespace varid {
namespace {

namespace fs = std::filesystem;
using testing::read_text;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "varid");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = harness::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string pendulum_config(int steps, const std::string& extra = "",
                            const std::string& initial = R"({"q": [0.5]})") {
  return R"({"model": {"type": "pendulum", "spring": true},
    "grid": {"dt": 0.01, "steps": )" + std::to_string(steps) + R"(},
    "initial": )" + initial + R"(,
    "rho_true": [2.0], "rho0": [3.0],
    "excitation": {"actuated": [0], "torques": [{"amplitude": 0.5, "frequency": 0.3}],
                   "feedback_gain": 0.5},
    "observation": {"type": "coordinates", "indices": [0]},
    "descent": {"grad_tol": 1e-6},
    "seed": 3)" + extra + "}";
}

std::string loop_config(int links, int steps, double noise) {
  return R"({"model": {"type": "closed_loop",
      "regular_polygon": {"links": )" + std::to_string(links) + R"(, "radius": 0.355, "total_mass": 0.132},
      "stiffness_map": "alternating", "damping": 0.01},
    "grid": {"dt": 0.01, "steps": )" + std::to_string(steps) + R"(},
    "rho_true": [4.45252, 0.96969], "rho0": [5.0, 5.0],
    "excitation": {"actuated": [0, 1],
      "torques": [{"amplitude": 0.3, "frequency": 0.23}, {"amplitude": 0.24, "frequency": 0.37}],
      "feedback_gain": 0.05},
    "observation": {"type": "link_position", "link": 1},
    "noise": {"observation_std": )" + format_double(noise) + R"(},
    "seed": 7})";
}

int data_rows(const std::string& csv) {
  int n = -1;  // header
  for (char c : csv) n += c == '\n';
  return n;
}

// Column `col` of a CSV body as numbers.
std::vector<double> column(const std::string& csv, int col) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string f;
    for (int i = 0; i <= col; ++i) std::getline(fields, f, ',');
    out.push_back(std::stod(f));
  }
  return out;
}

const std::regex kErrorLine(R"(^error: code=[A-Z_]+( kind=[a-z_]+ step=-?[0-9]+)? message=".*"\n$)");

TEST(Cli, SimulateWritesOneRowPerSampleAndIsDeterministic) {
  const fs::path dir = testing::scratch_dir("cli_simulate");
  const fs::path cfg = write_config(dir, "p.json", pendulum_config(150));
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(),
                 "--dump-linearization"}).code, 0);
  EXPECT_EQ(data_rows(read_text(dir / "a/trajectory.csv")), 151);
  EXPECT_EQ(data_rows(read_text(dir / "a/energy.csv")), 150);
  for (const char* f : {"trajectory.csv", "energy.csv", "trajectory.json"}) {
    EXPECT_EQ(read_text(dir / "a" / f), read_text(dir / "b" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "a/linearization.json"));
  EXPECT_TRUE(fs::exists(dir / "b/linearization.json"));
  EXPECT_NE(read_text(dir / "a/manifest.json").find("\"config_hash\""), std::string::npos);
}

TEST(Cli, SimulateLoopKeepsConstraint) {
  const fs::path dir = testing::scratch_dir("cli_loop");
  const fs::path cfg = write_config(dir, "l.json", loop_config(6, 500, 0.0));
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir.string()}).code, 0);
  const std::vector<double> residual = column(read_text(dir / "energy.csv"), 3);
  ASSERT_EQ(residual.size(), 500u);
  for (double r : residual) EXPECT_LT(r, 1e-10);
}

TEST(Cli, GenerateWithoutNoiseCopiesCleanData) {
  const fs::path dir = testing::scratch_dir("cli_generate");
  const fs::path cfg = write_config(dir, "l.json", loop_config(6, 200, 0.0));
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", dir.string()}).code, 0);
  EXPECT_EQ(read_text(dir / "observations.csv"), read_text(dir / "observations_clean.csv"));
  EXPECT_EQ(read_text(dir / "torques.csv"), read_text(dir / "torques_clean.csv"));
  EXPECT_EQ(data_rows(read_text(dir / "observations.csv")), 201);
}

TEST(Cli, GenerateIsSeedDeterministic) {
  const fs::path dir = testing::scratch_dir("cli_seed");
  const fs::path cfg = write_config(dir, "l.json", loop_config(6, 200, 0.005));
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", (dir / "b").string()}).code, 0);
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed",
                 "8"}).code, 0);
  EXPECT_EQ(read_text(dir / "a/observations.csv"), read_text(dir / "b/observations.csv"));
  EXPECT_NE(read_text(dir / "a/observations.csv"), read_text(dir / "c/observations.csv"));
  EXPECT_EQ(read_text(dir / "a/observations_clean.csv"),
            read_text(dir / "c/observations_clean.csv"));
}

TEST(Cli, ObservationNoiseHasRequestedSpread) {
  const fs::path dir = testing::scratch_dir("cli_noise");
  const fs::path cfg = write_config(dir, "l.json", loop_config(12, 2000, 0.005));
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", dir.string()}).code, 0);
  const std::string noisy = read_text(dir / "observations.csv");
  const std::string clean = read_text(dir / "observations_clean.csv");
  std::vector<double> d;
  for (int c : {1, 2}) {
    const auto a = column(noisy, c);
    const auto b = column(clean, c);
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a[i] - b[i]);
  }
  ASSERT_GE(d.size(), 2000u);
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(d.size() - 1));
  EXPECT_LT(std::abs(sd - 0.005) / 0.005, 0.10);
}

TEST(Cli, IdentifyConsumesGeneratedDataDeterministically) {
  const fs::path dir = testing::scratch_dir("cli_identify");
  const fs::path cfg = write_config(dir, "p.json", pendulum_config(300));
  ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", dir.string()}).code, 0);
  const CliRun first = run({"identify", "--config", cfg.string(), "--out", dir.string()});
  ASSERT_EQ(first.code, 0) << first.err;
  const std::string result = read_text(dir / "result.json");
  const std::string paths = read_text(dir / "paths.csv");
  const std::string conv = read_text(dir / "convergence.csv");
  ASSERT_EQ(run({"identify", "--config", cfg.string(), "--out", dir.string()}).code, 0);
  EXPECT_EQ(read_text(dir / "result.json"), result);
  EXPECT_EQ(read_text(dir / "paths.csv"), paths);
  EXPECT_EQ(read_text(dir / "convergence.csv"), conv);
  EXPECT_NE(result.find("\"termination\": \"grad_tol\""), std::string::npos) << result;
  EXPECT_NE(first.out.find("identify: termination=grad_tol"), std::string::npos);
}

TEST(Cli, CheckPassesOnStockPendulum) {
  const fs::path dir = testing::scratch_dir("cli_check");
  const fs::path cfg = write_config(dir, "p.json", pendulum_config(100));
  const CliRun r = run({"check", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("check: PASS"), std::string::npos);
  EXPECT_NE(r.out.find("check gradient"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "check.json"));
}

TEST(Cli, UsageAndConfigErrorsExitTwo) {
  const fs::path dir = testing::scratch_dir("cli_errors");
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"simulate"}).code, 2);
  const CliRun missing = run({"simulate", "--config", (dir / "nope.json").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_TRUE(std::regex_match(missing.err, kErrorLine)) << missing.err;
  EXPECT_NE(missing.err.find("code=CONFIG_ERROR"), std::string::npos);

  const fs::path bad = write_config(dir, "bad.json", R"({"model": {"type": "pendulum"},
      "grid": {"dt": 0.01, "steps": 5}, "colour": "red"})");
  const CliRun r = run({"simulate", "--config", bad.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(std::regex_match(r.err, kErrorLine)) << r.err;
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, InfeasibleStartExitsThree) {
  const fs::path dir = testing::scratch_dir("cli_infeasible");
  const fs::path cfg = write_config(dir, "l.json", R"({"model": {"type": "closed_loop",
      "regular_polygon": {"links": 6, "radius": 0.355, "total_mass": 0.132},
      "stiffness_map": "alternating"},
    "grid": {"dt": 0.01, "steps": 10},
    "initial": {"q": [0, 0, 0, 0, 0, 0], "project": false},
    "rho_true": [1, 1]})");
  const CliRun r = run({"simulate", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(std::regex_match(r.err, kErrorLine)) << r.err;
  EXPECT_NE(r.err.find("code=INFEASIBLE_START"), std::string::npos);
}

TEST(Cli, SolverFailureExitsThreeWithKindAndStep) {
  const fs::path dir = testing::scratch_dir("cli_solver");
  const fs::path cfg = write_config(
      dir, "p.json",
      pendulum_config(50, R"(, "solver": {"max_iters": 1, "predictor": "hold"})",
                      R"({"q": [0.5], "v": [30.0]})"));
  const CliRun r = run({"simulate", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(std::regex_match(r.err, kErrorLine)) << r.err;
  EXPECT_NE(r.err.find("kind=non_convergence step=0"), std::string::npos) << r.err;
}

TEST(Cli, IngestionMismatchExitsTwo) {
  const fs::path dir = testing::scratch_dir("cli_ingest");
  const fs::path gen = write_config(dir, "gen.json", pendulum_config(100));
  ASSERT_EQ(run({"generate", "--config", gen.string(), "--out", dir.string()}).code, 0);
  // Same data, different grid: the time column no longer lines up.
  std::string text = pendulum_config(100);
  text.replace(text.find("\"dt\": 0.01"), 10, "\"dt\": 0.02");
  const fs::path other = write_config(dir, "other.json", text);
  const CliRun r = run({"identify", "--config", other.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(std::regex_match(r.err, kErrorLine)) << r.err;
  EXPECT_NE(r.err.find("observations.csv:3"), std::string::npos) << r.err;

  const CliRun none = run({"identify", "--config", gen.string(), "--out", (dir / "empty").string()});
  EXPECT_EQ(none.code, 2);
}

}  // namespace
}  // namespace varid
