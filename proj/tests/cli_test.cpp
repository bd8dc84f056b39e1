/*******************************************************************************
* Copyright 2026 The tilq Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#include <tilq/io.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tilq {
namespace {

namespace fs = std::filesystem;

const fs::path& work()
{
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "tilq_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_work(const std::string& name) { return (work() / name).string(); }

int run(const std::string& args, const std::string& log = "last.log")
{
  const std::string cmd = std::string("\"") + TILQ_CLI + "\" " + args + " > \"" + in_work(log) + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) { return io::read_file(path); }

TEST(Cli, TrivialSolveWritesZeroTheta)
{
  ASSERT_EQ(run("solve trivial --grid-steps 40 --out " + in_work("triv")), 0) << slurp(in_work("last.log"));
  for (const char* f : {"theta.csv", "p1_diag.csv", "p2.csv", "p3_diag.csv", "diagnostics.csv", "summary.json",
                        "scenario.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(work() / "triv" / f)) << f;
  }
  const auto theta = io::read_field_csv(in_work("triv/theta.csv"), TimeGrid(1.0, 40), 1, 1, "theta");
  for (double v : theta.raw()) EXPECT_EQ(v, 0.0);
  const auto man = io::parse_json(slurp(in_work("triv/manifest.json")), "manifest");
  EXPECT_EQ(man["tool_version"], io::tool_version);
}

TEST(Cli, HalfBranchFlagsRange)
{
  ASSERT_EQ(run("solve example25_half --grid-steps 50 --out " + in_work("half")), 0);
  const auto s = io::parse_json(slurp(in_work("half/summary.json")), "summary");
  EXPECT_FALSE(s["constraints"]["range_inclusion"]["pass"].get<bool>());
  EXPECT_FALSE(s["assumption"]["pass"].get<bool>());
}

TEST(Cli, MalformedScenario)
{
  io::write_file(in_work("bad.json"), "{\n  \"dims\": [1,\n");
  EXPECT_EQ(run("solve " + in_work("bad.json") + " --out " + in_work("bad_out")), 2);
  EXPECT_NE(slurp(in_work("last.log")).find("bad.json:3:1"), std::string::npos) << slurp(in_work("last.log"));
  EXPECT_EQ(run("solve no_such_scenario"), 2);
  EXPECT_EQ(run("solve trivial --theta0 zero"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, ScenarioFileSolve)
{
  const auto path = fs::path(TILQ_SOURCE_DIR) / "scenarios" / "smoke.json";
  EXPECT_EQ(run("solve \"" + path.string() + "\" --grid-steps 60 --out " + in_work("file")), 0);
  const auto s = io::parse_json(slurp(in_work("file/summary.json")), "summary");
  EXPECT_EQ(s["grid_steps"], 60);
  EXPECT_LE(s["fixed_point_residual"].get<double>(), 1e-10);
}

TEST(Cli, VerifySuites)
{
  EXPECT_EQ(run("verify example25 --suite example25 --grid-steps 200 --out " + in_work("ver")), 0);
  EXPECT_TRUE(fs::exists(work() / "ver" / "verify_example25.json"));
  EXPECT_EQ(run("verify classical2d --suite classical --grid-steps 100 --out " + in_work("ver")), 0);
  EXPECT_EQ(run("verify smoke --suite classical --grid-steps 100 --out " + in_work("ver")), 2);
  EXPECT_EQ(run("verify smoke --suite nonsense"), 2);
}

TEST(Cli, VerifyDetectsCorruptedTheta)
{
  ASSERT_EQ(run("solve smoke --grid-steps 400 --out " + in_work("sm4")), 0);
  EXPECT_EQ(run("verify " + in_work("sm4") + " --suite equilibrium --paths 2000"), 0) << slurp(in_work("last.log"));
  EXPECT_TRUE(fs::exists(work() / "sm4" / "verify_equilibrium.json"));

  fs::create_directories(work() / "bad");
  fs::copy_file(work() / "sm4" / "scenario.json", work() / "bad" / "scenario.json");
  const TimeGrid g(1.0, 400);
  auto theta = io::read_field_csv(in_work("sm4/theta.csv"), g, 1, 1, "theta");
  for (std::size_t i = 100; i < 200; ++i) theta.scalar(i) += 0.1;
  io::write_file(in_work("bad/theta.csv"), io::field_csv("theta", theta));
  EXPECT_EQ(run("verify " + in_work("bad") + " --suite equilibrium --skip-spike"), 1);
  const auto rep = io::parse_json(slurp(in_work("bad/verify_equilibrium.json")), "report");
  EXPECT_FALSE(rep["pass"].get<bool>());
}

TEST(Cli, SimulateZeroDirection)
{
  ASSERT_EQ(run("solve smoke --grid-steps 64 --out " + in_work("sim")), 0);
  ASSERT_EQ(run("simulate " + in_work("sim") + " --paths 200 --spike-v 0 --dump-paths 3"), 0)
      << slurp(in_work("last.log"));
  std::istringstream in(slurp(in_work("sim/simulate/spike_report.csv")));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto cells = io::split_csv_line(line);
    ASSERT_GE(cells.size(), 3u);
    EXPECT_EQ(std::stod(cells[1]), 0.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4 * default_epsilon_ladder().size());
  EXPECT_TRUE(fs::exists(work() / "sim" / "simulate" / "paths.csv"));
  EXPECT_TRUE(fs::exists(work() / "sim" / "simulate" / "cost.json"));
  EXPECT_EQ(run("simulate " + in_work("no_such_dir")), 2);
  EXPECT_EQ(run("simulate " + in_work("sim") + " --spike-v 1,2"), 2);
}

TEST(Cli, RepeatedRunsAreIdentical)
{
  for (const char* d : {"rep_a", "rep_b"}) {
    ASSERT_EQ(run("solve smoke --grid-steps 80 --out " + in_work(d)), 0);
    ASSERT_EQ(run(std::string("simulate ") + in_work(d) + " --paths 300 --seed 7 --t 0.25"), 0);
  }
  for (const char* f : {"theta.csv", "p1_diag.csv", "p2.csv", "p3_diag.csv", "diagnostics.csv", "summary.json",
                        "scenario.json", "simulate/spike_report.csv", "simulate/cost.json"}) {
    EXPECT_EQ(slurp(in_work(std::string("rep_a/") + f)), slurp(in_work(std::string("rep_b/") + f))) << f;
  }
}

TEST(Cli, ExampleMatchesShippedScenario)
{
  ASSERT_EQ(run("example classical2d --out " + in_work("c2.json")), 0);
  EXPECT_EQ(slurp(in_work("c2.json")), slurp((fs::path(TILQ_SOURCE_DIR) / "scenarios" / "classical2d.json").string()));
  EXPECT_EQ(run("example nope"), 2);
}

}  // namespace
}  // namespace tilq
