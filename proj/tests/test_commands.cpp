#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hyrrt;
using namespace hyrrt::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hyrrt_test_commands_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Captured {
  int code = -1;
  std::string out;
  std::string err;
};

Captured run_plan(const fs::path& dir, const std::vector<std::string>& overrides, const std::string& cfg = "bouncing_ball.cfg") {
  std::ostringstream out, err;
  Captured c;
  c.code = cmd_plan(config_path(cfg), overrides, dir, out, err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

Captured run_validate(const fs::path& plan, const std::vector<std::string>& overrides = {},
                      const std::string& cfg = "bouncing_ball.cfg") {
  std::ostringstream out, err;
  Captured c;
  c.code = cmd_validate(plan.string(), config_path(cfg), overrides, out, err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

}  // namespace

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
  EXPECT_EQ(mean({1.0, 2.0, 6.0}), 3.0);
}

TEST(CmdPlan, WritesFilesThatValidate) {
  const fs::path dir = fresh_dir("plan");
  const Captured p = run_plan(dir, {"planner.seed=7"});
  ASSERT_EQ(p.code, kExitOk) << p.out << p.err;
  EXPECT_NE(p.out.find("provenance=jump_connection"), std::string::npos);
  ASSERT_TRUE(fs::exists(dir / "plan.json"));
  ASSERT_TRUE(fs::exists(dir / "plan.csv"));
  EXPECT_EQ(slurp(dir / "plan.csv").rfind("t,j,x1,x2,u1\n0,0,14,0,", 0), 0u);

  const Captured v = run_validate(dir / "plan.json");
  EXPECT_EQ(v.code, kExitOk) << v.out << v.err;
  EXPECT_NE(v.out.find("VALID"), std::string::npos);
  EXPECT_EQ(v.out.find("INVALID"), std::string::npos);
}

TEST(CmdPlan, RerunIsByteIdentical) {
  const fs::path a = fresh_dir("rerun_a");
  const fs::path b = fresh_dir("rerun_b");
  ASSERT_EQ(run_plan(a, {"planner.seed=11", "planner.mode=bi_hyrrt"}).code, kExitOk);
  ASSERT_EQ(run_plan(b, {"planner.seed=11", "planner.mode=bi_hyrrt"}).code, kExitOk);
  EXPECT_EQ(slurp(a / "plan.json"), slurp(b / "plan.json"));
  EXPECT_EQ(slurp(a / "plan.csv"), slurp(b / "plan.csv"));
}

TEST(CmdPlan, NoPlanExitsWithTwoAndWritesNothing) {
  const fs::path dir = fresh_dir("none");
  const Captured p = run_plan(dir, {"planner.max_iterations=0"});
  EXPECT_EQ(p.code, kExitNoPlan);
  EXPECT_NE(p.out.find("no motion plan found"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "plan.json"));
}

TEST(CmdPlan, ConfigErrorExitsWithOneAndWritesNothing) {
  const fs::path dir = fresh_dir("badcfg");
  const Captured p = run_plan(dir, {"planner.delta=-1"});
  EXPECT_EQ(p.code, kExitConfig);
  EXPECT_NE(p.err.find("delta must be positive"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));

  std::ostringstream out, err;
  EXPECT_EQ(cmd_plan("/nonexistent.cfg", {}, dir, out, err), kExitConfig);
  EXPECT_EQ(run_plan(dir, {"planner.mode=sideways"}).code, kExitConfig);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(CmdPlan, ReconstructedPlanCarriesItsViolationLog) {
  const fs::path dir = fresh_dir("reconstructed");
  const Captured p = run_plan(dir, {"planner.seed=2", "planner.mode=bi_hyrrt"});
  ASSERT_EQ(p.code, kExitOk) << p.out;
  const Json j = Json::parse(slurp(dir / "plan.json"));
  EXPECT_EQ(j["provenance"], "reconstructed_flow_match");
  ASSERT_TRUE(j["reconstruction"].is_object());
  EXPECT_TRUE(j["reconstruction"]["membership_violations"].is_array());
  EXPECT_TRUE(j["u_star"].is_null());
  EXPECT_EQ(run_validate(dir / "plan.json").code, kExitOk);
}

TEST(CmdPlan, SystemWithoutJumps) {
  const fs::path dir = fresh_dir("integrator");
  const Captured p = run_plan(dir, {}, "integrator.cfg");
  ASSERT_EQ(p.code, kExitOk) << p.out;
  EXPECT_EQ(run_validate(dir / "plan.json", {}, "integrator.cfg").code, kExitOk);
}

TEST(CmdValidate, CorruptedSampleFailsWithTheCheckNamed) {
  const fs::path dir = fresh_dir("corrupt");
  ASSERT_EQ(run_plan(dir, {"planner.seed=7"}).code, kExitOk);
  Json j = Json::parse(slurp(dir / "plan.json"));
  Json& samples = j["plan"]["segments"][0]["samples"];
  ASSERT_GE(samples.size(), 3u);
  samples[samples.size() / 2][1] = -1.0;
  std::ofstream(dir / "plan.json", std::ios::binary) << dump_json(j);

  const Captured v = run_validate(dir / "plan.json");
  EXPECT_EQ(v.code, kExitInvalid);
  EXPECT_NE(v.out.find("FAIL  flow_set_membership"), std::string::npos) << v.out;
  EXPECT_NE(v.out.find("INVALID"), std::string::npos);
}

TEST(CmdValidate, StartOutsideTheInitialSetIsInvalid) {
  const fs::path dir = fresh_dir("start");
  ASSERT_EQ(run_plan(dir, {"planner.seed=7"}).code, kExitOk);
  const Captured v = run_validate(dir / "plan.json", {"problem.x0=13,0"});
  EXPECT_EQ(v.code, kExitInvalid);
  EXPECT_NE(v.out.find("FAIL  initial_set_membership"), std::string::npos);
}

TEST(CmdValidate, MismatchedOrMalformedPlanExitsWithOne) {
  const fs::path dir = fresh_dir("mismatch");
  ASSERT_EQ(run_plan(dir, {"planner.seed=7"}).code, kExitOk);
  const Captured wrong_system = run_validate(dir / "plan.json", {}, "integrator.cfg");
  EXPECT_EQ(wrong_system.code, kExitConfig);
  EXPECT_NE(wrong_system.err.find("bouncing_ball"), std::string::npos);

  Json j = Json::parse(slurp(dir / "plan.json"));
  j["plan"]["n"] = 3;
  std::ofstream(dir / "dim.json", std::ios::binary) << dump_json(j);
  EXPECT_EQ(run_validate(dir / "dim.json").code, kExitConfig);

  std::ofstream(dir / "broken.json", std::ios::binary) << "{\"system\": ";
  EXPECT_EQ(run_validate(dir / "broken.json").code, kExitConfig);
  EXPECT_EQ(run_validate(dir / "missing.json").code, kExitConfig);
}

TEST(CmdSweepDelta, WritesOneRowPerRun) {
  const fs::path dir = fresh_dir("sweep");
  std::ostringstream out, err;
  const int code = cmd_sweep_delta(config_path("bouncing_ball.cfg"), {"planner.max_iterations=4000"},
                                   std::vector<double>{0.4, 0.2}, 2, dir, out, err);
  ASSERT_EQ(code, kExitOk) << err.str();
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(csv.rfind("delta,seed,distance,success\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(out.str().find("median_distance"), std::string::npos);
}

TEST(CmdSweepDelta, NonPositiveDeltaExitsWithOne) {
  const fs::path dir = fresh_dir("sweep_bad");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep_delta(config_path("bouncing_ball.cfg"), {}, std::vector<double>{0.2, 0.0}, 1, dir, out, err),
            kExitConfig);
  EXPECT_EQ(cmd_sweep_delta(config_path("bouncing_ball.cfg"), {}, std::vector<double>{0.2}, 0, dir, out, err),
            kExitConfig);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(RunDeltaSweep, ExactMatchesReportZeroDistance) {
  Scenario s = ball_scenario({"planner.max_iterations=3000"});
  const std::vector<SweepRow> rows = run_delta_sweep(s, {0.3}, 3);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].seed, i);
    if (!rows[i].success) continue;
    EXPECT_NE(rows[i].provenance, Provenance::jump_connection);
    EXPECT_EQ(rows[i].distance == 0.0, rows[i].provenance == Provenance::exact_flow_match);
  }
}

TEST(CmdBenchmark, OneTrialGivesOneRowPerMode) {
  const fs::path dir = fresh_dir("bench");
  std::ostringstream out, err;
  const int code =
      cmd_benchmark(config_path("bouncing_ball.cfg"), {"planner.max_iterations=2000"}, 1, dir, out, err);
  ASSERT_EQ(code, kExitOk) << err.str();
  std::istringstream csv(slurp(dir / "bench.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "mode,seed,success,vertices,iterations,wall_ms");
  std::vector<std::string> modes;
  while (std::getline(csv, line)) modes.push_back(line.substr(0, line.find(',')));
  EXPECT_EQ(modes, (std::vector<std::string>{"hyrrt_connect", "bi_hyrrt", "hyrrt"}));
  EXPECT_NE(out.str().find("median_vertices"), std::string::npos);
}

TEST(Summarize, FailuresCountTowardTheStatistics) {
  const std::vector<BenchmarkRow> rows = {{PlannerMode::hyrrt, 0, true, 10, 5, 1.0},
                                          {PlannerMode::hyrrt, 1, false, 100, 50, 3.0},
                                          {PlannerMode::bi_hyrrt, 0, true, 7, 2, 0.5}};
  const BenchmarkSummary s = summarize(rows, PlannerMode::hyrrt);
  EXPECT_EQ(s.runs, 2u);
  EXPECT_EQ(s.successes, 1u);
  EXPECT_EQ(s.median_vertices, 55.0);
  EXPECT_EQ(s.mean_wall_ms, 2.0);
}
