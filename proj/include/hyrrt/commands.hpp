#pragma once

/**
 * @file commands.hpp
 * @brief The four CLI commands, usable in-process.
 *
 * Exit codes: 0 success, 1 configuration or usage error, 2 no plan found,
 * 3 validation failure.
 */

#include <hyrrt/config.hpp>
#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/planner.hpp>
#include <hyrrt/serialization.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hyrrt {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNoPlan = 2, kExitInvalid = 3 };

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Validation of a finished plan against the forward system and X0.
struct PlanVerdict {
  ValidationReport report;
  bool starts_in_initial_set = false;
  double endpoint_distance = 0.0;

  bool valid() const { return report.valid && starts_in_initial_set; }
};

inline PlanVerdict check_plan(const Scenario& s, const SolutionPair& pair,
                              std::span<const MembershipViolation> excused) {
  PlanVerdict v;
  v.report = validate_solution_pair(s.problem.system, pair, s.planner.tolerances, excused);
  if (!pair.empty()) {
    v.starts_in_initial_set = s.problem.initial.contains(pair.arc.front(), s.planner.tolerances.membership_slack);
    v.endpoint_distance = s.problem.final.distance(pair.arc.back());
  }
  return v;
}

inline void print_verdict(const PlanVerdict& v, std::ostream& out) {
  for (const CheckResult* c : v.report.checks()) {
    out << (c->passed ? "ok    " : "FAIL  ") << c->name << "  checked=" << c->checked;
    if (c->excused) out << " excused=" << c->excused;
    out << " worst=" << c->worst;
    if (c->first_failure) out << " first_failure=(t=" << c->first_failure->t << ", j=" << c->first_failure->j << ")";
    out << '\n';
  }
  out << (v.starts_in_initial_set ? "ok    " : "FAIL  ") << "initial_set_membership\n";
  out << "endpoint distance to final set: " << v.endpoint_distance << '\n';
  out << (v.valid() ? "VALID" : "INVALID") << '\n';
}

inline std::span<const MembershipViolation> excused_of(const MotionPlan& plan) {
  if (!plan.reconstruction) return {};
  return plan.reconstruction->membership_violations;
}

/// Runs the planner, writes plan.json and plan.csv into `out_dir` on success.
inline int cmd_plan(const std::string& config_path, const std::vector<std::string>& overrides,
                    const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = build_scenario(load_config(config_path, overrides));
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const PlanResult r = plan(s.problem, s.backward_system(), s.planner);
  const RunStats& st = r.stats;
  out << "mode=" << to_string(s.planner.mode) << " seed=" << s.planner.seed << " iterations=" << st.iterations
      << " vertices=" << st.vertices() << " (fw " << st.vertices_forward << ", bw " << st.vertices_backward
      << ") wall_ms=" << detail::fixed(st.wall_ms) << '\n';
  if (!r.plan) {
    out << "no motion plan found\n";
    return kExitNoPlan;
  }
  const MotionPlan& p = *r.plan;
  out << "provenance=" << to_string(p.provenance) << " endpoint_distance=" << p.endpoint_distance;
  if (p.u_star) out << " u_star=" << (*p.u_star)[0];
  if (p.reconstruction) out << " reconstruction_deviation=" << p.reconstruction->endpoint_deviation;
  out << '\n';

  try {
    const PlanMetadata meta{s.problem.system.id, s.planner.mode, s.planner.seed};
    detail::write_file(out_dir / "plan.json", dump_json(motion_plan_json(p, meta)));
    detail::write_file(out_dir / "plan.csv", solution_pair_csv(p.pair));
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }
  out << "wrote " << (out_dir / "plan.json").string() << " and " << (out_dir / "plan.csv").string() << '\n';

  const PlanVerdict v = check_plan(s, p.pair, excused_of(p));
  if (!v.valid()) {
    print_verdict(v, out);
    return kExitInvalid;
  }
  return kExitOk;
}

/// Validates a plan.json against the system described by the config.
inline int cmd_validate(const std::string& plan_path, const std::string& config_path,
                        const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
  Scenario s;
  LoadedPlan loaded;
  try {
    s = build_scenario(load_config(config_path, overrides));
    loaded = read_plan_file(plan_path);
    if (loaded.system != s.problem.system.id)
      throw Error("plan was made for system '" + loaded.system + "', config describes '" + s.problem.system.id + "'");
    const PlanVerdict v = check_plan(s, loaded.pair, loaded.excused);
    out << "plan " << plan_path << " (" << loaded.provenance << ")\n";
    print_verdict(v, out);
    return v.valid() ? kExitOk : kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

struct SweepRow {
  double delta = 0.0;
  std::uint64_t seed = 0;
  bool success = false;
  /// |phi_r(T_r, J_r) - phi_bw(0, 0)|; zero for exact matches.
  double distance = 0.0;
  Provenance provenance = Provenance::reconstructed_flow_match;
};

/// Runs `trials` seeds (seed, seed + 1, ...) per delta with jump connections disabled.
inline std::vector<SweepRow> run_delta_sweep(Scenario s, const std::vector<double>& deltas, int trials) {
  for (double d : deltas)
    if (!(d > 0.0)) throw ConfigError("delta values must be positive");
  if (trials < 1) throw ConfigError("trial count must be at least 1");
  s.planner.mode = PlannerMode::bi_hyrrt;
  if (!s.backward) s.backward = make_backward_system(s.problem.system);
  const std::uint64_t base = s.planner.seed;
  std::vector<SweepRow> rows;
  for (double d : deltas) {
    for (int i = 0; i < trials; ++i) {
      PlannerConfig cfg = s.planner;
      cfg.delta = d;
      cfg.seed = base + static_cast<std::uint64_t>(i);
      const PlanResult r = plan(s.problem, s.backward_system(), cfg);
      SweepRow row{d, cfg.seed, r.plan.has_value()};
      if (r.plan) {
        row.provenance = r.plan->provenance;
        row.distance = r.plan->reconstruction ? r.plan->reconstruction->endpoint_deviation : 0.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::vector<double> sweep_distances(const std::vector<SweepRow>& rows, double delta) {
  std::vector<double> out;
  for (const SweepRow& r : rows)
    if (r.delta == delta && r.success) out.push_back(r.distance);
  return out;
}

inline int cmd_sweep_delta(const std::string& config_path, const std::vector<std::string>& overrides,
                           std::optional<std::vector<double>> deltas, std::optional<int> trials,
                           const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  std::vector<SweepRow> rows;
  std::vector<double> ds;
  try {
    const RunConfig config = load_config(config_path, overrides);
    ds = deltas.value_or(config.sweep_deltas);
    rows = run_delta_sweep(build_scenario(config), ds, trials.value_or(config.sweep_trials));
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::string csv = "delta,seed,distance,success\n";
  for (const SweepRow& r : rows)
    csv += format_number(r.delta) + "," + std::to_string(r.seed) + "," + (r.success ? format_number(r.distance) : "") +
           "," + (r.success ? "1" : "0") + "\n";
  try {
    detail::write_file(out_dir / "sweep.csv", csv);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  out << "delta      successes  median_distance  mean_distance\n";
  for (double d : ds) {
    const std::vector<double> dist = sweep_distances(rows, d);
    const std::size_t total = std::count_if(rows.begin(), rows.end(), [d](const SweepRow& r) { return r.delta == d; });
    char line[160];
    std::snprintf(line, sizeof line, "%-10g %4zu/%-5zu %15.6g %14.6g\n", d, dist.size(), total, median(dist), mean(dist));
    out << line;
  }
  out << "wrote " << (out_dir / "sweep.csv").string() << '\n';
  return kExitOk;
}

struct BenchmarkRow {
  PlannerMode mode = PlannerMode::hyrrt_connect;
  std::uint64_t seed = 0;
  bool success = false;
  std::size_t vertices = 0;
  long long iterations = 0;
  double wall_ms = 0.0;
};

inline constexpr PlannerMode kBenchmarkModes[] = {PlannerMode::hyrrt_connect, PlannerMode::bi_hyrrt, PlannerMode::hyrrt};

/// Runs every mode on seeds seed, seed + 1, ...; rows are ordered by (mode, seed).
inline std::vector<BenchmarkRow> run_benchmark(Scenario s, int trials) {
  if (trials < 1) throw ConfigError("trial count must be at least 1");
  if (!s.backward) s.backward = make_backward_system(s.problem.system);
  const std::uint64_t base = s.planner.seed;
  std::vector<BenchmarkRow> rows;
  for (PlannerMode mode : kBenchmarkModes) {
    for (int i = 0; i < trials; ++i) {
      PlannerConfig cfg = s.planner;
      cfg.mode = mode;
      cfg.seed = base + static_cast<std::uint64_t>(i);
      const PlanResult r = plan(s.problem, s.backward_system(), cfg);
      rows.push_back({mode, cfg.seed, r.plan.has_value(), r.stats.vertices(), r.stats.iterations, r.stats.wall_ms});
    }
  }
  return rows;
}

struct BenchmarkSummary {
  PlannerMode mode = PlannerMode::hyrrt_connect;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double mean_vertices = 0.0;
  double median_vertices = 0.0;
  double mean_wall_ms = 0.0;
  double median_wall_ms = 0.0;
};

/// Vertex and time statistics over all runs of a mode, failures included.
inline BenchmarkSummary summarize(const std::vector<BenchmarkRow>& rows, PlannerMode mode) {
  BenchmarkSummary s;
  s.mode = mode;
  std::vector<double> vertices, wall;
  for (const BenchmarkRow& r : rows) {
    if (r.mode != mode) continue;
    ++s.runs;
    if (r.success) ++s.successes;
    vertices.push_back(static_cast<double>(r.vertices));
    wall.push_back(r.wall_ms);
  }
  s.mean_vertices = mean(vertices);
  s.median_vertices = median(vertices);
  s.mean_wall_ms = mean(wall);
  s.median_wall_ms = median(wall);
  return s;
}

inline int cmd_benchmark(const std::string& config_path, const std::vector<std::string>& overrides,
                         std::optional<int> trials, const std::filesystem::path& out_dir, std::ostream& out,
                         std::ostream& err) {
  std::vector<BenchmarkRow> rows;
  try {
    const RunConfig config = load_config(config_path, overrides);
    rows = run_benchmark(build_scenario(config), trials.value_or(config.benchmark_trials));
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::string csv = "mode,seed,success,vertices,iterations,wall_ms\n";
  for (const BenchmarkRow& r : rows)
    csv += std::string(to_string(r.mode)) + "," + std::to_string(r.seed) + "," + (r.success ? "1" : "0") + "," +
           std::to_string(r.vertices) + "," + std::to_string(r.iterations) + "," + detail::fixed(r.wall_ms) + "\n";
  try {
    detail::write_file(out_dir / "bench.csv", csv);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  out << "mode            success  mean_vertices  median_vertices  mean_ms  median_ms\n";
  for (PlannerMode mode : kBenchmarkModes) {
    const BenchmarkSummary s = summarize(rows, mode);
    char line[200];
    std::snprintf(line, sizeof line, "%-15s %3zu/%-4zu %13.1f %16.1f %8.2f %10.2f\n", to_string(mode), s.successes,
                  s.runs, s.mean_vertices, s.median_vertices, s.mean_wall_ms, s.median_wall_ms);
    out << line;
  }
  out << "wrote " << (out_dir / "bench.csv").string() << '\n';
  return kExitOk;
}

}  // namespace hyrrt
