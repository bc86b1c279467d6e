#pragma once

/**
 * @file config.hpp
 * @brief key = value run configuration.
 *
 * One `key = value` per line; `#` starts a comment. Lists are comma separated.
 * Unknown and repeated keys are errors. Overrides (`key=value`) are applied
 * after the file. See configs/ for annotated examples and README.md for the
 * full key list.
 */

#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/planner.hpp>
#include <hyrrt/propagation.hpp>
#include <hyrrt/systems.hpp>
#include <hyrrt/types.hpp>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hyrrt {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string system = "bouncing_ball";
  BouncingBallParams ball;
  IntegratorParams integrator;

  std::optional<Box> initial;
  std::optional<Box> final;
  /// Inputs outside the open box (lower, upper) are unsafe; no unsafe set if unset.
  std::optional<Vector> safe_input_lower;
  std::optional<Vector> safe_input_upper;

  PlannerConfig planner;
  std::optional<Box> flow_inputs;
  std::optional<Box> jump_inputs;

  std::vector<double> sweep_deltas{0.4, 0.2, 0.1, 0.05};
  int sweep_trials = 20;
  int benchmark_trials = 20;
};

/// Everything a planner run needs, built from a RunConfig.
struct Scenario {
  ProblemDef problem;
  std::optional<HybridSystem> backward;
  PlannerConfig planner;

  const HybridSystem* backward_system() const { return backward ? &*backward : nullptr; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(key + ": not a finite number: '" + t + "'");
  return v;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(key + ": not an integer: '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline Vector parse_vector(const std::string& key, const std::string& text) {
  const std::vector<double> v = parse_list(key, text);
  if (v.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError(key + ": too many components");
  return vec(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key + ": expected true or false");
}

inline int parse_count(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < 0 || v > 1000000000LL) throw ConfigError(key + ": out of range");
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

inline Box& ensure_box(std::optional<Box>& box) {
  if (!box) box = Box{};
  return *box;
}

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [](auto member) {
      return Setter([member](RunConfig& c, const std::string& k, const std::string& v) {
        member(c) = parse_double(k, v);
      });
    };

    t["system"] = [](RunConfig& c, const std::string&, const std::string& v) { c.system = trim(v); };
    t["ball.gamma"] = real([](RunConfig& c) -> double& { return c.ball.gamma; });
    t["ball.lambda"] = real([](RunConfig& c) -> double& { return c.ball.lambda; });
    t["ball.surface_tolerance"] = real([](RunConfig& c) -> double& { return c.ball.surface_tolerance; });
    t["ball.flow_input"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const std::vector<double> b = parse_list(k, v);
      if (b.size() != 2) throw ConfigError(k + ": expected lower, upper");
      c.ball.flow_u_box = Box{vec({b[0]}), vec({b[1]})};
    };
    t["ball.jump_input"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const std::vector<double> b = parse_list(k, v);
      if (b.size() != 2) throw ConfigError(k + ": expected lower, upper");
      c.ball.jump_u_box = Box{vec({b[0]}), vec({b[1]})};
    };
    t["ball.state_lower"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.ball.state_box.lower = parse_vector(k, v);
    };
    t["ball.state_upper"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.ball.state_box.upper = parse_vector(k, v);
    };
    t["integrator.dim"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.integrator.dim = parse_count(k, v);
    };
    t["integrator.input_bound"] = real([](RunConfig& c) -> double& { return c.integrator.input_bound; });
    t["integrator.state_bound"] = real([](RunConfig& c) -> double& { return c.integrator.state_bound; });

    auto point = [](std::optional<Box> RunConfig::*member) {
      return Setter([member](RunConfig& c, const std::string& k, const std::string& v) {
        const Vector x = parse_vector(k, v);
        c.*member = Box{x, x};
      });
    };
    auto bound = [](std::optional<Box> RunConfig::*member, bool upper) {
      return Setter([member, upper](RunConfig& c, const std::string& k, const std::string& v) {
        Box& b = ensure_box(c.*member);
        (upper ? b.upper : b.lower) = parse_vector(k, v);
      });
    };
    t["problem.x0"] = point(&RunConfig::initial);
    t["problem.x0_lower"] = bound(&RunConfig::initial, false);
    t["problem.x0_upper"] = bound(&RunConfig::initial, true);
    t["problem.xf"] = point(&RunConfig::final);
    t["problem.xf_lower"] = bound(&RunConfig::final, false);
    t["problem.xf_upper"] = bound(&RunConfig::final, true);
    t["problem.safe_input_lower"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.safe_input_lower = parse_vector(k, v);
    };
    t["problem.safe_input_upper"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.safe_input_upper = parse_vector(k, v);
    };

    t["planner.mode"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const std::optional<PlannerMode> m = parse_mode(trim(v));
      if (!m) throw ConfigError(k + ": unknown mode '" + trim(v) + "'");
      c.planner.mode = *m;
    };
    t["planner.p_flow_forward"] = real([](RunConfig& c) -> double& { return c.planner.p_flow_forward; });
    t["planner.p_flow_backward"] = real([](RunConfig& c) -> double& { return c.planner.p_flow_backward; });
    t["planner.max_iterations"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.planner.max_iterations = parse_integer(k, v);
    };
    t["planner.delta"] = real([](RunConfig& c) -> double& { return c.planner.delta; });
    t["planner.jump_tolerance"] = real([](RunConfig& c) -> double& { return c.planner.jump_tolerance; });
    t["planner.glue_tolerance"] = real([](RunConfig& c) -> double& { return c.planner.glue_tolerance; });
    t["planner.initial_samples"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.planner.initial_samples = parse_count(k, v);
    };
    t["planner.final_samples"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.planner.final_samples = parse_count(k, v);
    };
    t["planner.inflate_flow_forward"] = real([](RunConfig& c) -> double& { return c.planner.inflate_flow_forward; });
    t["planner.inflate_jump_forward"] = real([](RunConfig& c) -> double& { return c.planner.inflate_jump_forward; });
    t["planner.inflate_flow_backward"] = real([](RunConfig& c) -> double& { return c.planner.inflate_flow_backward; });
    t["planner.inflate_jump_backward"] = real([](RunConfig& c) -> double& { return c.planner.inflate_jump_backward; });
    t["planner.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const long long s = parse_integer(k, v);
      if (s < 0) throw ConfigError(k + ": must be nonnegative");
      c.planner.seed = static_cast<std::uint64_t>(s);
    };
    t["planner.validate_edges"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.planner.validate_edges = parse_bool(k, v);
    };
    t["planner.flow_input_lower"] = bound(&RunConfig::flow_inputs, false);
    t["planner.flow_input_upper"] = bound(&RunConfig::flow_inputs, true);
    t["planner.jump_input_lower"] = bound(&RunConfig::jump_inputs, false);
    t["planner.jump_input_upper"] = bound(&RunConfig::jump_inputs, true);

    t["propagation.step"] = real([](RunConfig& c) -> double& { return c.planner.propagation.step; });
    t["propagation.record_stride"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.planner.propagation.record_stride = parse_count(k, v);
    };
    t["propagation.max_flow_duration"] =
        real([](RunConfig& c) -> double& { return c.planner.propagation.max_flow_duration; });
    t["propagation.boundary_time_tolerance"] =
        real([](RunConfig& c) -> double& { return c.planner.propagation.boundary_time_tolerance; });
    t["propagation.min_flow_duration"] =
        real([](RunConfig& c) -> double& { return c.planner.propagation.min_flow_duration; });

    t["validation.flow_relative"] = real([](RunConfig& c) -> double& { return c.planner.tolerances.flow_relative; });
    t["validation.jump"] = real([](RunConfig& c) -> double& { return c.planner.tolerances.jump; });
    t["validation.membership_slack"] =
        real([](RunConfig& c) -> double& { return c.planner.tolerances.membership_slack; });

    t["sweep.deltas"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_deltas = parse_list(k, v); };
    t["sweep.trials"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_trials = parse_count(k, v); };
    t["benchmark.trials"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.benchmark_trials = parse_count(k, v);
    };
    return t;
  }();
  return table;
}

inline std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": missing key");
  if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
  return {std::move(key), std::move(value)};
}

}  // namespace detail

/// Names of all accepted keys, sorted.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, setter] : detail::config_setters()) keys.push_back(k);
  return keys;
}

inline RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
  std::map<std::string, std::string> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    auto [key, value] = detail::split_assignment(line, "line " + std::to_string(number));
    if (!detail::config_setters().count(key)) throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    if (!values.emplace(key, value).second) throw ConfigError("line " + std::to_string(number) + ": repeated key '" + key + "'");
  }
  for (const std::string& o : overrides) {
    auto [key, value] = detail::split_assignment(o, "override '" + o + "'");
    if (!detail::config_setters().count(key)) throw ConfigError("override: unknown key '" + key + "'");
    values[key] = value;
  }

  for (const char* set : {"problem.x0", "problem.xf"}) {
    const std::string name = set;
    if (values.count(name) && (values.count(name + "_lower") || values.count(name + "_upper")))
      throw ConfigError(name + " cannot be combined with " + name + "_lower/_upper");
  }

  RunConfig config;
  for (const auto& [key, value] : values) detail::config_setters().at(key)(config, key, value);
  return config;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, overrides);
}

/// Forward system named by `config.system`.
inline HybridSystem make_system(const RunConfig& config) {
  if (config.system == "bouncing_ball") return bouncing_ball_system(config.ball);
  if (config.system == "integrator_no_jumps") return integrator_system(config.integrator);
  throw ConfigError("unknown system '" + config.system + "'");
}

/// Library boxes the system's own parameters imply.
inline InputLibrary default_input_library(const RunConfig& config) {
  if (config.system == "bouncing_ball") return {config.ball.flow_u_box, config.ball.jump_u_box};
  const Vector b = Vector::Constant(config.integrator.dim, config.integrator.input_bound);
  return {Box{-b, b}, Box{-b, b}};
}

inline UnsafeSet make_unsafe_set(const RunConfig& config, int input_dim) {
  if (!config.safe_input_lower && !config.safe_input_upper) return {};
  if (!config.safe_input_lower || !config.safe_input_upper)
    throw ConfigError("problem.safe_input_lower and problem.safe_input_upper must be given together");
  const Vector lo = *config.safe_input_lower;
  const Vector hi = *config.safe_input_upper;
  if (lo.size() != input_dim || hi.size() != input_dim) throw ConfigError("safe input bounds: dimension mismatch");
  return [lo, hi](const Vector&, const Vector& u) {
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (u[i] <= lo[i] || u[i] >= hi[i]) return true;
    return false;
  };
}

inline Scenario build_scenario(const RunConfig& config) {
  Scenario s;
  try {
    s.problem.system = make_system(config);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const HybridSystem& H = s.problem.system;

  auto check_box = [&](const std::optional<Box>& b, const char* name) {
    if (!b) throw ConfigError(std::string(name) + " is required");
    if (b->lower.size() != H.state_dim || b->upper.size() != H.state_dim)
      throw ConfigError(std::string(name) + ": dimension mismatch with the system state");
    if (b->empty()) throw ConfigError(std::string(name) + ": empty box");
    return *b;
  };
  s.problem.initial = check_box(config.initial, "problem.x0");
  s.problem.final = check_box(config.final, "problem.xf");
  s.problem.unsafe = make_unsafe_set(config, H.input_dim);

  s.planner = config.planner;
  const InputLibrary defaults = default_input_library(config);
  s.planner.forward_library = defaults;
  if (config.flow_inputs) s.planner.forward_library.flow_inputs = *config.flow_inputs;
  if (config.jump_inputs) s.planner.forward_library.jump_inputs = *config.jump_inputs;
  for (const Box* b : {&s.planner.forward_library.flow_inputs, &s.planner.forward_library.jump_inputs})
    if (b->lower.size() != H.input_dim || b->upper.size() != H.input_dim || b->empty())
      throw ConfigError("input library boxes must be nonempty and match the input dimension");
  s.planner.backward_library = s.planner.forward_library;
  try {
    s.planner.check();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  if (s.planner.mode != PlannerMode::hyrrt) {
    try {
      s.backward = make_backward_system(H);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  for (double d : config.sweep_deltas)
    if (!(d > 0.0)) throw ConfigError("sweep.deltas entries must be positive");
  return s;
}

}  // namespace hyrrt
