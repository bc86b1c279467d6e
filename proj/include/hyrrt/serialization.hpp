#pragma once

/**
 * @file serialization.hpp
 * @brief JSON and CSV forms of solution pairs and motion plans.
 *
 * Pair layout (fields in this order):
 *
 *   {"n": 2, "m": 1, "segments": [
 *      {"j": 0, "samples": [[t, x1, x2], ...],
 *       "flow_input": [[t_from, t_to, u1], ...],
 *       "jump_input": [u1] | null}, ...]}
 *
 * Doubles are written in shortest round-trip form, so reading a file back
 * reproduces every value exactly and equal plans give identical bytes.
 */

#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/hybrid_time.hpp>
#include <hyrrt/planner.hpp>
#include <hyrrt/types.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hyrrt {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw Error("cannot serialize a non-finite value");
    a.push_back(v[i]);
  }
  return a;
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) throw Error(std::string("plan file: expected a number in ") + what);
  return j.get<double>();
}

inline Vector vector_from(const Json& a, std::size_t offset, int dim, const char* what) {
  if (!a.is_array() || a.size() != offset + static_cast<std::size_t>(dim))
    throw Error(std::string("plan file: wrong row length in ") + what);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = number(a[offset + static_cast<std::size_t>(i)], what);
  return v;
}

inline const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(std::string("plan file: missing field '") + key + "'");
  return obj[key];
}

}  // namespace detail

inline Json solution_pair_json(const SolutionPair& pair) {
  Json out;
  out["n"] = pair.state_dim();
  out["m"] = pair.input_dim();
  Json segments = Json::array();
  const int n = pair.state_dim();
  for (int j = 0; j <= pair.arc.jumps(); ++j) {
    const ArcSegment& seg = pair.arc.segments()[static_cast<std::size_t>(j)];
    const InputSegment& in = pair.input.segments()[static_cast<std::size_t>(j)];
    Json s;
    s["j"] = j;
    Json samples = Json::array();
    for (std::size_t k = 0; k < seg.times.size(); ++k) {
      Json row = Json::array({seg.times[k]});
      for (int i = 0; i < n; ++i) {
        const double x = seg.values[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
        if (!std::isfinite(x)) throw Error("cannot serialize a non-finite value");
        row.push_back(x);
      }
      samples.push_back(std::move(row));
    }
    s["samples"] = std::move(samples);
    Json flow = Json::array();
    for (const InputPiece& p : in.flow) {
      Json row = Json::array({p.t_from, p.t_to});
      for (const auto& u : detail::vector_json(p.u)) row.push_back(u);
      flow.push_back(std::move(row));
    }
    s["flow_input"] = std::move(flow);
    s["jump_input"] = in.jump ? detail::vector_json(*in.jump) : Json(nullptr);
    segments.push_back(std::move(s));
  }
  out["segments"] = std::move(segments);
  return out;
}

/// Rebuilds a pair; domain and input consistency are re-checked on construction.
inline SolutionPair solution_pair_from_json(const Json& in) {
  const Json& jn = detail::field(in, "n");
  const Json& jm = detail::field(in, "m");
  if (!jn.is_number_integer() || !jm.is_number_integer()) throw Error("plan file: 'n' and 'm' must be integers");
  const int n = jn.get<int>();
  const int m = jm.get<int>();
  if (n <= 0 || n > kMaxDim || m <= 0 || m > kMaxDim) throw Error("plan file: dimensions out of range");
  const Json& segs = detail::field(in, "segments");
  if (!segs.is_array() || segs.empty()) throw Error("plan file: 'segments' must be a nonempty array");

  std::vector<ArcSegment> arc_segments;
  std::vector<InputSegment> input_segments;
  for (std::size_t j = 0; j < segs.size(); ++j) {
    const Json& s = segs[j];
    const Json& jj = detail::field(s, "j");
    if (!jj.is_number_integer() || jj.get<std::size_t>() != j) throw Error("plan file: segments out of order");
    ArcSegment seg;
    const Json& samples = detail::field(s, "samples");
    if (!samples.is_array() || samples.empty()) throw Error("plan file: empty sample list");
    for (const Json& row : samples) {
      const Vector x = detail::vector_from(row, 1, n, "samples");
      seg.times.push_back(detail::number(row[0], "samples"));
      seg.values.insert(seg.values.end(), x.data(), x.data() + n);
    }
    arc_segments.push_back(std::move(seg));

    InputSegment is;
    const Json& flow = detail::field(s, "flow_input");
    if (!flow.is_array()) throw Error("plan file: 'flow_input' must be an array");
    for (const Json& row : flow) {
      const Vector u = detail::vector_from(row, 2, m, "flow_input");
      is.flow.push_back({detail::number(row[0], "flow_input"), detail::number(row[1], "flow_input"), u});
    }
    const Json& jump = detail::field(s, "jump_input");
    if (!jump.is_null()) is.jump = detail::vector_from(jump, 0, m, "jump_input");
    input_segments.push_back(std::move(is));
  }
  HybridArc arc(n, std::move(arc_segments));
  HybridInput input(m, arc.domain(), std::move(input_segments));
  return SolutionPair(std::move(arc), std::move(input));
}

struct PlanMetadata {
  std::string system;
  PlannerMode mode = PlannerMode::hyrrt_connect;
  std::uint64_t seed = 0;
};

/// plan.json contents. Wall time is left out so that reruns are byte-identical.
inline Json motion_plan_json(const MotionPlan& plan, const PlanMetadata& meta) {
  Json out;
  out["system"] = meta.system;
  out["mode"] = to_string(meta.mode);
  out["seed"] = meta.seed;
  out["provenance"] = to_string(plan.provenance);
  out["endpoint_distance"] = plan.endpoint_distance;
  Json stats;
  stats["iterations"] = plan.stats.iterations;
  stats["vertices_forward"] = plan.stats.vertices_forward;
  stats["vertices_backward"] = plan.stats.vertices_backward;
  stats["advanced_forward"] = plan.stats.advanced_forward;
  stats["trapped_forward"] = plan.stats.trapped_forward;
  stats["advanced_backward"] = plan.stats.advanced_backward;
  stats["trapped_backward"] = plan.stats.trapped_backward;
  out["stats"] = std::move(stats);
  out["u_star"] = plan.u_star ? detail::vector_json(*plan.u_star) : Json(nullptr);
  if (plan.reconstruction) {
    Json rec;
    rec["match_distance"] = plan.reconstruction->match_distance;
    rec["endpoint_deviation"] = plan.reconstruction->endpoint_deviation;
    Json log = Json::array();
    for (const MembershipViolation& v : plan.reconstruction->membership_violations) {
      Json e;
      e["t"] = v.t;
      e["j"] = v.j;
      e["kind"] = to_string(v.kind);
      log.push_back(std::move(e));
    }
    rec["membership_violations"] = std::move(log);
    out["reconstruction"] = std::move(rec);
  } else {
    out["reconstruction"] = nullptr;
  }
  out["plan"] = solution_pair_json(plan.pair);
  out["forward"] = solution_pair_json(plan.forward);
  out["backward"] = plan.backward.empty() ? Json(nullptr) : solution_pair_json(plan.backward);
  return out;
}

/// One top-level field per line, values compact.
inline std::string dump_json(const Json& j) {
  if (!j.is_object()) return j.dump() + "\n";
  std::string out = "{\n";
  std::size_t i = 0;
  for (const auto& [key, value] : j.items()) {
    out += " " + Json(key).dump() + ": " + value.dump();
    out += ++i < j.size() ? ",\n" : "\n";
  }
  return out + "}\n";
}

struct LoadedPlan {
  std::string system;
  std::string provenance;
  SolutionPair pair;
  std::vector<MembershipViolation> excused;
};

namespace detail {

inline LoadedPlan load_plan(const Json& j) {
  LoadedPlan out;
  const Json& system = detail::field(j, "system");
  const Json& provenance = detail::field(j, "provenance");
  if (!system.is_string() || !provenance.is_string()) throw Error("plan file: 'system' and 'provenance' must be strings");
  out.system = system.get<std::string>();
  out.provenance = provenance.get<std::string>();
  out.pair = solution_pair_from_json(detail::field(j, "plan"));
  if (j.contains("reconstruction") && !j["reconstruction"].is_null()) {
    const Json& log = detail::field(j["reconstruction"], "membership_violations");
    if (!log.is_array()) throw Error("plan file: 'membership_violations' must be an array");
    for (const Json& e : log) {
      MembershipViolation v;
      v.t = detail::number(detail::field(e, "t"), "membership_violations");
      v.j = detail::field(e, "j").get<int>();
      const Json& kind = detail::field(e, "kind");
      if (kind == "flow") v.kind = MembershipViolation::Kind::flow;
      else if (kind == "jump") v.kind = MembershipViolation::Kind::jump;
      else throw Error("plan file: unknown violation kind");
      out.excused.push_back(v);
    }
  }
  return out;
}

}  // namespace detail

inline LoadedPlan parse_plan_json(const std::string& text) {
  try {
    return detail::load_plan(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(std::string("plan file: ") + e.what());
  }
}

inline LoadedPlan read_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open plan file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan_json(ss.str());
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// One row per stored sample: t, j, x..., u... where u is v(t, j); the input
/// columns are empty where the input is undefined.
inline std::string solution_pair_csv(const SolutionPair& pair) {
  std::ostringstream out;
  const int n = pair.state_dim();
  const int m = pair.input_dim();
  out << "t,j";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << '\n';
  for (int j = 0; j <= pair.arc.jumps(); ++j) {
    const ArcSegment& seg = pair.arc.segments()[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < seg.times.size(); ++k) {
      const double t = seg.times[k];
      out << format_number(t) << ',' << j;
      for (int i = 0; i < n; ++i)
        out << ',' << format_number(seg.values[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]);
      const std::optional<Vector> u = pair.input.value(t, j);
      for (int i = 0; i < m; ++i) {
        out << ',';
        if (u) out << format_number((*u)[i]);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace hyrrt
