#pragma once

#include <hyrrt/hybrid_time.hpp>
#include <hyrrt/types.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace hyrrt {

enum class Direction { forward, backward };

/// Membership of (x, u) in a set, inflated by `slack`. slack == 0 is exact.
using PairPredicate = std::function<bool(const Vector& x, const Vector& u, double slack)>;
using StatePredicate = std::function<bool(const Vector& x, double slack)>;
using StateSampler = std::function<Vector(Rng&)>;
using FlowMap = std::function<Vector(const Vector& x, const Vector& u)>;
/// Set-valued jump map; forward systems return exactly one element.
using JumpMap = std::function<std::vector<Vector>(const Vector& x, const Vector& u)>;

/// Description of {u : (x, u) in C}: a box, a finite candidate list, or nothing.
struct InputSet {
  std::optional<Box> box;
  std::vector<Vector> candidates;

  bool empty() const { return (!box || box->empty()) && candidates.empty(); }
};

/// Pieces a forward system needs to run backward in time. They are
/// author-supplied because inverting a jump map is not possible in general.
struct BackwardJumpModel {
  /// {z : x = g(z, u), (z, u) in D}
  JumpMap preimage;
  /// State projection of the backward jump set.
  StatePredicate jump_states;
  /// Sampler over that projection; empty when it has no members.
  StateSampler sample_jump_state;
};

/// Solves x_bw = g(x_fw, u), (x_fw, u) in D for u. Safety is checked by the caller.
using JumpConnectionSolver = std::function<std::optional<Vector>(const Vector& x_fw, const Vector& x_bw)>;

struct HybridSystem {
  std::string id;
  int state_dim = 0;
  int input_dim = 0;
  Direction direction = Direction::forward;

  FlowMap flow_map;
  PairPredicate flow_set;
  JumpMap jump_map;
  PairPredicate jump_set;

  StatePredicate flow_states;
  StatePredicate jump_states;
  StateSampler sample_flow_state;
  /// Empty when the jump set has no members (pure flow systems).
  StateSampler sample_jump_state;
  std::function<InputSet(const Vector& x)> feasible_flow_inputs;

  std::optional<BackwardJumpModel> backward;
  JumpConnectionSolver jump_connection;

  bool has_jumps() const { return static_cast<bool>(sample_jump_state); }
};

/// Backward-in-time system: same flow set, negated flow map, and the jump
/// map/set built from the forward map's preimages.
inline HybridSystem make_backward_system(const HybridSystem& fw) {
  if (fw.direction != Direction::forward) throw Error("backward system requires a forward system");
  if (!fw.backward || !fw.backward->preimage) throw Error("backward jump map unavailable");

  HybridSystem bw;
  bw.id = fw.id + "/backward";
  bw.state_dim = fw.state_dim;
  bw.input_dim = fw.input_dim;
  bw.direction = Direction::backward;
  bw.flow_set = fw.flow_set;
  bw.flow_map = [f = fw.flow_map](const Vector& x, const Vector& u) -> Vector { return -f(x, u); };
  bw.flow_states = fw.flow_states;
  bw.sample_flow_state = fw.sample_flow_state;
  bw.feasible_flow_inputs = fw.feasible_flow_inputs;

  const JumpMap preimage = fw.backward->preimage;
  bw.jump_map = preimage;
  bw.jump_set = [preimage](const Vector& x, const Vector& u, double) { return !preimage(x, u).empty(); };
  bw.jump_states = fw.backward->jump_states;
  bw.sample_jump_state = fw.backward->sample_jump_state;
  return bw;
}

inline InputSet feasible_flow_inputs(const HybridSystem& system, const Vector& x) {
  if (!system.flow_states(x, 0.0) || !system.feasible_flow_inputs) return {};
  return system.feasible_flow_inputs(x);
}

inline PairMembership exact_flow_set(const HybridSystem& system) {
  return [set = system.flow_set](const Vector& x, const Vector& u) { return set(x, u, 0.0); };
}

// ---------------------------------------------------------------------------
// Solution-pair validation

struct ValidationTolerances {
  /// Flow residual bound is flow_relative * (1 + |f|) at each interval midpoint.
  double flow_relative = 1e-3;
  double jump = 1e-9;
  double membership_slack = 1e-7;
};

struct MembershipViolation {
  enum class Kind { flow, jump };
  double t = 0.0;
  int j = 0;
  Kind kind = Kind::flow;
};

inline const char* to_string(MembershipViolation::Kind kind) {
  return kind == MembershipViolation::Kind::flow ? "flow" : "jump";
}

struct CheckResult {
  CheckResult(std::string check_name = {}) : name(std::move(check_name)) {}

  std::string name;
  bool passed = true;
  /// Largest residual for residual checks; number of failing points for membership checks.
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t excused = 0;
  std::optional<HybridTime> first_failure;

  void fail(double t, int j) {
    passed = false;
    if (!first_failure) first_failure = HybridTime{t, j};
  }
};

struct ValidationReport {
  bool valid = true;
  CheckResult initial{"initial_membership"};
  CheckResult flow_membership{"flow_set_membership"};
  CheckResult flow_residual{"flow_map_residual"};
  CheckResult jump_membership{"jump_set_membership"};
  CheckResult jump_residual{"jump_map_residual"};
  ValidationTolerances tolerances;

  std::vector<const CheckResult*> checks() const {
    return {&initial, &flow_membership, &flow_residual, &jump_membership, &jump_residual};
  }
};

namespace detail {

inline bool excused(std::span<const MembershipViolation> log, double t, int j, MembershipViolation::Kind kind) {
  return std::any_of(log.begin(), log.end(), [&](const MembershipViolation& v) {
    return v.kind == kind && v.j == j && std::abs(v.t - t) <= 1e-9 * (1.0 + std::abs(t));
  });
}

}  // namespace detail

/**
 * Checks that `pair` is a solution pair to `system`:
 *  - the initial point lies in the closure of C (membership with slack) or in D;
 *  - on every flow interval with nonempty interior, interior samples lie in C
 *    and finite differences of the grid match f at interval midpoints;
 *  - at every jump, (x, u) lies in D and the post-jump state is within
 *    `tol.jump` of g(x, u) (distance to the set for set-valued maps).
 *
 * Membership failures at instants listed in `excused` are counted but do not
 * invalidate the pair; reconstructed plans log such instants.
 */
inline ValidationReport validate_solution_pair(const HybridSystem& system, const SolutionPair& pair,
                                               const ValidationTolerances& tol = {},
                                               std::span<const MembershipViolation> excused = {}) {
  if (pair.state_dim() != system.state_dim || pair.input_dim() != system.input_dim)
    throw Error("dimension mismatch between solution pair and system");

  ValidationReport report;
  report.tolerances = tol;
  if (pair.empty()) {
    report.valid = false;
    report.initial.fail(0.0, 0);
    return report;
  }

  const HybridTimeDomain dom = pair.domain();
  const int n = pair.state_dim();
  const HybridArc& arc = pair.arc;

  // Initial point.
  {
    const Vector x0 = arc.front();
    const std::optional<Vector> u0 = pair.input.value(0.0, 0);
    bool ok;
    if (u0) {
      ok = system.flow_set(x0, *u0, tol.membership_slack) || system.jump_set(x0, *u0, tol.membership_slack);
    } else {
      ok = system.flow_states(x0, tol.membership_slack) || system.jump_states(x0, tol.membership_slack);
    }
    report.initial.checked = 1;
    if (!ok) {
      report.initial.worst = 1;
      report.initial.fail(0.0, 0);
    }
  }

  for (const FlowInterval& iv : dom.segments()) {
    if (!iv.has_interior()) continue;
    const int j = iv.j;
    const ArcSegment& seg = arc.segments()[static_cast<std::size_t>(j)];
    const std::size_t count = seg.times.size();
    auto state_at = [&](std::size_t k) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x[i] = seg.values[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      return x;
    };

    for (std::size_t k = 1; k + 1 < count; ++k) {
      const double t = seg.times[k];
      const Vector u = *pair.input.flow_value(t, j);
      ++report.flow_membership.checked;
      if (!system.flow_set(state_at(k), u, tol.membership_slack)) {
        if (detail::excused(excused, t, j, MembershipViolation::Kind::flow)) {
          ++report.flow_membership.excused;
        } else {
          report.flow_membership.worst += 1;
          report.flow_membership.fail(t, j);
        }
      }
    }

    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double t0 = seg.times[k];
      const double t1 = seg.times[k + 1];
      const double mid = 0.5 * (t0 + t1);
      const Vector x0 = state_at(k);
      const Vector x1 = state_at(k + 1);
      const Vector xm = 0.5 * (x0 + x1);
      const Vector u = *pair.input.flow_value(mid, j);
      const Vector f = system.flow_map(xm, u);
      const Vector slope = (x1 - x0) / (t1 - t0);
      const double residual = (slope - f).norm() / (1.0 + f.norm());
      ++report.flow_residual.checked;
      report.flow_residual.worst = std::max(report.flow_residual.worst, residual);
      if (!(residual <= tol.flow_relative)) report.flow_residual.fail(mid, j);
    }
  }

  for (int j = 0; j < dom.jumps(); ++j) {
    const double t = dom.segments()[static_cast<std::size_t>(j)].t_end;
    const Vector x = arc.state(j, arc.sample_count(j) - 1);
    const Vector x_next = arc.state(j + 1, 0);
    const Vector u = *pair.input.jump_value(j);

    ++report.jump_membership.checked;
    if (!system.jump_set(x, u, tol.membership_slack)) {
      if (detail::excused(excused, t, j, MembershipViolation::Kind::jump)) {
        ++report.jump_membership.excused;
      } else {
        report.jump_membership.worst += 1;
        report.jump_membership.fail(t, j);
      }
    }

    double distance = std::numeric_limits<double>::infinity();
    for (const Vector& candidate : system.jump_map(x, u)) distance = std::min(distance, (candidate - x_next).norm());
    ++report.jump_residual.checked;
    report.jump_residual.worst = std::max(report.jump_residual.worst, distance);
    if (!(distance <= tol.jump)) report.jump_residual.fail(t, j);
  }

  report.valid = true;
  for (const CheckResult* c : report.checks()) report.valid = report.valid && c->passed;
  return report;
}

// ---------------------------------------------------------------------------
// Lipschitz constant estimation by sampling

struct LipschitzRegion {
  Box states;
  Box inputs;
};

struct LipschitzEstimates {
  double kx_flow = 0.0;
  double ku_flow = 0.0;
  double kx_jump = 0.0;
  double ku_jump = 0.0;
  std::size_t flow_pairs = 0;
  std::size_t jump_pairs = 0;
  LipschitzRegion region;
};

namespace detail {

inline double ratio(const Vector& num, double den) { return den > 0.0 ? num.norm() / den : 0.0; }

}  // namespace detail

/// Sampled Kx, Ku for f over pairs with both points in C.
inline std::pair<double, double> estimate_flow_lipschitz(const HybridSystem& system, const LipschitzRegion& region,
                                                         std::size_t pairs, Rng& rng, std::size_t* used = nullptr) {
  if (pairs == 0 || region.states.empty() || region.inputs.empty()) throw Error("empty Lipschitz sampling region");
  double kx = 0.0;
  double ku = 0.0;
  std::size_t found = 0;
  const std::size_t attempts = 100 * pairs;
  for (std::size_t a = 0; a < attempts && found < pairs; ++a) {
    const Vector x0 = region.states.sample(rng);
    const Vector x1 = region.states.sample(rng);
    const Vector u0 = region.inputs.sample(rng);
    const Vector u1 = region.inputs.sample(rng);
    if (!system.flow_set(x0, u0, 0.0) || !system.flow_set(x1, u0, 0.0) || !system.flow_set(x0, u1, 0.0)) continue;
    ++found;
    const Vector f00 = system.flow_map(x0, u0);
    kx = std::max(kx, detail::ratio(f00 - system.flow_map(x1, u0), (x0 - x1).norm()));
    ku = std::max(ku, detail::ratio(f00 - system.flow_map(x0, u1), (u0 - u1).norm()));
  }
  if (found == 0) throw Error("flow set has no members in the sampling region");
  if (used) *used = found;
  return {kx, ku};
}

/// Sampled Kx, Ku for g over pairs in D. States come from the jump-state
/// sampler (D is often measure-zero in the state box) filtered to the region.
inline std::pair<double, double> estimate_jump_lipschitz(const HybridSystem& system, const LipschitzRegion& region,
                                                         std::size_t pairs, Rng& rng, std::size_t* used = nullptr) {
  if (pairs == 0 || region.states.empty() || region.inputs.empty()) throw Error("empty Lipschitz sampling region");
  if (!system.has_jumps()) throw Error("jump set has no members in the sampling region");
  auto draw = [&](Vector& x, Vector& u) {
    x = system.sample_jump_state(rng);
    u = region.inputs.sample(rng);
    return region.states.contains(x, 1e-9) && system.jump_set(x, u, 0.0);
  };
  double kx = 0.0;
  double ku = 0.0;
  std::size_t found = 0;
  const std::size_t attempts = 100 * pairs;
  for (std::size_t a = 0; a < attempts && found < pairs; ++a) {
    Vector x0, u0, x1, u1;
    if (!draw(x0, u0) || !draw(x1, u1)) continue;
    if (!system.jump_set(x1, u0, 0.0) || !system.jump_set(x0, u1, 0.0)) continue;
    ++found;
    const Vector g00 = system.jump_map(x0, u0).front();
    kx = std::max(kx, detail::ratio(g00 - system.jump_map(x1, u0).front(), (x0 - x1).norm()));
    ku = std::max(ku, detail::ratio(g00 - system.jump_map(x0, u1).front(), (u0 - u1).norm()));
  }
  if (found == 0) throw Error("jump set has no members in the sampling region");
  if (used) *used = found;
  return {kx, ku};
}

inline LipschitzEstimates estimate_lipschitz_constants(const HybridSystem& system, const LipschitzRegion& region,
                                                       std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  LipschitzEstimates out;
  out.region = region;
  std::tie(out.kx_flow, out.ku_flow) = estimate_flow_lipschitz(system, region, pairs, rng, &out.flow_pairs);
  std::tie(out.kx_jump, out.ku_jump) = estimate_jump_lipschitz(system, region, pairs, rng, &out.jump_pairs);
  return out;
}

}  // namespace hyrrt
