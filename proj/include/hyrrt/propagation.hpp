#pragma once

#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/hybrid_time.hpp>
#include <hyrrt/types.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace hyrrt {

using UnsafeSet = std::function<bool(const Vector& x, const Vector& u)>;

struct PropagationConfig {
  double step = 1e-3;
  /// Every `record_stride`-th integration node is stored, plus interval ends.
  int record_stride = 10;
  /// Upper bound on the duration of one flow extension.
  double max_flow_duration = 2.0;
  /// Flow-set exits are bisected until the bracket is narrower than this.
  double boundary_time_tolerance = 1e-12;
  /// Flow extensions shorter than this count as failed.
  double min_flow_duration = 1e-9;
};

/// Input values an extension may draw from.
struct InputLibrary {
  Box flow_inputs;
  Box jump_inputs;
};

enum class StopReason { duration_elapsed, left_flow_set, entered_unsafe };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::duration_elapsed: return "duration_elapsed";
    case StopReason::left_flow_set: return "left_flow_set";
    case StopReason::entered_unsafe: return "entered_unsafe";
  }
  return "?";
}

struct FlowSegmentResult {
  ArcSegment samples;
  StopReason stop_reason = StopReason::duration_elapsed;
  int state_dim = 0;

  double duration() const { return samples.times.back(); }
  Vector final_state() const {
    Vector x(state_dim);
    const std::size_t base = samples.values.size() - static_cast<std::size_t>(state_dim);
    for (int i = 0; i < state_dim; ++i) x[i] = samples.values[base + static_cast<std::size_t>(i)];
    return x;
  }
};

inline Vector rk4_step(const FlowMap& f, const Vector& x, const Vector& u, double h) {
  const Vector k1 = f(x, u);
  const Vector k2 = f(x + 0.5 * h * k1, u);
  const Vector k3 = f(x + 0.5 * h * k2, u);
  const Vector k4 = f(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

inline void append(ArcSegment& seg, double t, const Vector& x) {
  seg.times.push_back(t);
  seg.values.insert(seg.values.end(), x.data(), x.data() + x.size());
}

inline void check_finite(const Vector& x) {
  if (!all_finite(x)) throw Error("numerical blow-up");
}

}  // namespace detail

/**
 * Fixed-step RK4 under a constant input, for at most `max_duration` seconds.
 * Stops early when a step would leave C (the exit is bisected and the last
 * point inside C is kept) or when (x, u) enters the unsafe set.
 */
inline FlowSegmentResult integrate_flow(const HybridSystem& system, const Vector& x0, const Vector& u,
                                        double max_duration, const UnsafeSet& unsafe,
                                        const PropagationConfig& config) {
  if (!(config.step > 0.0)) throw Error("integration step must be positive");
  if (config.record_stride < 1) throw Error("record stride must be at least 1");
  detail::check_finite(x0);

  FlowSegmentResult out;
  out.state_dim = system.state_dim;
  detail::append(out.samples, 0.0, x0);
  if (unsafe && unsafe(x0, u)) {
    out.stop_reason = StopReason::entered_unsafe;
    return out;
  }

  Vector x = x0;
  double t = 0.0;
  bool recorded = true;
  long long k = 0;
  auto finish = [&](StopReason reason) {
    if (!recorded) detail::append(out.samples, t, x);
    out.stop_reason = reason;
    return out;
  };

  while (t < max_duration) {
    ++k;
    double t_next = static_cast<double>(k) * config.step;
    if (t_next >= max_duration) t_next = max_duration;
    const double h = t_next - t;
    Vector x_next = rk4_step(system.flow_map, x, u, h);
    detail::check_finite(x_next);

    if (!system.flow_set(x_next, u, 0.0)) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > config.boundary_time_tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (system.flow_set(rk4_step(system.flow_map, x, u, mid), u, 0.0)) lo = mid;
        else hi = mid;
      }
      if (lo > 0.0 && t + lo > t) {
        x = rk4_step(system.flow_map, x, u, lo);
        t += lo;
        recorded = false;
      }
      return finish(StopReason::left_flow_set);
    }

    x = x_next;
    t = t_next;
    recorded = false;
    if (unsafe && unsafe(x, u)) return finish(StopReason::entered_unsafe);
    if (k % config.record_stride == 0) {
      detail::append(out.samples, t, x);
      recorded = true;
    }
  }
  return finish(StopReason::duration_elapsed);
}

inline Vector apply_jump(const HybridSystem& system, const Vector& x, const Vector& u, std::size_t selector) {
  if (!system.jump_set(x, u, 0.0)) throw Error("jump infeasible");
  const std::vector<Vector> image = system.jump_map(x, u);
  if (image.empty()) throw Error("jump map returned no successor");
  const Vector next = image[selector % image.size()];
  detail::check_finite(next);
  return next;
}

/// Random selection among the successors of a set-valued jump map.
inline Vector apply_jump(const HybridSystem& system, const Vector& x, const Vector& u, Rng& rng) {
  if (!system.jump_set(x, u, 0.0)) throw Error("jump infeasible");
  const std::vector<Vector> image = system.jump_map(x, u);
  if (image.empty()) throw Error("jump map returned no successor");
  std::size_t pick = 0;
  if (image.size() > 1) pick = std::uniform_int_distribution<std::size_t>(0, image.size() - 1)(rng);
  detail::check_finite(image[pick]);
  return image[pick];
}

enum class Regime { flow, jump };

struct NewState {
  SolutionPair pair;
  Vector state;
};

namespace detail {

inline std::optional<Vector> draw_flow_input(const InputSet& feasible, const Box& library, Rng& rng) {
  if (feasible.box) {
    const Box allowed = library.intersect(*feasible.box);
    if (!allowed.empty()) return allowed.sample(rng);
  }
  std::vector<Vector> inside;
  for (const Vector& c : feasible.candidates)
    if (library.contains(c)) inside.push_back(c);
  if (inside.empty()) return std::nullopt;
  return inside[std::uniform_int_distribution<std::size_t>(0, inside.size() - 1)(rng)];
}

}  // namespace detail

/**
 * One random propagation step from x_cur.
 *
 * Flow: a constant input from the library box restricted to the feasible
 * inputs at x_cur, and a duration uniform on (0, max_flow_duration]. Fails if
 * the segment is too short or touches the unsafe set.
 *
 * Jump: an input from the library jump box; fails unless (x_cur, u) is in D
 * and outside the unsafe set.
 */
inline std::optional<NewState> new_state(const Vector& x_cur, const InputLibrary& library, const HybridSystem& system,
                                         const UnsafeSet& unsafe, Regime regime, Rng& rng,
                                         const PropagationConfig& config) {
  if (regime == Regime::flow) {
    const InputSet feasible = feasible_flow_inputs(system, x_cur);
    if (feasible.empty()) return std::nullopt;
    const std::optional<Vector> u = detail::draw_flow_input(feasible, library.flow_inputs, rng);
    if (!u) return std::nullopt;
    const double duration = config.max_flow_duration * (1.0 - uniform01(rng));
    FlowSegmentResult seg = integrate_flow(system, x_cur, *u, duration, unsafe, config);
    if (seg.stop_reason == StopReason::entered_unsafe) return std::nullopt;
    if (!(seg.duration() > config.min_flow_duration)) return std::nullopt;
    Vector end = seg.final_state();
    return NewState{flow_pair(std::move(seg.samples), system.state_dim, *u), std::move(end)};
  }

  if (!system.has_jumps()) return std::nullopt;
  const Vector u = library.jump_inputs.sample(rng);
  if (!system.jump_set(x_cur, u, 0.0)) return std::nullopt;
  if (unsafe && unsafe(x_cur, u)) return std::nullopt;
  Vector next = apply_jump(system, x_cur, u, rng);
  return NewState{jump_pair(x_cur, u, next), std::move(next)};
}

struct ReconstructionResult {
  /// The reconstructed arc paired with the input it was driven by.
  SolutionPair pair;
  /// Points where (x, u) left C during flow or missed D at a jump.
  std::vector<MembershipViolation> membership_violations;
};

/**
 * Re-simulates the forward system from `x_start` under `input`, flowing for
 * exactly the length of each flow interval and jumping at each jump instant.
 * The flow and jump sets are not enforced; membership is logged at every
 * stored node and jump. The result has the same domain as `input`.
 */
inline ReconstructionResult reconstruct_backward_plan(const HybridSystem& forward, const HybridInput& input,
                                                      const Vector& x_start, const PropagationConfig& config) {
  if (input.domain().empty()) throw Error("reconstruction input has an empty domain");
  if (!(config.step > 0.0)) throw Error("integration step must be positive");
  if (x_start.size() != forward.state_dim || input.input_dim() != forward.input_dim)
    throw Error("dimension mismatch between reconstruction input and system");
  detail::check_finite(x_start);

  ReconstructionResult out;
  std::vector<ArcSegment> segments;
  Vector x = x_start;
  const HybridTimeDomain& dom = input.domain();
  const int stride = std::max(1, config.record_stride);

  for (const FlowInterval& iv : dom.segments()) {
    const int j = iv.j;
    const InputSegment& in = input.segments()[static_cast<std::size_t>(j)];
    ArcSegment seg;
    detail::append(seg, iv.t_start, x);

    if (iv.has_interior()) {
      for (const InputPiece& piece : in.flow) {
        const double length = piece.t_to - piece.t_from;
        const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(length / config.step)));
        const double h = length / static_cast<double>(steps);
        if (!forward.flow_set(x, piece.u, 0.0))
          out.membership_violations.push_back({piece.t_from, j, MembershipViolation::Kind::flow});
        for (long long k = 1; k <= steps; ++k) {
          x = rk4_step(forward.flow_map, x, piece.u, h);
          detail::check_finite(x);
          if (k % stride != 0 && k != steps) continue;
          const double t = k == steps ? piece.t_to : piece.t_from + static_cast<double>(k) * h;
          detail::append(seg, t, x);
          if (!forward.flow_set(x, piece.u, 0.0))
            out.membership_violations.push_back({t, j, MembershipViolation::Kind::flow});
        }
      }
    }
    segments.push_back(std::move(seg));

    if (in.jump) {
      if (!forward.jump_set(x, *in.jump, 0.0))
        out.membership_violations.push_back({iv.t_end, j, MembershipViolation::Kind::jump});
      const std::vector<Vector> image = forward.jump_map(x, *in.jump);
      if (image.empty()) throw Error("jump map returned no successor");
      x = image.front();
      detail::check_finite(x);
    }
  }

  HybridArc arc(forward.state_dim, std::move(segments));
  out.pair = SolutionPair(std::move(arc), input);
  return out;
}

}  // namespace hyrrt
