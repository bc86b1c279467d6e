#pragma once

#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/types.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hyrrt {

namespace detail {

inline Vector rejection_sample(const Box& box, const StatePredicate& member, Rng& rng, int cap = 1000) {
  for (int i = 0; i < cap; ++i) {
    Vector x = box.sample(rng);
    if (member(x, 0.0)) return x;
  }
  throw Error("state sampler exhausted");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Actuated bouncing ball
//
//   x = (height, velocity)
//   flow:  x' = (x2, -gamma)              on C = {x1 >= 0}
//   jump:  x+ = (x1, -lambda x2 + u)      on D = {x1 = 0, x2 <= 0, u >= 0}

struct BouncingBallParams {
  double gamma = 9.81;
  double lambda = 0.8;
  Box flow_u_box{vec({0.0}), vec({5.0})};
  Box jump_u_box{vec({0.0}), vec({5.0})};
  /// Region the flow-state sampler draws from.
  Box state_box{vec({0.0, -20.0}), vec({20.0, 20.0})};
  /// |x1| below this counts as touching the surface.
  double surface_tolerance = 1e-9;

  void check() const {
    if (!(gamma > 0.0)) throw Error("bouncing ball: gamma must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("bouncing ball: lambda must lie in (0, 1)");
    if (flow_u_box.dim() != 1 || jump_u_box.dim() != 1) throw Error("bouncing ball: input boxes must be 1-D");
    if (state_box.dim() != 2 || state_box.empty()) throw Error("bouncing ball: state box must be a nonempty 2-D box");
  }
};

/// Input u* connecting x_fw to x_bw through one jump, if it exists and is safe.
inline std::optional<Vector> bouncing_ball_jump_connection(const Vector& x_fw, const Vector& x_bw,
                                                           const BouncingBallParams& p,
                                                           const std::function<bool(const Vector&, const Vector&)>& unsafe = {}) {
  if (std::abs(x_fw[0]) > p.surface_tolerance || std::abs(x_bw[0]) > p.surface_tolerance) return std::nullopt;
  if (x_fw[1] > 0.0) return std::nullopt;
  const double u_star = x_bw[1] + p.lambda * x_fw[1];
  if (u_star < 0.0) return std::nullopt;
  Vector u = vec({u_star});
  if (unsafe && unsafe(x_fw, u)) return std::nullopt;
  return u;
}

inline HybridSystem bouncing_ball_system(const BouncingBallParams& params = {}) {
  params.check();
  const BouncingBallParams p = params;

  HybridSystem h;
  h.id = "bouncing_ball";
  h.state_dim = 2;
  h.input_dim = 1;
  h.direction = Direction::forward;

  h.flow_map = [p](const Vector& x, const Vector&) { return vec({x[1], -p.gamma}); };
  h.flow_set = [](const Vector& x, const Vector&, double slack) { return x[0] >= -slack; };
  h.jump_map = [p](const Vector& x, const Vector& u) {
    return std::vector<Vector>{vec({x[0], -p.lambda * x[1] + u[0]})};
  };
  h.jump_set = [p](const Vector& x, const Vector& u, double slack) {
    return std::abs(x[0]) <= p.surface_tolerance + slack && x[1] <= slack && u[0] >= -slack;
  };

  h.flow_states = [](const Vector& x, double slack) { return x[0] >= -slack; };
  h.jump_states = [p](const Vector& x, double slack) {
    return std::abs(x[0]) <= p.surface_tolerance + slack && x[1] <= slack;
  };
  h.sample_flow_state = [p, member = h.flow_states](Rng& rng) {
    return detail::rejection_sample(p.state_box, member, rng);
  };
  h.sample_jump_state = [p](Rng& rng) {
    const double hi = std::min(0.0, p.state_box.upper[1]);
    if (p.state_box.lower[1] > hi) throw Error("state sampler exhausted");
    return vec({0.0, std::uniform_real_distribution<double>(p.state_box.lower[1], hi)(rng)});
  };
  h.feasible_flow_inputs = [p](const Vector& x) {
    InputSet s;
    if (x[0] >= 0.0) s.box = p.flow_u_box;
    return s;
  };

  BackwardJumpModel bw;
  bw.preimage = [p](const Vector& x, const Vector& u) {
    std::vector<Vector> out;
    if (std::abs(x[0]) > p.surface_tolerance || u[0] < 0.0) return out;
    const double z2 = (u[0] - x[1]) / p.lambda;
    if (z2 <= 0.0) out.push_back(vec({x[0], z2}));
    return out;
  };
  bw.jump_states = [p](const Vector& x, double slack) {
    return std::abs(x[0]) <= p.surface_tolerance + slack && x[1] >= -slack;
  };
  bw.sample_jump_state = [p](Rng& rng) {
    const double lo = std::max(0.0, p.state_box.lower[1]);
    if (lo > p.state_box.upper[1]) throw Error("state sampler exhausted");
    return vec({0.0, std::uniform_real_distribution<double>(lo, p.state_box.upper[1])(rng)});
  };
  h.backward = bw;

  h.jump_connection = [p](const Vector& x_fw, const Vector& x_bw) {
    return bouncing_ball_jump_connection(x_fw, x_bw, p);
  };
  return h;
}

// ---------------------------------------------------------------------------
// Single-mode integrator x' = u with no jumps. Every motion plan for it is
// purely continuous, so jump connections never apply.

struct IntegratorParams {
  int dim = 2;
  double input_bound = 1.0;
  double state_bound = 10.0;

  void check() const {
    if (dim < 1 || dim > kMaxDim) throw Error("integrator: invalid dimension");
    if (!(input_bound > 0.0) || !(state_bound > 0.0)) throw Error("integrator: bounds must be positive");
  }
};

inline HybridSystem integrator_system(const IntegratorParams& params = {}) {
  params.check();
  const IntegratorParams p = params;
  const Box states{Vector::Constant(p.dim, 0.0), Vector::Constant(p.dim, p.state_bound)};
  const Box inputs{Vector::Constant(p.dim, -p.input_bound), Vector::Constant(p.dim, p.input_bound)};

  HybridSystem h;
  h.id = "integrator_no_jumps";
  h.state_dim = p.dim;
  h.input_dim = p.dim;
  h.flow_map = [](const Vector&, const Vector& u) { return u; };
  h.flow_set = [](const Vector&, const Vector&, double) { return true; };
  h.jump_map = [](const Vector&, const Vector&) { return std::vector<Vector>{}; };
  h.jump_set = [](const Vector&, const Vector&, double) { return false; };
  h.flow_states = [](const Vector&, double) { return true; };
  h.jump_states = [](const Vector&, double) { return false; };
  h.sample_flow_state = [states](Rng& rng) { return states.sample(rng); };
  h.feasible_flow_inputs = [inputs](const Vector&) {
    InputSet s;
    s.box = inputs;
    return s;
  };

  BackwardJumpModel bw;
  bw.preimage = [](const Vector&, const Vector&) { return std::vector<Vector>{}; };
  bw.jump_states = [](const Vector&, double) { return false; };
  h.backward = bw;
  return h;
}

}  // namespace hyrrt
