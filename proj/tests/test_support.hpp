#pragma once

// Closed-form oracles and random generators shared by the test binaries.

#include <hyrrt/hyrrt.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace hyrrt::testing {

inline constexpr double kGamma = 9.81;
inline constexpr double kLambda = 0.8;

/// Impact speed of a ball dropped from rest at height h.
inline double impact_speed(double h) { return std::sqrt(2.0 * kGamma * h); }

/// Ballistic state after time t from (h, v).
inline Vector ballistic(double h, double v, double t) { return vec({h + v * t - 0.5 * kGamma * t * t, v - kGamma * t}); }

/// Exact ballistic arc from (h, v) on [0, duration], sampled every dt (plus the end).
inline ArcSegment ballistic_samples(double h, double v, double duration, double dt, double t0 = 0.0) {
  ArcSegment seg;
  auto push = [&](double s) {
    const Vector x = ballistic(h, v, s);
    seg.times.push_back(t0 + s);
    seg.values.push_back(x[0]);
    seg.values.push_back(x[1]);
  };
  const long long steps = static_cast<long long>(std::floor(duration / dt));
  for (long long k = 0; k <= steps; ++k) push(static_cast<double>(k) * dt);
  if (static_cast<double>(steps) * dt < duration) push(duration);
  return seg;
}

inline SolutionPair ballistic_pair(double h, double v, double duration, double u = 1.0, double dt = 0.01) {
  return flow_pair(ballistic_samples(h, v, duration, dt), 2, vec({u}));
}

/// Time for a ball at (h, v) to reach the ground.
inline double time_to_ground(double h, double v) { return (v + std::sqrt(v * v + 2.0 * kGamma * h)) / kGamma; }

/// Forward ball pair: alternating flights to the ground and bounces, starting
/// at (h, v), with `bounces` jumps and a final partial flight.
inline SolutionPair random_ball_pair(Rng& rng, int bounces) {
  const HybridSystem H = bouncing_ball_system();
  std::uniform_real_distribution<double> height(0.5, 15.0), speed(-5.0, 5.0), input(0.1, 4.9), frac(0.1, 0.9);
  double h = height(rng);
  double v = speed(rng);
  const PairMembership C = exact_flow_set(H);
  SolutionPair pair;
  bool first = true;
  auto append = [&](const SolutionPair& piece) {
    pair = first ? piece : concat_solution_pairs(pair, piece, C);
    first = false;
  };
  for (int b = 0; b < bounces; ++b) {
    const double tg = time_to_ground(h, v);
    ArcSegment seg = ballistic_samples(h, v, tg, 0.01);
    seg.values[seg.values.size() - 2] = 0.0;
    const double v_hit = seg.values.back();
    append(flow_pair(std::move(seg), 2, vec({input(rng)})));
    const Vector x_hit = vec({0.0, v_hit});
    const Vector u = vec({input(rng)});
    const Vector x_next = H.jump_map(x_hit, u).front();
    append(jump_pair(x_hit, u, x_next));
    h = 0.0;
    v = x_next[1];
  }
  const double tg = time_to_ground(h, v);
  append(ballistic_pair(h, v, frac(rng) * tg, input(rng)));
  return pair;
}

/// A pair with at least one jump, or a pure flight, chosen at random.
inline SolutionPair random_ball_pair(Rng& rng) {
  return random_ball_pair(rng, std::uniform_int_distribution<int>(0, 3)(rng));
}

inline std::string config_path(const std::string& name) { return std::string(HYRRT_SOURCE_DIR) + "/configs/" + name; }

inline Scenario ball_scenario(const std::vector<std::string>& overrides = {}) {
  return build_scenario(load_config(config_path("bouncing_ball.cfg"), overrides));
}

}  // namespace hyrrt::testing
