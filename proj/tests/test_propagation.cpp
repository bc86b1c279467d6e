#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hyrrt;
using namespace hyrrt::testing;

namespace {

const UnsafeSet kBallUnsafe = [](const Vector&, const Vector& u) { return u[0] <= 0.0 || u[0] >= 5.0; };

InputLibrary ball_library() { return {Box{vec({0.0}), vec({5.0})}, Box{vec({0.0}), vec({5.0})}}; }

}  // namespace

TEST(IntegrateFlow, OneSecondOfFreeFall) {
  const HybridSystem H = bouncing_ball_system();
  const FlowSegmentResult r = integrate_flow(H, vec({14.0, 0.0}), vec({1.0}), 1.0, {}, PropagationConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::duration_elapsed);
  EXPECT_DOUBLE_EQ(r.duration(), 1.0);
  EXPECT_NEAR(r.final_state()[0], 9.095, 1e-9);
  EXPECT_NEAR(r.final_state()[1], -9.81, 1e-9);
}

TEST(IntegrateFlow, StopsAtTheGroundWithImpactSpeed) {
  const HybridSystem H = bouncing_ball_system();
  const FlowSegmentResult r = integrate_flow(H, vec({14.0, 0.0}), vec({1.0}), 2.0, {}, PropagationConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::left_flow_set);
  EXPECT_NEAR(r.duration(), std::sqrt(28.0 / kGamma), 1e-9);
  EXPECT_GE(r.final_state()[0], 0.0);
  EXPECT_LT(r.final_state()[0], 1e-9);
  EXPECT_NEAR(r.final_state()[1], -impact_speed(14.0), 1e-6);
}

TEST(IntegrateFlow, DownwardAtTheSurfaceLeavesImmediately) {
  const HybridSystem H = bouncing_ball_system();
  const FlowSegmentResult r = integrate_flow(H, vec({0.0, -1.0}), vec({1.0}), 1.0, {}, PropagationConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::left_flow_set);
  EXPECT_LT(r.duration(), 1e-9);
}

TEST(IntegrateFlow, ZeroDurationGivesOneSample) {
  const HybridSystem H = bouncing_ball_system();
  const FlowSegmentResult r = integrate_flow(H, vec({5.0, 1.0}), vec({1.0}), 0.0, {}, PropagationConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::duration_elapsed);
  EXPECT_EQ(r.samples.times.size(), 1u);
}

TEST(IntegrateFlow, UnsafeInputStopsAtOnce) {
  const HybridSystem H = bouncing_ball_system();
  const FlowSegmentResult r = integrate_flow(H, vec({5.0, 0.0}), vec({5.0}), 1.0, kBallUnsafe, PropagationConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::entered_unsafe);
}

TEST(IntegrateFlow, BlowUpIsAnError) {
  HybridSystem H = integrator_system();
  H.flow_map = [](const Vector& x, const Vector&) -> Vector { return x.array().square().matrix() * 1e200; };
  try {
    integrate_flow(H, vec({1.0, 1.0}), vec({0.0, 0.0}), 1.0, {}, PropagationConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "numerical blow-up");
  }
}

TEST(IntegrateFlow, RecordsEveryStrideNodeAndTheEnd) {
  const HybridSystem H = bouncing_ball_system();
  PropagationConfig cfg;
  cfg.record_stride = 10;
  const FlowSegmentResult r = integrate_flow(H, vec({14.0, 0.0}), vec({1.0}), 0.1055, {}, cfg);
  ASSERT_EQ(r.samples.times.size(), 12u);
  EXPECT_NEAR(r.samples.times[1], 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(r.samples.times.back(), 0.1055);
}

TEST(IntegrateFlow, FourthOrderConvergence) {
  // Harmonic oscillator, not polynomial, so RK4 has a visible truncation error.
  HybridSystem H = integrator_system();
  H.flow_map = [](const Vector& x, const Vector&) { return vec({x[1], -x[0]}); };
  auto error = [&](double h) {
    PropagationConfig cfg;
    cfg.step = h;
    const Vector x = integrate_flow(H, vec({1.0, 0.0}), vec({0.0, 0.0}), 2.0, {}, cfg).final_state();
    return (x - vec({std::cos(2.0), -std::sin(2.0)})).norm();
  };
  const double e1 = error(0.04);
  const double e2 = error(0.02);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
}

TEST(ApplyJump, ForwardBounce) {
  const HybridSystem H = bouncing_ball_system();
  const Vector x = apply_jump(H, vec({0.0, -5.0}), vec({2.0}), std::size_t{0});
  EXPECT_NEAR(x[0], 0.0, 1e-15);
  EXPECT_NEAR(x[1], 6.0, 1e-12);
}

TEST(ApplyJump, BackwardBounce) {
  const HybridSystem bw = make_backward_system(bouncing_ball_system());
  Rng rng(0);
  const Vector x = apply_jump(bw, vec({0.0, 6.0}), vec({2.0}), rng);
  EXPECT_NEAR(x[1], -5.0, 1e-12);
}

TEST(ApplyJump, AboveGroundIsInfeasible) {
  const HybridSystem H = bouncing_ball_system();
  try {
    apply_jump(H, vec({1.0, -5.0}), vec({2.0}), std::size_t{0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "jump infeasible");
  }
}

TEST(ApplyJump, EmptyImageIsAnError) {
  HybridSystem H = bouncing_ball_system();
  H.jump_map = [](const Vector&, const Vector&) { return std::vector<Vector>{}; };
  EXPECT_THROW(apply_jump(H, vec({0.0, -5.0}), vec({2.0}), std::size_t{0}), Error);
}

TEST(ApplyJump, SelectorIndexesTheImage) {
  HybridSystem H = bouncing_ball_system();
  H.jump_map = [](const Vector&, const Vector&) { return std::vector<Vector>{vec({0.0, 1.0}), vec({0.0, 2.0})}; };
  EXPECT_EQ(apply_jump(H, vec({0.0, -1.0}), vec({1.0}), std::size_t{1})[1], 2.0);
  EXPECT_EQ(apply_jump(H, vec({0.0, -1.0}), vec({1.0}), std::size_t{2})[1], 1.0);
}

TEST(NewState, BounceFromImpactReachesTheTargetRestHeight) {
  const HybridSystem H = bouncing_ball_system();
  const Vector x_hit = vec({0.0, -impact_speed(14.0)});
  EXPECT_NEAR(x_hit[1], -16.5735, 1e-4);
  const double u_star = impact_speed(10.0) - kLambda * impact_speed(14.0);
  const Vector landing = apply_jump(H, x_hit, vec({u_star}), std::size_t{0});
  EXPECT_NEAR(landing[1], impact_speed(10.0), 1e-12);
  EXPECT_NEAR(landing[1], 14.0071, 1e-4);

  Rng rng(4);
  const std::optional<NewState> s = new_state(x_hit, ball_library(), H, kBallUnsafe, Regime::jump, rng, {});
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->pair.domain().jumps(), 1);
  const double u = (*s->pair.input.jump_value(0))[0];
  EXPECT_NEAR(s->state[1], kLambda * impact_speed(14.0) + u, 1e-12);
  EXPECT_TRUE(validate_solution_pair(H, s->pair).valid);
}

TEST(NewState, NoJumpAwayFromTheGround) {
  const HybridSystem H = bouncing_ball_system();
  Rng rng(4);
  for (int i = 0; i < 20; ++i)
    EXPECT_FALSE(new_state(vec({14.0, 0.0}), ball_library(), H, kBallUnsafe, Regime::jump, rng, {}).has_value());
}

TEST(NewState, FlightFromRestIsAValidEdge) {
  const HybridSystem H = bouncing_ball_system();
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const std::optional<NewState> s = new_state(vec({5.0, 0.0}), ball_library(), H, kBallUnsafe, Regime::flow, rng, {});
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(s->pair.domain().jumps(), 0);
    const double tau = s->pair.domain().end_time();
    EXPECT_GT(tau, 0.0);
    EXPECT_LE(tau, 2.0);
    const Vector oracle = ballistic(5.0, 0.0, tau);
    EXPECT_NEAR((s->state - oracle).norm(), 0.0, 1e-9);
    EXPECT_TRUE(validate_solution_pair(H, s->pair).valid);
  }
}

TEST(Reconstruction, ExactStartReproducesTheReversedPlan) {
  const HybridSystem H = bouncing_ball_system();
  const HybridSystem bw = make_backward_system(H);
  // Backward plan from rest at height 10: fall (backward), bounce, rise.
  const FlowSegmentResult up = integrate_flow(bw, vec({10.0, 0.0}), vec({1.0}), 2.0, {}, PropagationConfig{});
  ASSERT_EQ(up.stop_reason, StopReason::left_flow_set);
  const Vector ground = up.final_state();
  const Vector pre = apply_jump(bw, ground, vec({0.743}), std::size_t{0});
  const SolutionPair flight = flow_pair(up.samples, 2, vec({1.0}));
  const SolutionPair bounce = jump_pair(ground, vec({0.743}), pre);
  const SolutionPair bw_plan = concat_solution_pairs(flight, bounce, exact_flow_set(bw));
  const SolutionPair reversed = reverse_solution_pair(bw_plan);

  const ReconstructionResult r = reconstruct_backward_plan(H, reversed.input, reversed.arc.front(), PropagationConfig{});
  EXPECT_EQ(r.pair.domain(), reversed.domain());
  EXPECT_EQ(r.pair.arc.front(), reversed.arc.front());
  EXPECT_LT((r.pair.arc.back() - vec({10.0, 0.0})).norm(), 1e-8);
  EXPECT_TRUE(r.membership_violations.empty());
}

TEST(Reconstruction, SinglePointInput) {
  const HybridSystem H = bouncing_ball_system();
  const SolutionPair p = single_point_pair(vec({3.0, 0.0}), 1);
  const ReconstructionResult r = reconstruct_backward_plan(H, p.input, vec({4.0, 1.0}), PropagationConfig{});
  EXPECT_EQ(r.pair.domain(), p.domain());
  EXPECT_EQ(r.pair.arc.back(), vec({4.0, 1.0}));
}

TEST(Reconstruction, PerturbedStartDeviationShrinksWithThePerturbation) {
  const HybridSystem H = bouncing_ball_system();
  const SolutionPair fall = ballistic_pair(14.0, 0.0, std::sqrt(28.0 / kGamma));
  const SolutionPair rev = reverse_solution_pair(fall);
  const SolutionPair fwd = reverse_solution_pair(rev);
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {0.2, 0.1, 0.05, 0.01}) {
    const Vector start = fwd.arc.front() + vec({eps, 0.0});
    const ReconstructionResult r = reconstruct_backward_plan(H, fwd.input, start, PropagationConfig{});
    const double deviation = (r.pair.arc.back() - fall.arc.back()).norm();
    EXPECT_LT(deviation, previous);
    EXPECT_LE(deviation, 2.0 * eps);
    previous = deviation;
  }
}

TEST(Reconstruction, LogsFlowSetExits) {
  const HybridSystem H = bouncing_ball_system();
  const SolutionPair fall = ballistic_pair(1.0, 0.0, 0.4);
  const ReconstructionResult r = reconstruct_backward_plan(H, fall.input, vec({0.5, 0.0}), PropagationConfig{});
  EXPECT_FALSE(r.membership_violations.empty());
  EXPECT_LT(r.pair.arc.back()[0], 0.0);
  for (const MembershipViolation& v : r.membership_violations) EXPECT_EQ(v.kind, MembershipViolation::Kind::flow);
}
