#pragma once

/**
 * @file planner.hpp
 * @brief Bidirectional RRT for hybrid systems.
 *
 * A forward tree grows from the initial set under the forward system and a
 * backward tree grows from the final set under the backward-in-time system.
 * After each successful extension the trees are checked for a connection:
 *  - jump connection: a forward vertex jumps onto a backward vertex under
 *    some input u*, giving an exact seam;
 *  - flow match: a forward and a backward vertex in the flow set lie within
 *    delta of each other. The backward path is then re-simulated forward
 *    from the forward endpoint under its own reversed input, which removes
 *    the gap at the cost of a small deviation at the final state.
 */

#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/hybrid_time.hpp>
#include <hyrrt/propagation.hpp>
#include <hyrrt/types.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hyrrt {

enum class EdgeKind : std::uint8_t { root, flow, jump };

/// Cached membership flags of a vertex state.
enum RegionBits : std::uint8_t {
  kFlowRegion = 1,  ///< constraint set used for nearest neighbors in the flow regime
  kJumpRegion = 2,  ///< constraint set used for nearest neighbors in the jump regime
  kFlowStates = 4,  ///< state projection of C
  kJumpStates = 8,  ///< state projection of D
};

/// Directed tree; each non-root vertex stores its parent and the solution
/// pair of its incoming edge. States are kept in one flat array.
class SearchTree {
 public:
  SearchTree(Direction direction, int state_dim) : direction_(direction), n_(state_dim) {}

  Direction direction() const { return direction_; }
  int state_dim() const { return n_; }
  std::size_t size() const { return parent_.size(); }
  bool empty() const { return parent_.empty(); }

  int add_root(const Vector& x, std::uint8_t regions) { return push(x, -1, EdgeKind::root, SolutionPair{}, regions); }

  int add_vertex(int parent, const Vector& x, EdgeKind kind, SolutionPair edge, std::uint8_t regions) {
    if (parent < 0 || static_cast<std::size_t>(parent) >= size()) throw Error("invalid parent vertex");
    return push(x, parent, kind, std::move(edge), regions);
  }

  Vector state(int v) const {
    Vector x(n_);
    const double* p = state_data(v);
    for (int i = 0; i < n_; ++i) x[i] = p[i];
    return x;
  }
  const double* state_data(int v) const { return states_.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(n_); }
  int parent(int v) const { return parent_.at(static_cast<std::size_t>(v)); }
  EdgeKind incoming(int v) const { return kind_.at(static_cast<std::size_t>(v)); }
  const SolutionPair& edge_pair(int v) const { return edge_.at(static_cast<std::size_t>(v)); }
  std::uint8_t regions(int v) const { return regions_[static_cast<std::size_t>(v)]; }

  /// Vertices from the root to v.
  std::vector<int> path_to(int v) const {
    std::vector<int> path;
    for (int cur = v; cur >= 0; cur = parent(cur)) path.push_back(cur);
    return {path.rbegin(), path.rend()};
  }

  double squared_distance(int v, const Vector& x) const {
    const double* p = state_data(v);
    double sq = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double d = p[i] - x[i];
      sq += d * d;
    }
    return sq;
  }

 private:
  int push(const Vector& x, int parent, EdgeKind kind, SolutionPair edge, std::uint8_t regions) {
    if (x.size() != n_) throw Error("vertex state dimension mismatch");
    states_.insert(states_.end(), x.data(), x.data() + n_);
    parent_.push_back(parent);
    kind_.push_back(kind);
    edge_.push_back(std::move(edge));
    regions_.push_back(regions);
    return static_cast<int>(parent_.size()) - 1;
  }

  Direction direction_;
  int n_;
  std::vector<double> states_;
  std::vector<int> parent_;
  std::vector<EdgeKind> kind_;
  std::vector<SolutionPair> edge_;
  std::vector<std::uint8_t> regions_;
};

/// Computes RegionBits for a state of `system`. The nearest-neighbor
/// constraint sets are the state projections inflated by a radius.
struct RegionClassifier {
  const HybridSystem* system = nullptr;
  double flow_inflation = 0.0;
  double jump_inflation = 0.0;

  std::uint8_t operator()(const Vector& x) const {
    std::uint8_t bits = 0;
    if (system->flow_states(x, flow_inflation)) bits |= kFlowRegion;
    if (system->jump_states(x, jump_inflation)) bits |= kJumpRegion;
    if (system->flow_states(x, 0.0)) bits |= kFlowStates;
    if (system->jump_states(x, 0.0)) bits |= kJumpStates;
    return bits;
  }
};

/// Random state from a sampler; samplers throw when their rejection cap is hit.
inline Vector random_state(const StateSampler& sampler, Rng& rng) {
  if (!sampler) throw Error("state sampler exhausted: set has no members");
  return sampler(rng);
}

/// Closest vertex (Euclidean) among those carrying all bits of `required`.
/// Ties go to the lowest id.
inline std::optional<int> nearest_neighbor(const Vector& x, const SearchTree& tree, std::uint8_t required) {
  std::optional<int> best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int v = 0; v < static_cast<int>(tree.size()); ++v) {
    if ((tree.regions(v) & required) != required) continue;
    const double sq = tree.squared_distance(v, x);
    if (sq < best_sq) {
      best_sq = sq;
      best = v;
    }
  }
  return best;
}

inline std::optional<int> nearest_neighbor(const Vector& x, const SearchTree& tree, const StatePredicate& allowed) {
  std::optional<int> best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int v = 0; v < static_cast<int>(tree.size()); ++v) {
    if (!allowed(tree.state(v), 0.0)) continue;
    const double sq = tree.squared_distance(v, x);
    if (sq < best_sq) {
      best_sq = sq;
      best = v;
    }
  }
  return best;
}

enum class ExtendStatus { advanced, trapped };

struct ExtendResult {
  ExtendStatus status = ExtendStatus::trapped;
  int vertex = -1;
};

struct ExtendContext {
  const HybridSystem* system = nullptr;
  const InputLibrary* library = nullptr;
  UnsafeSet unsafe;
  RegionClassifier classify;
  PropagationConfig propagation;
  /// Validate each new edge pair; an invalid edge is an internal error.
  bool validate_edges = false;
  ValidationTolerances tolerances;
};

/**
 * One extension attempt toward x. The regime selects the constraint set for
 * the nearest neighbor. A flow edge that follows a flow edge must start
 * inside C so that the path pair stays a solution pair. On Trapped the tree
 * is unchanged.
 */
inline ExtendResult extend(SearchTree& tree, const Vector& x, Regime regime, const ExtendContext& ctx, Rng& rng) {
  const std::uint8_t required = regime == Regime::flow ? kFlowRegion : kJumpRegion;
  const std::optional<int> cur = nearest_neighbor(x, tree, required);
  if (!cur) return {};

  const Vector x_cur = tree.state(*cur);
  std::optional<NewState> next = new_state(x_cur, *ctx.library, *ctx.system, ctx.unsafe, regime, rng, ctx.propagation);
  if (!next) return {};

  if (regime == Regime::flow && tree.incoming(*cur) == EdgeKind::flow) {
    const Vector u0 = *next->pair.input.flow_value(0.0, 0);
    if (!ctx.system->flow_set(x_cur, u0, 0.0)) return {};
  }
  if (ctx.validate_edges) {
    const ValidationReport report = validate_solution_pair(*ctx.system, next->pair, ctx.tolerances);
    if (!report.valid) throw Error("new_state produced an edge that is not a solution pair");
  }

  const EdgeKind kind = regime == Regime::flow ? EdgeKind::flow : EdgeKind::jump;
  const std::uint8_t bits = ctx.classify(next->state);
  const int id = tree.add_vertex(*cur, next->state, kind, std::move(next->pair), bits);
  return {ExtendStatus::advanced, id};
}

/// Concatenation of the edge pairs from the root to `leaf`.
inline SolutionPair path_solution_pair(const SearchTree& tree, int leaf, const PairMembership& flow_set, int input_dim,
                                       double glue_tolerance = kDefaultGlueTolerance) {
  const std::vector<int> path = tree.path_to(leaf);
  if (path.size() == 1) return single_point_pair(tree.state(path.front()), input_dim);
  SolutionPair pair = tree.edge_pair(path[1]);
  try {
    for (std::size_t i = 2; i < path.size(); ++i)
      pair = concat_solution_pairs(pair, tree.edge_pair(path[i]), flow_set, glue_tolerance);
  } catch (const ConcatenationError& e) {
    throw Error(std::string("search tree corrupt: ") + e.what());
  }
  return pair;
}

// ---------------------------------------------------------------------------
// Connection detection

struct FlowMatch {
  int forward_vertex = -1;
  int backward_vertex = -1;
  double distance = 0.0;
};

struct JumpMatch {
  int forward_vertex = -1;
  int backward_vertex = -1;
  Vector u_star;
};

namespace detail {

inline std::optional<Vector> last_flow_input(const SearchTree& tree, int v) {
  if (tree.incoming(v) != EdgeKind::flow) return std::nullopt;
  const InputSegment& seg = tree.edge_pair(v).input.segments().back();
  if (seg.flow.empty()) return std::nullopt;
  return seg.flow.back().u;
}

/// Compass search on |g(x_fw, u) - x_bw| over the jump-input box, for systems
/// without an analytic connection solver.
inline std::optional<Vector> search_jump_input(const HybridSystem& fw, const Vector& x_fw, const Vector& x_bw,
                                               const Box& inputs) {
  if (inputs.empty()) return std::nullopt;
  auto cost = [&](const Vector& u) {
    if (!inputs.contains(u) || !fw.jump_set(x_fw, u, 0.0)) return std::numeric_limits<double>::infinity();
    const std::vector<Vector> image = fw.jump_map(x_fw, u);
    return image.empty() ? std::numeric_limits<double>::infinity() : (image.front() - x_bw).norm();
  };
  Rng rng(0x5eedULL);
  Vector best = 0.5 * (inputs.lower + inputs.upper);
  double best_cost = cost(best);
  for (int i = 0; i < 64; ++i) {
    Vector u = inputs.sample(rng);
    const double c = cost(u);
    if (c < best_cost) {
      best_cost = c;
      best = u;
    }
  }
  if (!std::isfinite(best_cost)) return std::nullopt;
  Vector step = 0.25 * (inputs.upper - inputs.lower);
  for (int iter = 0; iter < 400 && step.maxCoeff() > 1e-14; ++iter) {
    bool improved = false;
    for (Eigen::Index d = 0; d < best.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        Vector u = best;
        u[d] += sign * step[d];
        const double c = cost(u);
        if (c < best_cost) {
          best_cost = c;
          best = u;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace detail

/// Input u* with g(x_fw, u*) within `tolerance` of x_bw, (x_fw, u*) in D and
/// outside the unsafe set.
inline std::optional<Vector> solve_jump_connection(const HybridSystem& fw, const Vector& x_fw, const Vector& x_bw,
                                                   double tolerance, const UnsafeSet& unsafe, const Box& jump_inputs) {
  std::optional<Vector> u = fw.jump_connection ? fw.jump_connection(x_fw, x_bw)
                                               : detail::search_jump_input(fw, x_fw, x_bw, jump_inputs);
  if (!u || !fw.jump_set(x_fw, *u, 0.0)) return std::nullopt;
  if (unsafe && unsafe(x_fw, *u)) return std::nullopt;
  const std::vector<Vector> image = fw.jump_map(x_fw, *u);
  if (image.empty() || (image.front() - x_bw).norm() > tolerance) return std::nullopt;
  return u;
}

/**
 * Flow match for a freshly added vertex: scans the opposite tree (lowest id
 * first) for a vertex within delta, both states in the flow-state set. When
 * both incoming edges are flows, the backward vertex with its last input
 * must lie in the forward flow set.
 */
inline std::optional<FlowMatch> detect_overlap_s1(int new_vertex, const SearchTree& own, const SearchTree& other,
                                                  double delta, const HybridSystem& forward) {
  if (!(own.regions(new_vertex) & kFlowStates)) return std::nullopt;
  const bool own_is_forward = own.direction() == Direction::forward;
  const SearchTree& fw_tree = own_is_forward ? own : other;
  const SearchTree& bw_tree = own_is_forward ? other : own;
  const Vector x_new = own.state(new_vertex);
  const double delta_sq = delta * delta;

  for (int w = 0; w < static_cast<int>(other.size()); ++w) {
    if (!(other.regions(w) & kFlowStates)) continue;
    const double sq = other.squared_distance(w, x_new);
    if (sq > delta_sq) continue;
    const int fw = own_is_forward ? new_vertex : w;
    const int bw = own_is_forward ? w : new_vertex;
    const std::optional<Vector> u_fw = detail::last_flow_input(fw_tree, fw);
    const std::optional<Vector> u_bw = detail::last_flow_input(bw_tree, bw);
    if (u_fw && u_bw && !forward.flow_set(bw_tree.state(bw), *u_bw, 0.0)) continue;
    return FlowMatch{fw, bw, std::sqrt(sq)};
  }
  return std::nullopt;
}

/// Jump connection for a freshly added vertex, in either direction.
inline std::optional<JumpMatch> detect_overlap_s2(int new_vertex, const SearchTree& own, const SearchTree& other,
                                                  const HybridSystem& forward, double tolerance,
                                                  const UnsafeSet& unsafe, const Box& jump_inputs) {
  const bool own_is_forward = own.direction() == Direction::forward;
  if (own_is_forward) {
    if (!(own.regions(new_vertex) & kJumpStates)) return std::nullopt;
    const Vector x_fw = own.state(new_vertex);
    for (int w = 0; w < static_cast<int>(other.size()); ++w) {
      if (auto u = solve_jump_connection(forward, x_fw, other.state(w), tolerance, unsafe, jump_inputs))
        return JumpMatch{new_vertex, w, *u};
    }
    return std::nullopt;
  }
  const Vector x_bw = own.state(new_vertex);
  for (int w = 0; w < static_cast<int>(other.size()); ++w) {
    if (!(other.regions(w) & kJumpStates)) continue;
    if (auto u = solve_jump_connection(forward, other.state(w), x_bw, tolerance, unsafe, jump_inputs))
      return JumpMatch{w, new_vertex, *u};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Motion plans

enum class PlannerMode { hyrrt_connect, bi_hyrrt, hyrrt };

inline const char* to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::hyrrt_connect: return "hyrrt_connect";
    case PlannerMode::bi_hyrrt: return "bi_hyrrt";
    case PlannerMode::hyrrt: return "hyrrt";
  }
  return "?";
}

inline std::optional<PlannerMode> parse_mode(const std::string& s) {
  if (s == "hyrrt_connect") return PlannerMode::hyrrt_connect;
  if (s == "bi_hyrrt") return PlannerMode::bi_hyrrt;
  if (s == "hyrrt") return PlannerMode::hyrrt;
  return std::nullopt;
}

enum class Provenance { exact_flow_match, reconstructed_flow_match, jump_connection, forward_goal };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::exact_flow_match: return "exact_flow_match";
    case Provenance::reconstructed_flow_match: return "reconstructed_flow_match";
    case Provenance::jump_connection: return "jump_connection";
    case Provenance::forward_goal: return "forward_goal";
  }
  return "?";
}

struct ProblemDef {
  HybridSystem system;
  Box initial;
  Box final;
  UnsafeSet unsafe;
};

struct PlannerConfig {
  PlannerMode mode = PlannerMode::hyrrt_connect;
  double p_flow_forward = 0.9;
  double p_flow_backward = 0.9;
  long long max_iterations = 20000;
  /// Flow-match tolerance; also the goal tolerance of the forward-only mode.
  double delta = 0.2;
  double jump_tolerance = 1e-9;
  double glue_tolerance = kDefaultGlueTolerance;
  int initial_samples = 1;
  int final_samples = 1;
  double inflate_flow_forward = 0.0;
  double inflate_jump_forward = 0.0;
  double inflate_flow_backward = 0.0;
  double inflate_jump_backward = 0.0;
  std::uint64_t seed = 0;
  InputLibrary forward_library;
  InputLibrary backward_library;
  PropagationConfig propagation;
  bool validate_edges = false;
  ValidationTolerances tolerances;

  void check() const {
    auto prob = [](double p) { return p > 0.0 && p < 1.0; };
    if (!prob(p_flow_forward) || !prob(p_flow_backward)) throw Error("flow probabilities must lie in (0, 1)");
    if (max_iterations < 0) throw Error("iteration limit must be nonnegative");
    if (!(delta > 0.0)) throw Error("delta must be positive");
    if (!(jump_tolerance > 0.0) || !(glue_tolerance > 0.0)) throw Error("tolerances must be positive");
    if (initial_samples < 1 || final_samples < 1) throw Error("root sample counts must be at least 1");
    if (inflate_flow_forward < 0.0 || inflate_jump_forward < 0.0 || inflate_flow_backward < 0.0 ||
        inflate_jump_backward < 0.0)
      throw Error("constraint inflations must be nonnegative");
    if (!(propagation.step > 0.0) || !(propagation.max_flow_duration > 0.0) || propagation.record_stride < 1)
      throw Error("invalid propagation settings");
  }
};

struct RunStats {
  long long iterations = 0;
  std::size_t vertices_forward = 0;
  std::size_t vertices_backward = 0;
  std::size_t advanced_forward = 0;
  std::size_t trapped_forward = 0;
  std::size_t advanced_backward = 0;
  std::size_t trapped_backward = 0;
  double wall_ms = 0.0;

  std::size_t vertices() const { return vertices_forward + vertices_backward; }
};

struct ReconstructionReport {
  /// Gap between the matched forward and backward states.
  double match_distance = 0.0;
  /// |phi_r(T_r, J_r) - phi_bw(0, 0)|
  double endpoint_deviation = 0.0;
  /// Logged in the plan's hybrid time.
  std::vector<MembershipViolation> membership_violations;
};

struct MotionPlan {
  SolutionPair pair;
  Provenance provenance = Provenance::forward_goal;
  SolutionPair forward;
  /// Backward partial plan as a pair of the backward system (not reversed).
  SolutionPair backward;
  std::optional<ReconstructionReport> reconstruction;
  std::optional<Vector> u_star;
  double endpoint_distance = 0.0;
  RunStats stats;
};

enum class ConnectionKind { flow_match, jump_connection };

struct Connection {
  ConnectionKind kind = ConnectionKind::flow_match;
  int forward_vertex = -1;
  int backward_vertex = -1;
  double distance = 0.0;
  Vector u_star;
};

/**
 * Builds the plan for a detected connection.
 *
 * Flow match: forward path | reversed backward path when the gap is within
 * the glue tolerance; otherwise the reversed backward input is re-simulated
 * from the forward endpoint and that reconstruction is appended instead.
 *
 * Jump connection: forward path | one jump under u* | reversed backward path.
 */
inline MotionPlan assemble_motion_plan(const Connection& c, const SearchTree& fw_tree, const SearchTree& bw_tree,
                                       const ProblemDef& problem, const PlannerConfig& config) {
  const HybridSystem& H = problem.system;
  const PairMembership flow_set = exact_flow_set(H);
  MotionPlan plan;
  plan.forward = path_solution_pair(fw_tree, c.forward_vertex, flow_set, H.input_dim, config.glue_tolerance);
  plan.backward = path_solution_pair(bw_tree, c.backward_vertex, flow_set, H.input_dim, config.glue_tolerance);
  const SolutionPair reversed = reverse_solution_pair(plan.backward);

  if (c.kind == ConnectionKind::jump_connection) {
    const Vector x_fw = plan.forward.arc.back();
    const Vector landing = H.jump_map(x_fw, c.u_star).front();
    const SolutionPair jump = jump_pair(x_fw, c.u_star, landing);
    const double glue = std::max(config.glue_tolerance, config.jump_tolerance);
    plan.pair = concat_solution_pairs(concat_solution_pairs(plan.forward, jump, flow_set, config.glue_tolerance),
                                      reversed, flow_set, glue);
    plan.provenance = Provenance::jump_connection;
    plan.u_star = c.u_star;
  } else if (c.distance <= config.glue_tolerance) {
    plan.pair = concat_solution_pairs(plan.forward, reversed, flow_set, config.glue_tolerance);
    plan.provenance = Provenance::exact_flow_match;
  } else {
    const Vector x_start = plan.forward.arc.back();
    ReconstructionResult rec = reconstruct_backward_plan(H, reversed.input, x_start, config.propagation);
    ReconstructionReport report;
    report.match_distance = c.distance;
    report.endpoint_deviation = (rec.pair.arc.back() - plan.backward.arc.front()).norm();
    const HybridTime shift = plan.forward.domain().max();
    for (MembershipViolation v : rec.membership_violations) {
      v.t += shift.t;
      v.j += shift.j;
      report.membership_violations.push_back(v);
    }
    plan.pair = concat_solution_pairs(plan.forward, rec.pair, flow_set, config.glue_tolerance);
    plan.reconstruction = std::move(report);
    plan.provenance = Provenance::reconstructed_flow_match;
  }
  plan.endpoint_distance = problem.final.distance(plan.pair.arc.back());
  return plan;
}

struct PlanResult {
  std::optional<MotionPlan> plan;
  RunStats stats;
};

namespace detail {

inline void init_roots(SearchTree& tree, const Box& set, int count, const RegionClassifier& classify, Rng& rng) {
  const bool singleton = (set.lower.array() == set.upper.array()).all();
  const int n = singleton ? 1 : count;
  for (int i = 0; i < n; ++i) {
    const Vector x = set.sample(rng);
    tree.add_root(x, classify(x));
  }
}

}  // namespace detail

/**
 * Runs the planner for at most `config.max_iterations` iterations. Each
 * iteration extends the forward tree, then (in the bidirectional modes) the
 * backward tree; every Advanced extension is followed by the connection
 * checks (jump connection first, then flow match). `backward` may be null
 * in the forward-only mode.
 *
 * Deterministic for a fixed seed.
 */
inline PlanResult plan(const ProblemDef& problem, const HybridSystem* backward, const PlannerConfig& config) {
  config.check();
  const bool bidirectional = config.mode != PlannerMode::hyrrt;
  if (bidirectional && !backward) throw Error("bidirectional planning needs a backward system");
  const HybridSystem& fw = problem.system;
  const auto start = std::chrono::steady_clock::now();

  Rng rng(config.seed);
  PlanResult result;
  RunStats& stats = result.stats;

  ExtendContext fw_ctx{&fw, &config.forward_library, problem.unsafe,
                       RegionClassifier{&fw, config.inflate_flow_forward, config.inflate_jump_forward},
                       config.propagation, config.validate_edges, config.tolerances};
  SearchTree fw_tree(Direction::forward, fw.state_dim);
  SearchTree bw_tree(Direction::backward, fw.state_dim);
  ExtendContext bw_ctx = fw_ctx;
  if (bidirectional) {
    bw_ctx.system = backward;
    bw_ctx.library = &config.backward_library;
    bw_ctx.classify = RegionClassifier{backward, config.inflate_flow_backward, config.inflate_jump_backward};
  }

  detail::init_roots(fw_tree, problem.initial, config.initial_samples, fw_ctx.classify, rng);
  if (bidirectional) detail::init_roots(bw_tree, problem.final, config.final_samples, bw_ctx.classify, rng);

  auto finish = [&](std::optional<MotionPlan> p) {
    stats.vertices_forward = fw_tree.size();
    stats.vertices_backward = bw_tree.size();
    stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (p) p->stats = stats;
    result.plan = std::move(p);
    return result;
  };

  auto connect = [&](int v, bool forward_grew) -> std::optional<Connection> {
    const SearchTree& own = forward_grew ? fw_tree : bw_tree;
    const SearchTree& other = forward_grew ? bw_tree : fw_tree;
    if (config.mode == PlannerMode::hyrrt_connect) {
      if (auto m = detect_overlap_s2(v, own, other, fw, config.jump_tolerance, problem.unsafe,
                                     config.forward_library.jump_inputs))
        return Connection{ConnectionKind::jump_connection, m->forward_vertex, m->backward_vertex, 0.0, m->u_star};
    }
    if (auto m = detect_overlap_s1(v, own, other, config.delta, fw))
      return Connection{ConnectionKind::flow_match, m->forward_vertex, m->backward_vertex, m->distance, Vector()};
    return std::nullopt;
  };

  auto grow = [&](SearchTree& tree, const HybridSystem& system, const ExtendContext& ctx, double p_flow) {
    const Regime regime = uniform01(rng) <= p_flow ? Regime::flow : Regime::jump;
    if (regime == Regime::jump && !system.has_jumps()) return ExtendResult{};
    const Vector x_rand =
        random_state(regime == Regime::flow ? system.sample_flow_state : system.sample_jump_state, rng);
    return extend(tree, x_rand, regime, ctx, rng);
  };

  for (long long k = 1; k <= config.max_iterations; ++k) {
    stats.iterations = k;

    const ExtendResult f = grow(fw_tree, fw, fw_ctx, config.p_flow_forward);
    if (f.status == ExtendStatus::advanced) {
      ++stats.advanced_forward;
      if (!bidirectional) {
        if (problem.final.distance(fw_tree.state(f.vertex)) <= config.delta) {
          MotionPlan p;
          p.forward = path_solution_pair(fw_tree, f.vertex, exact_flow_set(fw), fw.input_dim, config.glue_tolerance);
          p.pair = p.forward;
          p.provenance = Provenance::forward_goal;
          p.endpoint_distance = problem.final.distance(p.pair.arc.back());
          return finish(std::move(p));
        }
      } else if (auto c = connect(f.vertex, true)) {
        return finish(assemble_motion_plan(*c, fw_tree, bw_tree, problem, config));
      }
    } else {
      ++stats.trapped_forward;
    }
    if (!bidirectional) continue;

    const ExtendResult b = grow(bw_tree, *backward, bw_ctx, config.p_flow_backward);
    if (b.status == ExtendStatus::advanced) {
      ++stats.advanced_backward;
      if (auto c = connect(b.vertex, false)) return finish(assemble_motion_plan(*c, fw_tree, bw_tree, problem, config));
    } else {
      ++stats.trapped_backward;
    }
  }
  return finish(std::nullopt);
}

}  // namespace hyrrt
