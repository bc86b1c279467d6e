#pragma once

/**
 * @file hybrid_time.hpp
 * @brief Hybrid time domains, hybrid arcs and inputs, and the reversal and
 * concatenation operations on solution pairs.
 *
 * A compact hybrid time domain is stored as an ordered list of flow intervals
 * [t_j, t_{j+1}] x {j}. An interval with t_j == t_{j+1} is instantaneous and
 * represents consecutive jumps at the same ordinary time.
 *
 * Arcs are sampled grids evaluated by linear interpolation. Inputs are
 * piecewise constant during flow, with one value per jump instant.
 */

#include <hyrrt/types.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hyrrt {

struct HybridTime {
  double t = 0.0;
  int j = 0;
  bool operator==(const HybridTime&) const = default;
};

struct FlowInterval {
  int j = 0;
  double t_start = 0.0;
  double t_end = 0.0;

  bool has_interior() const { return t_end > t_start; }
  bool operator==(const FlowInterval&) const = default;
};

class HybridTimeDomain {
 public:
  HybridTimeDomain() = default;

  explicit HybridTimeDomain(std::vector<FlowInterval> segments) : segments_(std::move(segments)) {
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const FlowInterval& s = segments_[k];
      if (s.j != static_cast<int>(k)) throw Error("jump indices must be consecutive from 0");
      if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end))
        throw Error("hybrid time domain must be compact");
      if (s.t_start < 0.0 || s.t_end < s.t_start) throw Error("flow interval must satisfy 0 <= t_start <= t_end");
      if (k == 0 && s.t_start != 0.0) throw Error("hybrid time domain must start at (0, 0)");
      if (k > 0 && segments_[k - 1].t_end != s.t_start)
        throw Error("flow intervals must be contiguous across jumps");
    }
  }

  const std::vector<FlowInterval>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  int jumps() const { return static_cast<int>(segments_.size()) - 1; }
  double end_time() const { return segments_.back().t_end; }
  HybridTime max() const { return {end_time(), jumps()}; }

  bool contains(double t, int j, double tol = 0.0) const {
    if (j < 0 || j >= static_cast<int>(segments_.size())) return false;
    const FlowInterval& s = segments_[static_cast<std::size_t>(j)];
    return t >= s.t_start - tol && t <= s.t_end + tol;
  }

  bool operator==(const HybridTimeDomain&) const = default;

 private:
  std::vector<FlowInterval> segments_;
};

/// {(T, J)} - dom, the mirror image of a compact domain about its maximum.
inline HybridTimeDomain domain_reverse(const HybridTimeDomain& dom) {
  if (dom.empty()) throw Error("empty domain");
  const double T = dom.end_time();
  const int J = dom.jumps();
  std::vector<FlowInterval> out;
  out.reserve(dom.segments().size());
  for (int j = J; j >= 0; --j) {
    const FlowInterval& s = dom.segments()[static_cast<std::size_t>(j)];
    out.push_back({J - j, T - s.t_end, T - s.t_start});
  }
  return HybridTimeDomain(std::move(out));
}

/// Samples of one flow interval. `values` is row-major: sample k occupies
/// [k*n, (k+1)*n).
struct ArcSegment {
  std::vector<double> times;
  std::vector<double> values;
};

class HybridArc {
 public:
  HybridArc() = default;

  HybridArc(int state_dim, std::vector<ArcSegment> segments)
      : n_(state_dim), segments_(std::move(segments)) {
    if (n_ <= 0 || n_ > kMaxDim) throw Error("invalid state dimension");
    for (std::size_t j = 0; j < segments_.size(); ++j) {
      const ArcSegment& s = segments_[j];
      if (s.times.empty()) throw Error("arc segment without samples");
      if (s.values.size() != s.times.size() * static_cast<std::size_t>(n_))
        throw Error("arc sample values do not match state dimension");
      for (std::size_t k = 1; k < s.times.size(); ++k)
        if (!(s.times[k] > s.times[k - 1])) throw Error("arc sample times must strictly increase");
      if (j > 0 && segments_[j - 1].times.back() != s.times.front())
        throw Error("arc segments must be contiguous across jumps");
    }
    if (!segments_.empty() && segments_.front().times.front() != 0.0)
      throw Error("arc must start at hybrid time (0, 0)");
  }

  int state_dim() const { return n_; }
  bool empty() const { return segments_.empty(); }
  const std::vector<ArcSegment>& segments() const { return segments_; }
  int jumps() const { return static_cast<int>(segments_.size()) - 1; }

  HybridTimeDomain domain() const {
    std::vector<FlowInterval> out;
    out.reserve(segments_.size());
    for (std::size_t j = 0; j < segments_.size(); ++j)
      out.push_back({static_cast<int>(j), segments_[j].times.front(), segments_[j].times.back()});
    return HybridTimeDomain(std::move(out));
  }

  std::size_t sample_count(int j) const { return segment(j).times.size(); }
  double time(int j, std::size_t k) const { return segment(j).times[k]; }

  Vector state(int j, std::size_t k) const {
    const ArcSegment& s = segment(j);
    Vector x(n_);
    for (int i = 0; i < n_; ++i) x[i] = s.values[k * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)];
    return x;
  }

  Vector front() const { return state(0, 0); }
  Vector back() const { return state(jumps(), sample_count(jumps()) - 1); }

  /// Linear interpolation on segment j; exact at sample nodes.
  Vector at(double t, int j) const {
    if (j < 0 || j > jumps()) throw Error("out of domain");
    const ArcSegment& s = segment(j);
    if (t < s.times.front() || t > s.times.back()) throw Error("out of domain");
    auto it = std::lower_bound(s.times.begin(), s.times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - s.times.begin());
    if (s.times[k] == t) return state(j, k);
    const double t0 = s.times[k - 1];
    const double t1 = s.times[k];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * state(j, k - 1) + w * state(j, k);
  }

 private:
  const ArcSegment& segment(int j) const { return segments_.at(static_cast<std::size_t>(j)); }

  int n_ = 0;
  std::vector<ArcSegment> segments_;
};

inline Vector sample_arc_at(const HybridArc& arc, double t, int j) { return arc.at(t, j); }

struct InputPiece {
  double t_from = 0.0;
  double t_to = 0.0;
  Vector u;
};

/// Input on one flow interval. `jump` is the value applied at the jump that
/// ends this interval, absent on the last interval. An instantaneous interval
/// may carry a single degenerate piece giving its (free) flow value.
struct InputSegment {
  std::vector<InputPiece> flow;
  std::optional<Vector> jump;
};

class HybridInput {
 public:
  HybridInput() = default;

  HybridInput(int input_dim, HybridTimeDomain domain, std::vector<InputSegment> segments)
      : m_(input_dim), domain_(std::move(domain)), segments_(std::move(segments)) {
    if (m_ <= 0 || m_ > kMaxDim) throw Error("invalid input dimension");
    if (segments_.size() != domain_.segments().size()) throw Error("input segments do not match domain");
    const int J = domain_.jumps();
    for (int j = 0; j <= J; ++j) {
      const FlowInterval& iv = domain_.segments()[static_cast<std::size_t>(j)];
      const InputSegment& s = segments_[static_cast<std::size_t>(j)];
      if (iv.has_interior()) {
        if (s.flow.empty()) throw Error("flow pieces must tile each flow interval");
        if (s.flow.front().t_from != iv.t_start || s.flow.back().t_to != iv.t_end)
          throw Error("flow pieces must tile each flow interval");
        for (std::size_t k = 0; k < s.flow.size(); ++k) {
          if (!(s.flow[k].t_to > s.flow[k].t_from)) throw Error("flow piece must have positive length");
          if (k > 0 && s.flow[k - 1].t_to != s.flow[k].t_from) throw Error("flow pieces must tile each flow interval");
        }
      } else {
        if (s.flow.size() > 1) throw Error("instantaneous interval carries at most one input value");
        if (s.flow.size() == 1 && (s.flow[0].t_from != iv.t_start || s.flow[0].t_to != iv.t_end))
          throw Error("degenerate piece must sit on its instantaneous interval");
      }
      for (const InputPiece& p : s.flow)
        if (p.u.size() != m_) throw Error("input value dimension mismatch");
      if ((j < J) != s.jump.has_value()) throw Error("every jump instant needs exactly one jump value");
      if (s.jump && s.jump->size() != m_) throw Error("input value dimension mismatch");
    }
  }

  int input_dim() const { return m_; }
  const HybridTimeDomain& domain() const { return domain_; }
  const std::vector<InputSegment>& segments() const { return segments_; }

  /// Flow value at (t, j): the piece containing t, right-continuous except at
  /// the interval end. Empty for an instantaneous interval without a piece.
  std::optional<Vector> flow_value(double t, int j) const {
    const InputSegment& s = segments_.at(static_cast<std::size_t>(j));
    if (s.flow.empty()) return std::nullopt;
    for (const InputPiece& p : s.flow)
      if (t >= p.t_from && t < p.t_to) return p.u;
    return s.flow.back().u;
  }

  std::optional<Vector> jump_value(int j) const { return segments_.at(static_cast<std::size_t>(j)).jump; }

  /// v(t, j) as used by the solution-pair conditions: the jump value at a jump
  /// instant, otherwise the flow value.
  std::optional<Vector> value(double t, int j) const {
    const FlowInterval& iv = domain_.segments().at(static_cast<std::size_t>(j));
    if (j < domain_.jumps() && t == iv.t_end) return jump_value(j);
    return flow_value(t, j);
  }

 private:
  int m_ = 0;
  HybridTimeDomain domain_;
  std::vector<InputSegment> segments_;
};

struct SolutionPair {
  HybridArc arc;
  HybridInput input;
  /// Boundary instants whose input value was free and filled by reversal.
  std::vector<HybridTime> filled_instants;

  SolutionPair() = default;
  SolutionPair(HybridArc a, HybridInput v, std::vector<HybridTime> filled = {})
      : arc(std::move(a)), input(std::move(v)), filled_instants(std::move(filled)) {
    if (!(arc.domain() == input.domain())) throw Error("arc and input domains differ");
  }

  int state_dim() const { return arc.state_dim(); }
  int input_dim() const { return input.input_dim(); }
  HybridTimeDomain domain() const { return input.domain(); }
  bool empty() const { return arc.empty(); }
};

inline SolutionPair single_point_pair(const Vector& x, int input_dim) {
  ArcSegment seg{{0.0}, std::vector<double>(x.data(), x.data() + x.size())};
  HybridArc arc(static_cast<int>(x.size()), {seg});
  HybridInput input(input_dim, arc.domain(), {InputSegment{}});
  return SolutionPair(std::move(arc), std::move(input));
}

/// Two-point pair on {0} x {0, 1}: a single jump from x to x_next under u.
inline SolutionPair jump_pair(const Vector& x, const Vector& u, const Vector& x_next) {
  const int n = static_cast<int>(x.size());
  ArcSegment before{{0.0}, std::vector<double>(x.data(), x.data() + n)};
  ArcSegment after{{0.0}, std::vector<double>(x_next.data(), x_next.data() + n)};
  HybridArc arc(n, {before, after});
  InputSegment first;
  first.jump = u;
  HybridInput input(static_cast<int>(u.size()), arc.domain(), {first, InputSegment{}});
  return SolutionPair(std::move(arc), std::move(input));
}

/// Pair on [0, tau] x {0} with a constant input.
inline SolutionPair flow_pair(ArcSegment samples, int state_dim, const Vector& u) {
  HybridArc arc(state_dim, {std::move(samples)});
  const FlowInterval iv = arc.domain().segments().front();
  InputSegment seg;
  seg.flow.push_back({iv.t_start, iv.t_end, u});
  if (!iv.has_interior()) seg.flow.clear();
  HybridInput input(static_cast<int>(u.size()), arc.domain(), {seg});
  return SolutionPair(std::move(arc), std::move(input));
}

/// Reversal of a compact pair. The arc satisfies phi'(t, j) = phi(T - t, J - j).
/// Flow inputs are mirrored; free boundary values take the value of the
/// adjacent flow piece and are listed in `filled_instants`. Jump values are
/// u'(t, j) = u(T - t, J - j - 1).
inline SolutionPair reverse_solution_pair(const SolutionPair& pair) {
  if (pair.empty()) throw Error("cannot reverse a pair with an empty (non-compact) domain");
  const HybridTimeDomain dom = pair.domain();
  const double T = dom.end_time();
  const int J = dom.jumps();
  const int n = pair.state_dim();

  std::vector<ArcSegment> arc_segments;
  std::vector<InputSegment> input_segments;
  std::vector<HybridTime> filled;
  arc_segments.reserve(static_cast<std::size_t>(J + 1));
  input_segments.reserve(static_cast<std::size_t>(J + 1));

  for (int jr = 0; jr <= J; ++jr) {
    const int j = J - jr;
    const ArcSegment& src = pair.arc.segments()[static_cast<std::size_t>(j)];
    ArcSegment dst;
    const std::size_t count = src.times.size();
    dst.times.resize(count);
    dst.values.resize(src.values.size());
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t from = count - 1 - k;
      dst.times[k] = T - src.times[from];
      std::copy_n(src.values.begin() + static_cast<std::ptrdiff_t>(from * static_cast<std::size_t>(n)), n,
                  dst.values.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(n)));
    }
    arc_segments.push_back(std::move(dst));

    const InputSegment& in = pair.input.segments()[static_cast<std::size_t>(j)];
    InputSegment out;
    for (auto it = in.flow.rbegin(); it != in.flow.rend(); ++it)
      out.flow.push_back({T - it->t_to, T - it->t_from, it->u});
    if (jr < J) out.jump = pair.input.segments()[static_cast<std::size_t>(J - jr - 1)].jump;
    const FlowInterval& iv = dom.segments()[static_cast<std::size_t>(j)];
    if (iv.has_interior()) {
      filled.push_back({T - iv.t_end, jr});
      if (jr == J) filled.push_back({T - iv.t_start, jr});
    }
    input_segments.push_back(std::move(out));
  }

  HybridArc arc(n, std::move(arc_segments));
  HybridInput input(pair.input_dim(), arc.domain(), std::move(input_segments));
  return SolutionPair(std::move(arc), std::move(input), std::move(filled));
}

/// Raised when the conditions that make a concatenation a solution pair fail.
class ConcatenationError : public Error {
 public:
  enum class Reason { not_compact, endpoint_mismatch, seam_outside_flow_set };

  ConcatenationError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

using PairMembership = std::function<bool(const Vector& x, const Vector& u)>;

inline constexpr double kDefaultGlueTolerance = 1e-9;

/**
 * Concatenation first | second. The domain is dom first U (dom second + (T, J)).
 * Values of `first` are kept on dom first minus (T, J); from (T, J) on the
 * shifted values of `second` are used.
 *
 * Requires the end state of `first` to match the start of `second` within
 * `glue_tolerance`, and, when the seam joins two flow intervals with
 * nonempty interior, the start of `second` to lie in the flow set.
 */
inline SolutionPair concat_solution_pairs(const SolutionPair& first, const SolutionPair& second,
                                          const PairMembership& flow_set,
                                          double glue_tolerance = kDefaultGlueTolerance) {
  if (first.empty() || second.empty())
    throw ConcatenationError(ConcatenationError::Reason::not_compact, "concatenation requires compact, nonempty pairs");
  if (first.state_dim() != second.state_dim() || first.input_dim() != second.input_dim())
    throw Error("concatenation of pairs with different dimensions");

  const HybridTimeDomain dom1 = first.domain();
  const HybridTimeDomain dom2 = second.domain();
  const double T = dom1.end_time();
  const int J = dom1.jumps();
  const int n = first.state_dim();

  if ((first.arc.back() - second.arc.front()).norm() > glue_tolerance)
    throw ConcatenationError(ConcatenationError::Reason::endpoint_mismatch,
                             "concatenation endpoint mismatch: end of first pair differs from start of second");

  const FlowInterval& last1 = dom1.segments().back();
  const FlowInterval& first2 = dom2.segments().front();
  if (last1.has_interior() && first2.has_interior()) {
    const Vector u0 = *second.input.flow_value(first2.t_start, 0);
    if (!flow_set(second.arc.front(), u0))
      throw ConcatenationError(ConcatenationError::Reason::seam_outside_flow_set,
                               "concatenation seam joins two flows but the start of the second pair is outside the flow set");
  }

  std::vector<ArcSegment> arc_segments(first.arc.segments().begin(), first.arc.segments().end() - 1);
  std::vector<InputSegment> input_segments(first.input.segments().begin(), first.input.segments().end() - 1);

  // Merged interval: first's last interval without (T, J), then second's first interval shifted.
  ArcSegment merged = first.arc.segments().back();
  merged.times.pop_back();
  merged.values.resize(merged.values.size() - static_cast<std::size_t>(n));
  InputSegment merged_in;
  for (const InputPiece& p : first.input.segments().back().flow)
    if (p.t_to > p.t_from) merged_in.flow.push_back(p);

  auto shift_arc = [T](const ArcSegment& s) {
    ArcSegment out = s;
    for (double& t : out.times) t += T;
    return out;
  };
  auto shift_input = [T](const InputSegment& s) {
    InputSegment out = s;
    for (InputPiece& p : out.flow) {
      p.t_from += T;
      p.t_to += T;
    }
    return out;
  };

  const ArcSegment head2 = shift_arc(second.arc.segments().front());
  merged.times.insert(merged.times.end(), head2.times.begin(), head2.times.end());
  merged.values.insert(merged.values.end(), head2.values.begin(), head2.values.end());

  const InputSegment head2_in = shift_input(second.input.segments().front());
  const bool merged_has_interior = merged.times.back() > merged.times.front();
  for (const InputPiece& p : head2_in.flow)
    if (p.t_to > p.t_from || !merged_has_interior) merged_in.flow.push_back(p);
  if (!merged_has_interior && merged_in.flow.empty() && !first.input.segments().back().flow.empty())
    merged_in.flow.push_back(first.input.segments().back().flow.back());
  merged_in.jump = head2_in.jump;

  arc_segments.push_back(std::move(merged));
  input_segments.push_back(std::move(merged_in));
  for (std::size_t j = 1; j < second.arc.segments().size(); ++j) {
    arc_segments.push_back(shift_arc(second.arc.segments()[j]));
    input_segments.push_back(shift_input(second.input.segments()[j]));
  }

  std::vector<HybridTime> filled = first.filled_instants;
  for (const HybridTime& h : second.filled_instants) filled.push_back({h.t + T, h.j + J});

  HybridArc arc(n, std::move(arc_segments));
  HybridInput input(first.input_dim(), arc.domain(), std::move(input_segments));
  return SolutionPair(std::move(arc), std::move(input), std::move(filled));
}

}  // namespace hyrrt
