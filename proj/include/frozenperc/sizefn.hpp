#pragma once

// Size functions on clusters, an exhaustive checker for the four goodness
// conditions, the counts a_{k,m} of v1-clusters with k edges and size <= m,
// and their generating function G_N(x) = sum_k a_{k,N-1} x^k.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <type_traits>
#include <vector>

#include "frozenperc/error.hpp"
#include "frozenperc/treecomb.hpp"

namespace frozenperc {

enum class SizeKind { Volume, Depth, Diameter, Custom };

inline std::string to_string(SizeKind kind) {
  switch (kind) {
    case SizeKind::Volume: return "volume";
    case SizeKind::Depth: return "depth";
    case SizeKind::Diameter: return "diameter";
    case SizeKind::Custom: return "custom";
  }
  return "?";
}

inline SizeKind parse_size_kind(std::string_view name) {
  if (name == "volume") return SizeKind::Volume;
  if (name == "depth") return SizeKind::Depth;
  if (name == "diameter") return SizeKind::Diameter;
  throw DomainError("unknown size function '" + std::string(name) + "' (expected volume, depth or diameter)");
}

// The built-in sizes take any finite cluster given as a sorted list of heap
// indices (not only ROOT/CHILD-anchored ones), which is what the
// homomorphism check and the simulator need.

inline std::size_t cluster_volume(std::span<const Vertex> vertices) { return vertices.size() - 1; }

// Longest downward path from the topmost vertex (the smallest index).
inline std::size_t cluster_depth(std::span<const Vertex> vertices) {
  unsigned deepest = 0;
  for (const Vertex v : vertices) deepest = std::max(deepest, level_of(v));
  return deepest - level_of(vertices.front());
}

inline std::size_t cluster_diameter(std::span<const Vertex> vertices) {
  // Heights bottom-up: children always have larger indices than parents.
  std::vector<std::size_t> height(vertices.size(), 0);
  std::size_t diameter = 0;
  auto index_of = [&](Vertex v) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - vertices.begin());
  };
  for (std::size_t i = vertices.size(); i-- > 0;) {
    const Vertex v = vertices[i];
    std::size_t best = 0, second = 0;
    bool any = false;
    const std::array<Vertex, 2> kids = v == kRootVertex ? std::array<Vertex, 2>{kChildVertex, kChildVertex}
                                                        : std::array<Vertex, 2>{2 * v, 2 * v + 1};
    for (std::size_t c = 0; c < (v == kRootVertex ? 1u : 2u); ++c) {
      if (const auto j = index_of(kids[c])) {
        const std::size_t h = height[*j] + 1;
        any = true;
        if (h > best) {
          second = best;
          best = h;
        } else if (h > second) {
          second = h;
        }
      }
    }
    height[i] = any ? best : 0;
    diameter = std::max(diameter, best + second);
  }
  return diameter;
}

class SizeFunction {
 public:
  using Evaluator = std::function<std::size_t(std::span<const Vertex>)>;

  static SizeFunction volume() { return {"volume", SizeKind::Volume, cluster_volume}; }
  static SizeFunction depth() { return {"depth", SizeKind::Depth, cluster_depth}; }
  static SizeFunction diameter() { return {"diameter", SizeKind::Diameter, cluster_diameter}; }
  static SizeFunction custom(std::string name, Evaluator eval) {
    return {std::move(name), SizeKind::Custom, std::move(eval)};
  }
  static SizeFunction builtin(SizeKind kind) {
    switch (kind) {
      case SizeKind::Volume: return volume();
      case SizeKind::Depth: return depth();
      case SizeKind::Diameter: return diameter();
      case SizeKind::Custom: break;
    }
    throw DomainError("builtin: CUSTOM has no built-in evaluator");
  }

  const std::string& name() const noexcept { return name_; }
  SizeKind kind() const noexcept { return kind_; }
  bool is_builtin() const noexcept { return kind_ != SizeKind::Custom; }

  std::size_t operator()(std::span<const Vertex> sorted_vertices) const { return eval_(sorted_vertices); }

 private:
  SizeFunction(std::string name, SizeKind kind, Evaluator eval)
      : name_(std::move(name)), kind_(kind), eval_(std::move(eval)) {}

  std::string name_;
  SizeKind kind_;
  Evaluator eval_;
};

inline std::size_t eval_size(const SizeFunction& s, const ClusterShape& c) { return s(c.vertices()); }

// ---------------------------------------------------------------------------
// Goodness checks

enum class Verdict { Pass, Fail, NotVerifiable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotVerifiable: return "not verifiable";
  }
  return "?";
}

struct ConditionCheck {
  Verdict verdict = Verdict::Pass;
  std::size_t cases_checked = 0;
  std::string detail;
  // For a failure: the offending cluster(s). For monotonicity (C, C') with C
  // inside C'; for homomorphisms (C, h(C)); otherwise (C, C).
  std::optional<std::pair<std::vector<Vertex>, std::vector<Vertex>>> witness;
};

struct GoodnessReport {
  std::string size_name;
  std::size_t k_cap = 0;
  std::vector<Vertex> homomorphism_targets;  // images of v1 under the re-rootings tried
  // Indexed 0..3: homomorphism compatibility, finiteness, monotonicity, volume bound.
  std::array<ConditionCheck, 4> conditions;

  bool all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const ConditionCheck& c) { return c.verdict == Verdict::Pass; });
  }
};

inline constexpr std::size_t kGoodnessCap = 8;
inline constexpr unsigned kHomomorphismDepth = 3;  // re-root v1 onto every vertex at level <= 3

inline BigInt count_by_size(const SizeFunction& s, std::size_t k, std::size_t m);

namespace detail {

inline std::vector<Vertex> to_vector(std::span<const Vertex> v) { return {v.begin(), v.end()}; }

inline bool is_connected(std::span<const Vertex> sorted) {
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!std::binary_search(sorted.begin(), sorted.end(), parent_of(sorted[i]))) return false;
  return true;
}

}  // namespace detail

inline GoodnessReport check_good_size(const SizeFunction& s, std::size_t k_cap) {
  if (k_cap > kGoodnessCap) throw CapExceeded("check_good_size: k_cap must be <= 8");
  GoodnessReport report;
  report.size_name = s.name();
  report.k_cap = k_cap;
  for (Vertex u = 1; level_of(u) <= kHomomorphismDepth; ++u) report.homomorphism_targets.push_back(u);

  std::vector<ClusterShape> clusters;
  std::vector<ClusterShape> child_clusters;
  for (std::size_t k = 0; k <= k_cap; ++k) {
    for (auto& c : enumerate_clusters(Anchor::Child, k)) {
      child_clusters.push_back(c);
      clusters.push_back(std::move(c));
    }
    for (auto& c : enumerate_clusters(Anchor::Root, k)) clusters.push_back(std::move(c));
  }
  auto fail = [](ConditionCheck& check, std::string detail, std::vector<Vertex> a, std::vector<Vertex> b) {
    if (check.verdict == Verdict::Fail) return;
    check.verdict = Verdict::Fail;
    check.detail = std::move(detail);
    check.witness = std::make_pair(std::move(a), std::move(b));
  };

  // 1. s(h(C)) = s(C) under downward re-rootings of v1-clusters.
  auto& hom = report.conditions[0];
  std::vector<Vertex> image;
  for (const auto& c : child_clusters) {
    const std::size_t base = s(c.vertices());
    for (const Vertex u : report.homomorphism_targets) {
      image.clear();
      for (const Vertex v : c.vertices()) image.push_back(reroot(v, u));
      std::sort(image.begin(), image.end());
      ++hom.cases_checked;
      if (s(image) != base) fail(hom, "size changes under re-rooting to vertex " + std::to_string(u),
                                 detail::to_vector(c.vertices()), image);
    }
  }
  if (hom.verdict == Verdict::Pass) hom.detail = "re-rootings of v1 onto levels <= 3";

  // 2. Finiteness: a v1-cluster of size <= m has at most 2^{m+1} - 2 edges,
  // so no cluster with 2^{m+1} - 1 edges is counted.
  auto& fin = report.conditions[1];
  if (!s.is_builtin()) {
    fin.verdict = Verdict::NotVerifiable;
    fin.detail = "custom size function: finiteness cannot be checked exhaustively";
  } else {
    for (std::size_t m = 0; m <= 3; ++m) {
      ++fin.cases_checked;
      const std::size_t k = (std::size_t{2} << m) - 1;
      if (count_by_size(s, k, m) != 0) {
        fin.verdict = Verdict::Fail;
        fin.detail = "cluster of size <= " + std::to_string(m) + " with " + std::to_string(k) + " edges";
      }
    }
    if (fin.verdict == Verdict::Pass) fin.detail = "analytic: size <= m forces volume <= 2^(m+1) - 2 (spot-checked m <= 3)";
  }

  // 3. Monotonicity over every connected sub-cluster of every enumerated cluster.
  auto& mono = report.conditions[2];
  std::vector<Vertex> sub;
  for (const auto& outer : clusters) {
    const auto vs = outer.vertices();
    const std::size_t outer_size = s(vs);
    const std::size_t n = vs.size();
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
      sub.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (std::uint32_t{1} << i)) sub.push_back(vs[i]);
      if (!detail::is_connected(sub)) continue;
      ++mono.cases_checked;
      if (s(sub) > outer_size) fail(mono, "sub-cluster is larger than its super-cluster", sub, detail::to_vector(vs));
    }
  }
  if (mono.verdict == Verdict::Pass) mono.detail = "all connected sub-clusters";

  // 4. s(C) <= |C|.
  auto& bound = report.conditions[3];
  for (const auto& c : clusters) {
    ++bound.cases_checked;
    if (s(c.vertices()) > c.volume())
      fail(bound, "size exceeds volume", detail::to_vector(c.vertices()), detail::to_vector(c.vertices()));
  }
  if (bound.verdict == Verdict::Pass) bound.detail = "all enumerated clusters";
  return report;
}

// ---------------------------------------------------------------------------
// Counting and generating functions

inline constexpr std::size_t kCountCap = 64;  // largest k for the DEPTH/DIAMETER coefficient DP
inline constexpr std::size_t kVolumeGCap = 1'000'000;
inline constexpr std::size_t kDepthGCap = 10'000;
inline constexpr std::size_t kDiameterGCap = 64;

namespace detail {

using Poly = std::vector<BigInt>;  // coefficients, truncated at a fixed degree

inline Poly mul(const Poly& a, const Poly& b, std::size_t degree) {
  Poly out(degree + 1, 0);
  for (std::size_t i = 0; i < a.size() && i <= degree; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size() && i + j <= degree; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// x * p, truncated.
inline Poly shift(const Poly& p, std::size_t degree) {
  Poly out(degree + 1, 0);
  for (std::size_t i = 0; i + 1 <= degree && i < p.size(); ++i) out[i + 1] = p[i];
  return out;
}

// Clusters hanging at a vertex with exact height j and diameter <= m:
//   A_0 = 1,
//   A_j = 2x A_{j-1} + x^2 * sum_{max(a,b) = j-1, a+b+2 <= m} A_a A_b   (j <= m).
// The pair sum splits into a = j-1 with b <= min(j-1, m-1-j) and b = j-1
// with a <= min(j-2, m-1-j), which prefix sums turn into two products.
template <class T, class Add, class Times, class ByX>
std::vector<T> diameter_height_table(std::size_t m, std::size_t max_height, const T& one, const T& zero,
                                     Add add, Times times, ByX by_x) {
  const std::size_t top = std::min(m, max_height);
  std::vector<T> a{one};
  std::vector<T> prefix{one};
  auto prefix_at = [&](long i) -> T { return i < 0 ? zero : prefix[static_cast<std::size_t>(i)]; };
  for (std::size_t j = 1; j <= top; ++j) {
    const T& prev = a[j - 1];
    const long h = static_cast<long>(j) - 1;
    const long room = static_cast<long>(m) - 1 - static_cast<long>(j);
    const T pairs = add(times(prev, prefix_at(std::min(h, room))), times(prev, prefix_at(std::min(h - 1, room))));
    T next = add(add(by_x(prev), by_x(prev)), by_x(by_x(pairs)));
    a.push_back(next);
    prefix.push_back(add(prefix.back(), a.back()));
  }
  return a;
}

}  // namespace detail

// a_{k,m}: number of clusters of v1 avoiding e0 with k edges and size <= m.
inline BigInt count_by_size(const SizeFunction& s, std::size_t k, std::size_t m) {
  switch (s.kind()) {
    case SizeKind::Volume:
      return k <= m ? catalan(k + 1) : BigInt(0);
    case SizeKind::Depth: {
      if (k > kCountCap) throw CapExceeded("count_by_size: k must be <= 64 for depth");
      detail::Poly d{1};
      for (std::size_t h = 1; h <= std::min(m, k); ++h) {
        detail::Poly inner = detail::shift(d, k);
        inner[0] += 1;
        d = detail::mul(inner, inner, k);
      }
      return k < d.size() ? d[k] : BigInt(0);
    }
    case SizeKind::Diameter: {
      if (k > kCountCap) throw CapExceeded("count_by_size: k must be <= 64 for diameter");
      const detail::Poly one{1};
      const detail::Poly zero{0};
      auto add = [k](const detail::Poly& a, const detail::Poly& b) {
        detail::Poly out(k + 1, 0);
        for (std::size_t i = 0; i <= k; ++i) {
          if (i < a.size()) out[i] += a[i];
          if (i < b.size()) out[i] += b[i];
        }
        return out;
      };
      auto times = [k](const detail::Poly& a, const detail::Poly& b) { return detail::mul(a, b, k); };
      auto by_x = [k](const detail::Poly& p) { return detail::shift(p, k); };
      const auto table = detail::diameter_height_table<detail::Poly>(m, k, one, zero, add, times, by_x);
      BigInt total = 0;
      for (const auto& p : table)
        if (k < p.size()) total += p[k];
      return total;
    }
    case SizeKind::Custom: break;
  }
  throw DomainError("count_by_size: only built-in size functions are supported");
}

// G_N(x) for a built-in size function, reusable across many x. Values past
// the radius of growth saturate to +inf.
class GeneratingFunction {
 public:
  GeneratingFunction(SizeKind kind, std::size_t N)
      : kind_(kind), n_(N), series_(SeriesEval::partial(kind == SizeKind::Volume ? N : 0)) {
    if (N < 1) throw DomainError("generating function: N must be >= 1");
    switch (kind) {
      case SizeKind::Volume:
        if (N > kVolumeGCap) throw CapExceeded("N exceeds the volume cap of 1000000");
        break;
      case SizeKind::Depth:
        if (N > kDepthGCap) throw CapExceeded("N exceeds the depth cap of 10000");
        break;
      case SizeKind::Diameter:
        if (N > kDiameterGCap) throw CapExceeded("N exceeds the diameter cap of 64");
        break;
      case SizeKind::Custom:
        throw DomainError("generating function: only built-in size functions are supported");
    }
  }

  SizeKind kind() const noexcept { return kind_; }
  std::size_t order() const noexcept { return n_; }

  double operator()(double x) const { return evaluate(x); }

  // Real is double or long double.
  template <std::floating_point Real>
  Real evaluate(Real x) const {
    if (!(x >= 0)) throw DomainError("generating function: x must be >= 0");
    switch (kind_) {
      case SizeKind::Volume:
        if constexpr (std::is_same_v<Real, double>) return series_.shifted_value(x);
        else return static_cast<Real>(series_.shifted_value_ext(x));
      case SizeKind::Depth: {
        // D_h = (1 + x D_{h-1})^2, D_0 = 1; G_N = D_{N-1}.
        Real d = 1;
        for (std::size_t h = 1; h < n_ && std::isfinite(d); ++h) {
          const Real inner = 1 + x * d;
          d = inner * inner;
        }
        return d;
      }
      case SizeKind::Diameter: {
        const auto table = detail::diameter_height_table<Real>(
            n_ - 1, n_ - 1, Real(1), Real(0), std::plus<>{}, std::multiplies<>{}, [x](Real v) { return x * v; });
        Real total = 0;
        for (const Real v : table) total += v;
        return std::isnan(total) ? std::numeric_limits<Real>::infinity() : total;
      }
      case SizeKind::Custom: break;
    }
    return std::numeric_limits<Real>::quiet_NaN();
  }

 private:
  SizeKind kind_;
  std::size_t n_;
  SeriesEval series_;
};

inline double eval_G(const SizeFunction& s, std::size_t N, double x) { return GeneratingFunction(s.kind(), N)(x); }

}  // namespace frozenperc
