#pragma once

// Catalan numbers, their truncated and closed generating functions, and
// exhaustive enumeration of small clusters of the planted binary tree.
//
// Vertices use heap indices: the root vertex v0 is 0, its only neighbour v1
// is 1, and the children of i >= 1 are 2i and 2i+1. The edge entering
// vertex i (i >= 1) is identified with i; edge 1 is the root edge e0.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "frozenperc/error.hpp"

namespace frozenperc {

using BigInt = boost::multiprecision::cpp_int;
using Vertex = std::uint32_t;

inline constexpr Vertex kRootVertex = 0;   // v0
inline constexpr Vertex kChildVertex = 1;  // v1

inline constexpr Vertex parent_of(Vertex v) { return v <= 1 ? 0 : v / 2; }

// Distance from v0: level(0) = 0, level(1) = 1, level(2) = level(3) = 2, ...
inline constexpr unsigned level_of(Vertex v) { return static_cast<unsigned>(std::bit_width(v)); }

// Maps a vertex of the subtree hanging below v1 onto the subtree hanging
// below `target`, preserving the left/right path. This is the downward
// re-rooting injective homomorphism; target 1 is the identity.
inline constexpr Vertex reroot(Vertex v, Vertex target) {
  const unsigned depth = level_of(v) - 1;
  return (target << depth) + (v - (Vertex{1} << depth));
}

enum class Anchor { Root, Child };

inline std::string to_string(Anchor a) { return a == Anchor::Root ? "ROOT" : "CHILD"; }

// A finite connected subtree containing its anchor vertex (v0 for Root, v1
// for Child). Child-anchored clusters never contain v0. Vertices are kept
// sorted so that equal clusters compare equal.
class ClusterShape {
 public:
  static ClusterShape empty(Anchor anchor) {
    return ClusterShape(anchor, {anchor == Anchor::Root ? kRootVertex : kChildVertex});
  }

  // Validates connectivity and the anchor conditions; throws DomainError.
  static ClusterShape from_vertices(Anchor anchor, std::vector<Vertex> vertices) {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    const Vertex anchor_vertex = anchor == Anchor::Root ? kRootVertex : kChildVertex;
    if (vertices.empty() || vertices.front() != anchor_vertex)
      throw DomainError("cluster must contain its anchor vertex and, for CHILD, not v0");
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (!std::binary_search(vertices.begin(), vertices.end(), parent_of(vertices[i])))
        throw DomainError("cluster vertices are not connected");
    }
    return ClusterShape(anchor, std::move(vertices));
  }

  Anchor anchor() const noexcept { return anchor_; }
  std::span<const Vertex> vertices() const noexcept { return vertices_; }
  std::size_t volume() const noexcept { return vertices_.size() - 1; }
  bool is_empty() const noexcept { return vertices_.size() == 1; }
  bool contains(Vertex v) const { return std::binary_search(vertices_.begin(), vertices_.end(), v); }

  // (parent, child) pairs.
  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    out.reserve(volume());
    for (std::size_t i = 1; i < vertices_.size(); ++i) out.emplace_back(parent_of(vertices_[i]), vertices_[i]);
    return out;
  }

  friend bool operator==(const ClusterShape&, const ClusterShape&) = default;

 private:
  ClusterShape(Anchor anchor, std::vector<Vertex> vertices) : anchor_(anchor), vertices_(std::move(vertices)) {}

  Anchor anchor_;
  std::vector<Vertex> vertices_;
};

// Exact c_k = binom(2k, k) / (k + 1) by c_{k+1} = c_k * 2(2k+1) / (k+2).
inline BigInt catalan(std::size_t k) {
  BigInt c = 1;
  for (std::size_t j = 0; j < k; ++j) {
    c *= 2 * (2 * j + 1);
    c /= (j + 2);
  }
  return c;
}

// C_N(x) = sum_{k<=N} c_k x^k, each term obtained from the previous one by the
// ratio x * 2(2k+1)/(k+2), accumulated with Neumaier compensation. For
// x > 1/4 the sum grows like (4x)^N and saturates to +inf once it passes
// the double range.
inline double catalan_partial(std::size_t N, double x) {
  if (!std::isfinite(x)) throw DomainError("catalan_partial: x must be finite");
  double term = 1.0, sum = 1.0, comp = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    term *= x * (2.0 * (2.0 * static_cast<double>(k) + 1.0) / (static_cast<double>(k) + 2.0));
    const double next = sum + term;
    if (std::abs(sum) >= std::abs(term)) comp += (sum - next) + term;
    else comp += (term - next) + sum;
    sum = next;
    if (!std::isfinite(sum)) return sum;
  }
  return sum + comp;
}

// C(x) = 2 / (1 + sqrt(1 - 4x)), the branch that is stable at x = 0.
inline double catalan_closed(double x) {
  if (!(x >= -0.25 && x <= 0.25)) throw DomainError("catalan_closed: requires |x| <= 1/4");
  return 2.0 / (1.0 + std::sqrt(1.0 - 4.0 * x));
}

// Reusable evaluator for C_N and for (C_N(x) - 1)/x (the latter without a
// division, so it is exact at x = 0). The partial-sum mode stores the scaled
// coefficients c_k / 4^k, built with the same ratio recurrence in extended
// precision, and evaluates by Horner's rule in y = 4x.
class SeriesEval {
 public:
  enum class Mode { PartialSum, ClosedForm };

  static SeriesEval partial(std::size_t N) { return SeriesEval(Mode::PartialSum, N); }
  static SeriesEval closed() { return SeriesEval(Mode::ClosedForm, 0); }

  Mode mode() const noexcept { return mode_; }
  std::size_t order() const noexcept { return order_; }

  double value(double x) const {
    if (mode_ == Mode::ClosedForm) return catalan_closed(x);
    return horner(scaled_, 0, 4.0 * x);
  }

  // (C_N(x) - 1) / x = sum_{k<N} c_{k+1} x^k.
  double shifted_value(double x) const {
    if (mode_ == Mode::ClosedForm) {
      if (x == 0.0) return 1.0;
      return (catalan_closed(x) - 1.0) / x;
    }
    return 4.0 * horner(scaled_, 1, 4.0 * x);
  }

  // Same in extended precision (partial-sum mode).
  long double shifted_value_ext(long double x) const {
    if (mode_ == Mode::ClosedForm) throw DomainError("SeriesEval: extended precision needs partial-sum mode");
    return 4.0L * horner(scaled_ext_, 1, 4.0L * x);
  }

 private:
  SeriesEval(Mode mode, std::size_t N) : mode_(mode), order_(N) {
    if (mode_ != Mode::PartialSum) return;
    scaled_.resize(N + 1);
    scaled_ext_.resize(N + 1);
    long double s = 1.0L;
    for (std::size_t k = 0; k <= N; ++k) {
      scaled_ext_[k] = s;
      scaled_[k] = static_cast<double>(s);
      const auto kk = static_cast<long double>(k);
      s *= (2.0L * kk + 1.0L) / (2.0L * (kk + 2.0L));
    }
  }

  template <class Real>
  static Real horner(const std::vector<Real>& coeffs, std::size_t first, Real y) {
    Real acc = 0;
    for (std::size_t k = coeffs.size(); k-- > first;) acc = acc * y + coeffs[k];
    return acc;
  }

  Mode mode_;
  std::size_t order_;
  std::vector<double> scaled_;
  std::vector<long double> scaled_ext_;
};

inline constexpr std::size_t kEnumerationCap = 12;

namespace detail {

// All clusters hanging below v1 with exactly j edges, for j = 0..k.
inline std::vector<std::vector<std::vector<Vertex>>> child_clusters_up_to(std::size_t k) {
  std::vector<std::vector<std::vector<Vertex>>> by_size(k + 1);
  by_size[0].push_back({kChildVertex});
  auto shifted = [](const std::vector<Vertex>& shape, Vertex target, std::vector<Vertex>& out) {
    for (const Vertex v : shape) out.push_back(reroot(v, target));
  };
  for (std::size_t j = 1; j <= k; ++j) {
    auto& level = by_size[j];
    for (const Vertex side : {Vertex{2}, Vertex{3}}) {
      for (const auto& sub : by_size[j - 1]) {
        std::vector<Vertex> shape{kChildVertex};
        shape.reserve(j + 1);
        shifted(sub, side, shape);
        std::sort(shape.begin(), shape.end());
        level.push_back(std::move(shape));
      }
    }
    for (std::size_t left = 0; j >= 2 && left <= j - 2; ++left) {
      for (const auto& l : by_size[left]) {
        for (const auto& r : by_size[j - 2 - left]) {
          std::vector<Vertex> shape{kChildVertex};
          shape.reserve(j + 1);
          shifted(l, 2, shape);
          shifted(r, 3, shape);
          std::sort(shape.begin(), shape.end());
          level.push_back(std::move(shape));
        }
      }
    }
  }
  return by_size;
}

}  // namespace detail

// Every cluster of the given anchor with exactly k edges: c_{k+1} of them for
// CHILD and c_k for ROOT. k is capped at 12 (742900 shapes).
inline std::vector<ClusterShape> enumerate_clusters(Anchor anchor, std::size_t k) {
  if (k > kEnumerationCap) throw CapExceeded("enumeration cap: k must be <= 12");
  std::vector<ClusterShape> out;
  if (anchor == Anchor::Root) {
    if (k == 0) {
      out.push_back(ClusterShape::empty(Anchor::Root));
      return out;
    }
    auto by_size = detail::child_clusters_up_to(k - 1);
    out.reserve(by_size[k - 1].size());
    for (auto& shape : by_size[k - 1]) {
      shape.insert(shape.begin(), kRootVertex);
      out.push_back(ClusterShape::from_vertices(Anchor::Root, std::move(shape)));
    }
    return out;
  }
  auto by_size = detail::child_clusters_up_to(k);
  out.reserve(by_size[k].size());
  for (auto& shape : by_size[k]) out.push_back(ClusterShape::from_vertices(Anchor::Child, std::move(shape)));
  return out;
}

// Counts edges outside C that touch a vertex of C. For CHILD clusters e0 is
// excluded, so the result is |C| + 2; for ROOT clusters it is |C| + 1.
inline std::size_t boundary_size(const ClusterShape& c) {
  std::vector<Vertex> boundary;  // edges named by their lower endpoint
  auto consider = [&](Vertex edge) {
    if (!c.contains(edge)) boundary.push_back(edge);
  };
  for (const Vertex v : c.vertices()) {
    if (v == kRootVertex) {
      consider(kChildVertex);
      continue;
    }
    if (!c.contains(parent_of(v))) boundary.push_back(v);
    consider(2 * v);
    consider(2 * v + 1);
  }
  std::sort(boundary.begin(), boundary.end());
  boundary.erase(std::unique(boundary.begin(), boundary.end()), boundary.end());
  if (c.anchor() == Anchor::Child) std::erase(boundary, kChildVertex);
  return boundary.size();
}

}  // namespace frozenperc
