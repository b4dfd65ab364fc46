#pragma once

// The root-edge closure probability beta_N(t) = P_N(e0 closed at time t),
// computed two independent ways (implicit equation and ODE), Aldous' limit
// beta_inf, and the exact root-cluster law that follows from beta_N.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frozenperc/critical.hpp"
#include "frozenperc/error.hpp"
#include "frozenperc/numerics.hpp"
#include "frozenperc/sizefn.hpp"
#include "frozenperc/treecomb.hpp"

namespace frozenperc {

enum class BetaMethod { Implicit, Ode, Closed };

inline std::string to_string(BetaMethod m) {
  switch (m) {
    case BetaMethod::Implicit: return "implicit";
    case BetaMethod::Ode: return "ode";
    case BetaMethod::Closed: return "closed";
  }
  return "?";
}

struct BetaCurve {
  SizeKind size_kind = SizeKind::Volume;
  std::optional<std::size_t> N;  // empty for the infinite-parameter limit
  std::vector<double> t_grid;
  std::vector<double> values;
  BetaMethod method = BetaMethod::Implicit;
  numerics::Tolerance tolerance;

  double gamma(std::size_t i) const { return t_grid[i] * values[i]; }
};

inline std::vector<double> uniform_grid(std::size_t points) {
  if (points < 2) throw DomainError("grid needs at least 2 points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

inline void require_unit_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("t must lie in [0, 1]");
}

// Aldous' frozen percolation: 1 - t up to 1/2, then 1/(4t).
inline double beta_inf(double t) {
  require_unit_time(t);
  return t <= 0.5 ? 1.0 - t : 1.0 / (4.0 * t);
}

inline BetaCurve beta_inf_curve(std::span<const double> grid) {
  BetaCurve curve{.size_kind = SizeKind::Volume, .N = std::nullopt, .t_grid = {grid.begin(), grid.end()},
                  .values = {}, .method = BetaMethod::Closed, .tolerance = {.abs = 0.0, .rel = 1e-16}};
  for (const double t : grid) curve.values.push_back(beta_inf(t));
  return curve;
}

// Distance kept from the critical point when bracketing z: t z < x_N is strict.
inline constexpr double kCriticalMargin = 1e-12;

// Solves  int_0^{tz} G(x) / (1 - x G(x)) dx + log z = 0  for z with t z < x_N^(s).
// The left side increases strictly in z, from -inf to +inf on that range.
// Holds G and x_N^(s) so that a whole grid reuses them. Works in long double:
// for t < 1/2 the true beta_N - beta_inf can be far below one double ulp, and
// the double result must then round onto beta_inf, not below it.
class ImplicitBeta {
 public:
  using Real = long double;

  ImplicitBeta(const SizeFunction& s, std::size_t N)
      : g_(s.kind(), N), critical_(find_xN_s(s, N)) {}

  const CriticalRoot& critical() const noexcept { return critical_; }

  // 1 - x G(x) carries an absolute rounding error of a few ulps, so within
  // distance d of x_N the integrand is only known to relative accuracy
  // ~eps / d. The absolute target follows that floor.
  numerics::Tolerance tolerance_at(Real w) const {
    const Real xc = critical_.value;
    const Real floor = 50 * std::numeric_limits<Real>::epsilon() * xc / (xc - w);
    return {.abs = static_cast<double>(1e-17L + floor), .rel = 0.0, .max_iter = 4000};
  }

  Real integrand(Real x) const {
    const Real g = g_.evaluate(x);
    return g / (1 - x * g);
  }

  Real phi(Real w) const { return phi(w, tolerance_at(w)); }

  Real phi(Real w, const numerics::Tolerance& tol) const {
    return numerics::integrate([this](Real x) { return integrand(x); }, Real(0), w, tol);
  }

  double operator()(double t) const {
    require_unit_time(t);
    if (t == 0.0) return 1.0;
    const Real tt = t;
    const Real hi = std::min<Real>(1, (static_cast<Real>(critical_.value) - kCriticalMargin) / tt);
    auto equation = [&](Real z) { return phi(tt * z) + std::log(z); };
    try {
      // The root sits within kCriticalMargin / t of x_N / t: that is as close
      // as the bracket is allowed to get.
      if (equation(hi) <= 0) return static_cast<double>(hi);
      const auto root = numerics::root_bracketed(equation, Real(1e-3L), hi, {.abs = 1e-18, .rel = 0.0, .max_iter = 200});
      return static_cast<double>(root.value);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("beta_implicit: ") + e.what() + " at t = " + std::to_string(t),
                           e.best_estimate(), e.error_bound());
    }
  }

 private:
  GeneratingFunction g_;
  CriticalRoot critical_;
};

inline double beta_implicit(const SizeFunction& s, std::size_t N, double t) { return ImplicitBeta(s, N)(t); }

inline BetaCurve beta_implicit_curve(const SizeFunction& s, std::size_t N, std::span<const double> grid) {
  const ImplicitBeta solver(s, N);
  BetaCurve curve{.size_kind = s.kind(), .N = N, .t_grid = {grid.begin(), grid.end()}, .values = {},
                  .method = BetaMethod::Implicit, .tolerance = {.abs = 1e-10, .rel = 0.0}};
  curve.values.reserve(grid.size());
  for (const double t : grid) curve.values.push_back(solver(t));
  return curve;
}

// beta' = -beta^2 G(t beta), beta(0) = 1. With G written as a series in x
// (no division by x) the right side is regular at t = 0, where it equals -1.
inline BetaCurve beta_ode(const SizeFunction& s, std::size_t N, std::span<const double> grid,
                          const numerics::Tolerance& tol = {.abs = 1e-10, .rel = 1e-10, .max_iter = 100000}) {
  for (const double t : grid) require_unit_time(t);
  const GeneratingFunction g(s.kind(), N);
  auto rhs = [&g](double t, double beta) { return -beta * beta * g(std::max(0.0, t * beta)); };
  BetaCurve curve{.size_kind = s.kind(), .N = N, .t_grid = {grid.begin(), grid.end()}, .values = {},
                  .method = BetaMethod::Ode, .tolerance = tol};
  curve.values = numerics::ode_ivp(rhs, 0.0, 1.0, grid, tol);
  return curve;
}

// Checks of the structural properties every beta curve must have. `slack`
// absorbs the numerical accuracy of the curve.
struct CurveCheck {
  bool starts_at_one = true;
  bool non_increasing = true;
  bool shifted_non_decreasing = true;  // beta(t) - 1 + t
  bool gamma_non_decreasing = true;    // t beta(t)
  bool gamma_below_critical = true;
  double min_gap = 0.0;  // min and max of beta - beta_inf over the grid
  double max_gap = 0.0;

  bool ok() const {
    return starts_at_one && non_increasing && shifted_non_decreasing && gamma_non_decreasing && gamma_below_critical;
  }
};

inline CurveCheck check_curve(const BetaCurve& curve, double critical_x, double slack) {
  CurveCheck check;
  const auto& t = curve.t_grid;
  const auto& b = curve.values;
  check.min_gap = std::numeric_limits<double>::infinity();
  check.max_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (t[i] == 0.0 && std::abs(b[i] - 1.0) > slack) check.starts_at_one = false;
    if (curve.gamma(i) >= critical_x + slack) check.gamma_below_critical = false;
    const double gap = b[i] - beta_inf(t[i]);
    check.min_gap = std::min(check.min_gap, gap);
    check.max_gap = std::max(check.max_gap, gap);
    if (i == 0) continue;
    if (b[i] > b[i - 1] + slack) check.non_increasing = false;
    if (b[i] - 1.0 + t[i] < b[i - 1] - 1.0 + t[i - 1] - slack) check.shifted_non_decreasing = false;
    if (curve.gamma(i) < curve.gamma(i - 1) - slack) check.gamma_non_decreasing = false;
  }
  return check;
}

// ---------------------------------------------------------------------------
// Root-cluster law (volume size only)

// P_N(C_t = C) = t^|C| beta^|dC| = beta (t beta)^|C| for a ROOT cluster with |C| < N.
inline double cluster_prob_given_beta(double beta, std::size_t N, double t, const ClusterShape& c) {
  if (c.anchor() != Anchor::Root) throw DomainError("cluster_prob: cluster must be anchored at the root vertex");
  if (c.volume() >= N) throw DomainError("cluster_prob: requires |C| < N");
  return std::pow(t, static_cast<double>(c.volume())) * std::pow(beta, static_cast<double>(boundary_size(c)));
}

inline double cluster_prob(std::size_t N, double t, const ClusterShape& c) {
  if (c.anchor() != Anchor::Root) throw DomainError("cluster_prob: cluster must be anchored at the root vertex");
  if (c.volume() >= N) throw DomainError("cluster_prob: requires |C| < N");
  return cluster_prob_given_beta(beta_implicit(SizeFunction::volume(), N, t), N, t, c);
}

// Law of |C_t|: P(|C_t| = n) = c_n beta (t beta)^n for n < N, the rest is frozen.
class SizeDistribution {
 public:
  SizeDistribution(std::size_t N, double t, double beta) : n_(N), t_(t), beta_(beta) {
    if (N < 1) throw DomainError("size_distribution: N must be >= 1");
    require_unit_time(t);
    const double gamma = t * beta;
    probs_.resize(N);
    double term = beta;
    for (std::size_t n = 0; n < N; ++n) {
      probs_[n] = term;
      const double nn = static_cast<double>(n);
      term *= gamma * 2.0 * (2.0 * nn + 1.0) / (nn + 2.0);
    }
    // Suffix sums, accumulated from the small end of the tail.
    suffix_.assign(N + 1, 0.0);
    for (std::size_t n = N; n-- > 0;) suffix_[n] = suffix_[n + 1] + probs_[n];
  }

  std::size_t N() const noexcept { return n_; }
  double t() const noexcept { return t_; }
  double beta() const noexcept { return beta_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double prob(std::size_t n) const { return n < n_ ? probs_[n] : 0.0; }

  double frozen_prob() const { return 1.0 - suffix_[0]; }

  // P(k_lo <= |C_t| < k_hi) with k_hi capped at N.
  double range_prob(std::size_t k_lo, std::size_t k_hi) const {
    k_hi = std::min(k_hi, n_);
    if (k_lo >= k_hi) return 0.0;
    return suffix_[k_lo] - suffix_[k_hi];
  }

  // P(k <= |C_t| < N).
  double tail_prob(std::size_t k) const { return k >= n_ ? 0.0 : suffix_[k]; }

 private:
  std::size_t n_;
  double t_;
  double beta_;
  std::vector<double> probs_;
  std::vector<double> suffix_;
};

inline SizeDistribution size_distribution(std::size_t N, double t) {
  return SizeDistribution(N, t, beta_implicit(SizeFunction::volume(), N, t));
}

}  // namespace frozenperc
