#pragma once

// Adaptive quadrature, bracketed root finding and an embedded Runge-Kutta
// integrator. Everything here is double precision and callable concurrently.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "frozenperc/error.hpp"

namespace frozenperc::numerics {

struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-12;
  std::size_t max_iter = 2000;  // subdivisions, root iterations or ODE steps

  void validate() const {
    if (!(abs >= 0.0) || !(rel >= 0.0) || !(abs + rel > 0.0))
      throw DomainError("tolerance: abs and rel must be non-negative with abs + rel > 0");
    if (max_iter == 0) throw DomainError("tolerance: max_iter must be positive");
  }
};

namespace detail {

// 15-point Gauss-Kronrod abscissae and weights, with the embedded 7-point Gauss rule.
inline constexpr std::array<long double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr std::array<long double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr std::array<long double, 4> kGaussWeights = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

template <class Real>
struct Panel {
  Real a;
  Real b;
  Real value;
  Real error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class Real, class F>
Panel<Real> gauss_kronrod_15(F& f, Real a, Real b) {
  auto w = [](long double v) { return static_cast<Real>(v); };
  const Real center = Real(0.5) * (a + b);
  const Real half = Real(0.5) * (b - a);
  const Real fc = f(center);
  Real kronrod = fc * w(kKronrodWeights[7]);
  Real gauss = fc * w(kGaussWeights[3]);
  Real abs_sum = std::abs(kronrod);
  std::array<Real, 7> f1{}, f2{};
  for (std::size_t j = 0; j < 7; ++j) {
    const Real dx = half * w(kKronrodNodes[j]);
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const Real pair = f1[j] + f2[j];
    kronrod += w(kKronrodWeights[j]) * pair;
    abs_sum += w(kKronrodWeights[j]) * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) gauss += w(kGaussWeights[j / 2]) * pair;
  }
  const Real mean = Real(0.5) * kronrod;
  Real asc = w(kKronrodWeights[7]) * std::abs(fc - mean);
  for (std::size_t j = 0; j < 7; ++j)
    asc += w(kKronrodWeights[j]) * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

  const Real result = kronrod * half;
  const Real resabs = abs_sum * std::abs(half);
  const Real resasc = asc * std::abs(half);
  Real err = std::abs((kronrod - gauss) * half);
  if (resasc != 0 && err != 0) err = resasc * std::min(Real(1), std::pow(200 * err / resasc, Real(1.5)));
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  if (resabs > std::numeric_limits<Real>::min() / (50 * eps)) err = std::max(50 * eps * resabs, err);
  if (!std::isfinite(result)) err = std::numeric_limits<Real>::infinity();
  return {a, b, result, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature of f over [a, b]. Subdivides the
// panel with the largest error estimate until the total estimate is within
// max(tol.abs, tol.rel * |I|). Integrable endpoint singularities are fine as
// long as f is never evaluated at them (the rule uses interior nodes only).
// Relative tolerances below kRoundoffRel are raised to it: each panel's error
// estimate is floored at 50 eps times its absolute integral.
template <class Real>
inline constexpr Real kRoundoffRel = 100 * std::numeric_limits<Real>::epsilon();

template <class F, std::floating_point Real>
Real integrate(F&& f, Real a, Real b, const Tolerance& tol = {}) {
  tol.validate();
  if (!(a <= b)) throw DomainError("integrate: require a <= b");
  if (a == b) return Real(0);

  std::priority_queue<detail::Panel<Real>> panels;
  panels.push(detail::gauss_kronrod_15(f, a, b));
  Real total = panels.top().value;
  Real total_err = panels.top().error;

  for (std::size_t subdivisions = 0;; ++subdivisions) {
    if (!std::isfinite(total)) throw NumericalError("integrate: integrand not finite", static_cast<double>(total), static_cast<double>(total_err));
    if (total_err <= std::max<Real>(tol.abs, std::max<Real>(tol.rel, kRoundoffRel<Real>) * std::abs(total))) return total;
    if (subdivisions >= tol.max_iter)
      throw NumericalError("integrate: subdivision budget exhausted", static_cast<double>(total),
                           static_cast<double>(total_err));

    const detail::Panel<Real> worst = panels.top();
    const Real mid = Real(0.5) * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b))
      throw NumericalError("integrate: panel cannot be subdivided further", static_cast<double>(total),
                           static_cast<double>(total_err));
    panels.pop();
    const detail::Panel<Real> left = detail::gauss_kronrod_15(f, worst.a, mid);
    const detail::Panel<Real> right = detail::gauss_kronrod_15(f, mid, worst.b);
    panels.push(left);
    panels.push(right);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    if (subdivisions % 64 == 63) {
      // Resum to shed the drift of the running updates.
      auto copy = panels;
      total = 0;
      total_err = 0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_err += copy.top().error;
        copy.pop();
      }
    }
  }
}

template <class Real>
struct BasicRootResult {
  Real value;
  Real lo;  // final bracket, always inside the initial one
  Real hi;
  std::size_t iterations;
  Real bracket_width() const { return hi - lo; }
};

using RootResult = BasicRootResult<double>;

// Brent's method: inverse quadratic / secant steps guarded by bisection. The
// iterate never leaves the current bracket. Non-finite function values are
// allowed (only their sign is used) and force a bisection step.
template <class G, std::floating_point Real>
BasicRootResult<Real> root_bracketed(G&& g, Real lo, Real hi, const Tolerance& tol = {}) {
  tol.validate();
  if (!(lo <= hi)) std::swap(lo, hi);
  Real a = lo, b = hi;
  Real fa = g(a), fb = g(b);
  if (std::isnan(fa) || std::isnan(fb)) throw DomainError("root_bracketed: function is NaN at bracket end");
  if (fa == 0) return {a, a, a, 0};
  if (fb == 0) return {b, b, b, 0};
  if (std::signbit(fa) == std::signbit(fb))
    throw DomainError("root_bracketed: invalid bracket, g(lo) and g(hi) have the same sign");

  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  Real c = a, fc = fa;
  Real d = b - a, e = d;
  for (std::size_t iter = 1; iter <= tol.max_iter; ++iter) {
    if (std::signbit(fb) == std::signbit(fc)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const Real tol1 = 2 * eps * std::abs(b) + std::max<Real>(tol.abs, tol.rel * std::abs(b)) / 2;
    const Real xm = (c - b) / 2;
    if (fb == 0) return {b, b, b, iter};
    if (std::abs(xm) <= tol1) return {b, std::min(b, c), std::max(b, c), iter};

    const bool finite = std::isfinite(fa) && std::isfinite(fb) && std::isfinite(fc);
    if (finite && std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      Real p, q;
      const Real s = fb / fa;
      if (a == c) {
        p = 2 * xm * s;
        q = 1 - s;
      } else {
        const Real qa = fa / fc, r = fb / fc;
        p = s * (2 * xm * qa * (qa - r) - (b - a) * (r - 1));
        q = (qa - 1) * (r - 1) * (s - 1);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      const Real min1 = 3 * xm * q - std::abs(tol1 * q);
      const Real min2 = std::abs(e * q);
      if (2 * p < std::min(min1, min2) && std::isfinite(p / q)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : std::copysign(tol1, xm);
    b = std::clamp(b, std::min(a, c), std::max(a, c));
    fb = g(b);
    if (std::isnan(fb)) throw NumericalError("root_bracketed: function returned NaN", static_cast<double>(b),
                                                  static_cast<double>(std::abs(c - b)));
  }
  throw NumericalError("root_bracketed: iteration budget exhausted", static_cast<double>(b),
                       static_cast<double>(std::abs(c - b)));
}

// Dormand-Prince 5(4) integration of the scalar problem y' = rhs(t, y),
// y(t0) = y0, reported at every grid point. Steps are shortened to land on
// grid points exactly; the local error per step is held below
// tol.abs + tol.rel * |y|.
template <class Rhs>
std::vector<double> ode_ivp(Rhs&& rhs, double t0, double y0, std::span<const double> grid,
                            const Tolerance& tol = {}) {
  tol.validate();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i == 0 ? grid[0] < t0 : grid[i] <= grid[i - 1])
      throw DomainError("ode_ivp: grid must be increasing and start at or after t0");
  }
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  std::vector<double> out;
  out.reserve(grid.size());
  double t = t0, y = y0;
  double k1 = rhs(t, y);
  double h = grid.empty() ? 0.0 : std::max(grid.back() - t0, 1e-3) * 1e-3;
  std::size_t steps = 0;

  for (const double target : grid) {
    while (t < target) {
      if (++steps > tol.max_iter) throw NumericalError("ode_ivp: step budget exhausted", y, 0.0);
      if (h < 16.0 * eps * std::max(1.0, std::abs(t))) throw NumericalError("ode_ivp: step underflow", y, 0.0);
      const bool last = t + h >= target;
      const double step = last ? target - t : h;
      const double k2 = rhs(t + c2 * step, y + step * (a21 * k1));
      const double k3 = rhs(t + c3 * step, y + step * (a31 * k1 + a32 * k2));
      const double k4 = rhs(t + c4 * step, y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const double k5 = rhs(t + c5 * step, y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const double k6 = rhs(t + step, y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const double y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = rhs(t + step, y_new);
      const double err_est = std::abs(step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
      const double scale = tol.abs + tol.rel * std::max(std::abs(y), std::abs(y_new));
      const double ratio = std::isfinite(err_est) ? err_est / scale : std::numeric_limits<double>::infinity();
      const double factor =
          ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
      if (ratio <= 1.0) {
        t = last ? target : t + step;
        y = y_new;
        k1 = k7;
        // A step clipped to the grid says little about the natural step size.
        if (!last) h = step * factor;
        else h = std::max(h, step * factor);
      } else {
        h = step * factor;
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace frozenperc::numerics
