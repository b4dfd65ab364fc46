#pragma once

// Critical points of the truncated generating functions and the scaling
// limit of C_N near 1/4.

#include <cmath>
#include <cstddef>
#include <numbers>

#include "frozenperc/error.hpp"
#include "frozenperc/numerics.hpp"
#include "frozenperc/sizefn.hpp"
#include "frozenperc/treecomb.hpp"

namespace frozenperc {

struct CriticalRoot {
  std::size_t N = 0;
  SizeKind size_kind = SizeKind::Volume;
  double value = 0.0;  // in (1/4, 1]
  double bracket_width = 0.0;
};

// Lower end of every critical-root bracket. C_N(1/4) < 2 strictly, so the
// bracket is valid without touching 1/4 itself.
inline constexpr double kCriticalBracketLo = 0.25 + 1e-14;
inline constexpr std::size_t kMaxCriticalN = 1'000'000;

namespace detail {
inline numerics::Tolerance critical_tolerance() { return {.abs = 1e-17, .rel = 0.0, .max_iter = 400}; }
}  // namespace detail

// x_N: the unique positive root of C_N(x) = 2.
inline CriticalRoot find_xN(std::size_t N) {
  if (N < 1 || N > kMaxCriticalN) throw CapExceeded("find_xN: N must be in [1, 1000000]");
  const auto series = SeriesEval::partial(N);
  const auto root = numerics::root_bracketed([&](double x) { return series.value(x) - 2.0; }, kCriticalBracketLo,
                                             1.0, detail::critical_tolerance());
  return {N, SizeKind::Volume, root.value, root.bracket_width()};
}

// x_N^(s): the unique positive root of x G_N(x) = 1.
inline CriticalRoot find_xN_s(const SizeFunction& s, std::size_t N) {
  const GeneratingFunction g(s.kind(), N);
  const auto root = numerics::root_bracketed([&](double x) { return x * g(x) - 1.0; }, kCriticalBracketLo, 1.0,
                                             detail::critical_tolerance());
  return {N, s.kind(), root.value, root.bracket_width()};
}

// F(x) = (2/sqrt(pi)) (sqrt(x) int_0^x e^y / sqrt(y) dy - e^x), x >= 0.
//
// Evaluated in the equivalent form
//   F(x) = (2/sqrt(pi)) (int_0^1 expm1(x v^2) / v^2 dv - 1),
// (substitute y = x v^2 in the integral and integrate by parts), whose
// integrand is smooth and positive: there is no endpoint singularity and no
// cancellation between two terms of size e^x.
inline double eval_F(double x) {
  if (!(x >= 0.0)) throw DomainError("eval_F: defined here for x >= 0 only");
  if (x == 0.0) return -2.0 / std::sqrt(std::numbers::pi);
  const double integral = numerics::integrate(
      [x](double v) {
        const double v2 = v * v;
        return v2 == 0.0 ? x : std::expm1(x * v2) / v2;
      },
      0.0, 1.0, {.abs = 1e-16, .rel = 1e-15, .max_iter = 2000});
  return 2.0 / std::sqrt(std::numbers::pi) * (integral - 1.0);
}

// sqrt(N) (C_N(1/4 + x/(4N)) - 2).
inline double scaled_gap(std::size_t N, double x) {
  if (N < 1) throw DomainError("scaled_gap: N must be >= 1");
  const double n = static_cast<double>(N);
  return std::sqrt(n) * (catalan_partial(N, 0.25 + x / (4.0 * n)) - 2.0);
}

// Positive zero of F (between 0.5 and 1).
inline double F_root() {
  return numerics::root_bracketed(eval_F, 0.5, 1.0, {.abs = 1e-14, .rel = 0.0, .max_iter = 200}).value;
}

// Smallest integer K > 0 with F(K) > 1.
inline int smallest_K_with_F_above_one() {
  int k = 1;
  while (eval_F(k) <= 1.0) ++k;
  return k;
}

}  // namespace frozenperc
