#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "frozenperc/beta.hpp"
#include "frozenperc/numerics.hpp"

using namespace frozenperc;
using namespace frozenperc::numerics;

TEST(Tolerance, Validation) {
  EXPECT_THROW((Tolerance{.abs = 0.0, .rel = 0.0}.validate()), DomainError);
  EXPECT_THROW((Tolerance{.abs = -1.0, .rel = 1.0}.validate()), DomainError);
  EXPECT_THROW((Tolerance{.abs = 1e-9, .rel = 0.0, .max_iter = 0}.validate()), DomainError);
  EXPECT_NO_THROW((Tolerance{.abs = 1e-9, .rel = 0.0}.validate()));
}

TEST(Integrate, Polynomial) { EXPECT_NEAR(integrate([](double x) { return x * x; }, 0.0, 1.0), 1.0 / 3.0, 1e-14); }

TEST(Integrate, InverseSqrtEndpointSingularity) {
  EXPECT_NEAR(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {.abs = 1e-10, .rel = 0.0}), 2.0,
              1e-8);
}

TEST(Integrate, LogSingularity) {
  EXPECT_NEAR(integrate([](double x) { return std::log(x); }, 0.0, 1.0, {.abs = 1e-12, .rel = 0.0}), -1.0, 1e-10);
}

TEST(Integrate, EmptyAndReversed) {
  EXPECT_EQ(integrate([](double) { return 1.0; }, 2.0, 2.0), 0.0);
  EXPECT_THROW(integrate([](double) { return 1.0; }, 1.0, 0.0), DomainError);
}

TEST(Integrate, BudgetExhaustedCarriesEstimate) {
  try {
    integrate([](double x) { return std::sin(1.0 / x) / x; }, 1e-6, 1.0, {.abs = 1e-14, .rel = 0.0, .max_iter = 5});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_TRUE(std::isfinite(e.best_estimate()));
    EXPECT_GT(e.error_bound(), 1e-14);
  }
}

TEST(Integrate, TighterToleranceNeverWorse) {
  const std::vector<std::pair<std::function<double(double)>, double>> cases = {
      {[](double x) { return x * x; }, 1.0 / 3.0},
      {[](double x) { return 1.0 / std::sqrt(x); }, 2.0},
      {[](double x) { return std::exp(x); }, std::exp(1.0) - 1.0},
  };
  for (const auto& [f, exact] : cases) {
    double prev = INFINITY;
    for (double tol = 1e-4; tol >= 1e-12; tol /= 2) {
      const double err = std::abs(integrate(f, 0.0, 1.0, {.abs = tol, .rel = 0.0}) - exact);
      EXPECT_LE(err, std::max(prev, 4e-16));
      EXPECT_LE(err, tol);
      prev = err;
    }
  }
}

TEST(Integrate, ImplicitIntegrandStableUnderRefinement) {
  for (const std::size_t N : {2, 10, 100}) {
    const ImplicitBeta beta(SizeFunction::volume(), N);
    const double w = 0.9 * beta.critical().value;
    const double coarse = beta.phi(w, {.abs = 1e-8, .rel = 0.0});
    const double fine = beta.phi(w, {.abs = 1e-13, .rel = 0.0});
    EXPECT_TRUE(std::isfinite(fine));
    EXPECT_NEAR(coarse, fine, 1e-8);
  }
}

TEST(RootBracketed, AnalyticRoots) {
  EXPECT_NEAR(root_bracketed([](double x) { return x * x - 2.0; }, 1.0, 2.0, {.abs = 1e-15, .rel = 0.0}).value,
              std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(
      root_bracketed([](double x) { return catalan_partial(2, x) - 2.0; }, 0.25, 1.0, {.abs = 1e-15, .rel = 0}).value,
      0.5, 1e-15);
  EXPECT_NEAR(root_bracketed([](double x) { return std::log(x); }, 0.5, 2.0, {.abs = 1e-15, .rel = 0}).value, 1.0,
              1e-15);
}

TEST(RootBracketed, InvalidBracket) {
  EXPECT_THROW(root_bracketed([](double x) { return x * x + 1.0; }, -1.0, 1.0), DomainError);
  EXPECT_THROW(root_bracketed([](double) { return std::nan(""); }, -1.0, 1.0), DomainError);
}

TEST(RootBracketed, EndpointRootAndReportedBracket) {
  const auto r = root_bracketed([](double x) { return x - 1.0; }, 1.0, 3.0);
  EXPECT_EQ(r.value, 1.0);
  const auto s = root_bracketed([](double x) { return std::cbrt(x - 0.3); }, 0.0, 1.0, {.abs = 1e-12, .rel = 0});
  EXPECT_LE(s.lo, s.value);
  EXPECT_LE(s.value, s.hi);
  EXPECT_LE(s.bracket_width(), 1e-12);
}

TEST(RootBracketed, StaysInsideBracketOnRandomMonotoneFunctions) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double root = u(rng), a = std::exp(3 * u(rng)), p = 1 + 2 * (u(rng) + 1);
    const double lo = root - std::abs(u(rng)) - 1e-3, hi = root + std::abs(u(rng)) + 1e-3;
    int outside = 0;
    auto g = [&](double x) {
      if (x < lo || x > hi) ++outside;
      return a * std::copysign(std::pow(std::abs(x - root), p), x - root);
    };
    const auto r = root_bracketed(g, lo, hi, {.abs = 1e-13, .rel = 0});
    EXPECT_EQ(outside, 0);
    EXPECT_GE(r.value, lo);
    EXPECT_LE(r.value, hi);
    EXPECT_NEAR(r.value, root, 1e-12);
  }
}

TEST(RootBracketed, InfiniteValuesForceBisection) {
  auto g = [](double x) { return x < 0.7 ? -INFINITY : (x > 0.8 ? INFINITY : x - 0.75); };
  EXPECT_NEAR(root_bracketed(g, 0.0, 1.0, {.abs = 1e-14, .rel = 0}).value, 0.75, 1e-13);
}

TEST(OdeIvp, Exponential) {
  const std::vector<double> grid{1.0};
  EXPECT_NEAR(ode_ivp([](double, double y) { return -y; }, 0.0, 1.0, grid, {.abs = 1e-12, .rel = 1e-12})[0],
              std::exp(-1.0), 1e-9);
}

TEST(OdeIvp, ConstantAndQuadrature) {
  const std::vector<double> grid{0.0, 0.5, 3.0};
  for (const double y : ode_ivp([](double, double) { return 0.0; }, 0.0, 4.2, grid)) EXPECT_EQ(y, 4.2);
  const auto sq = ode_ivp([](double t, double) { return 2 * t; }, 0.0, 0.0, grid, {.abs = 1e-12, .rel = 1e-12});
  EXPECT_EQ(sq[0], 0.0);
  EXPECT_NEAR(sq[1], 0.25, 1e-9);
  EXPECT_NEAR(sq[2], 9.0, 1e-9);
}

TEST(OdeIvp, LandsOnEveryGridPoint) {
  const auto grid = uniform_grid(101);
  const auto y = ode_ivp([](double, double y) { return -y * y; }, 0.0, 1.0, grid, {.abs = 1e-12, .rel = 1e-12});
  ASSERT_EQ(y.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(y[i], 1.0 / (1.0 + grid[i]), 1e-10);
}

TEST(OdeIvp, TighterToleranceNeverWorse) {
  const std::vector<double> grid{1.0};
  double prev = INFINITY;
  for (double tol = 1e-4; tol >= 1e-12; tol /= 4) {
    const double err =
        std::abs(ode_ivp([](double, double y) { return -y; }, 0.0, 1.0, grid, {.abs = tol, .rel = tol})[0] -
                 std::exp(-1.0));
    EXPECT_LE(err, std::max(prev, 1e-15));
    prev = err;
  }
}

TEST(OdeIvp, Errors) {
  const std::vector<double> bad{0.5, 0.4};
  EXPECT_THROW(ode_ivp([](double, double) { return 0.0; }, 0.0, 1.0, bad), DomainError);
  const std::vector<double> before{-1.0};
  EXPECT_THROW(ode_ivp([](double, double) { return 0.0; }, 0.0, 1.0, before), DomainError);
  // Blow-up at t = 1: steps shrink until they underflow or the budget runs out.
  const std::vector<double> grid{2.0};
  EXPECT_THROW(ode_ivp([](double, double y) { return y * y; }, 0.0, 1.0, grid), NumericalError);
}
