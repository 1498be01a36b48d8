#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "warpband/comparison.hpp"
#include "warpband/riccati.hpp"

using namespace warpband;

namespace {

double tan_profile(double t) { return -2.0 * std::tan(1.5 * t); }

// Smooth bump supported on (center - radius, center + radius).
double bump(double t, double center, double radius) {
  const double s = (t - center) / radius;
  return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
}

} // namespace

TEST(OdeComparison, EqualityCase) {
  const auto h = SampledFunction::from(tan_profile, -0.3, 0.3, 601);
  const double step = h.spacing();
  const auto r = ode_comparison_check(h, h, 3, 10.0 * step * step);
  EXPECT_EQ(r.verdict, ComparisonVerdict::HypothesesHoldAndEqual);
  EXPECT_EQ(r.which, ComparisonHypothesis::None);
  EXPECT_EQ(r.max_difference, 0.0);
}

TEST(OdeComparison, InteriorBumpBreaksDifferentialInequality) {
  const auto h2 = SampledFunction::from(tan_profile, -0.3, 0.3, 601);
  const auto h1 =
      SampledFunction::from([](double t) { return tan_profile(t) - 0.1 * bump(t, 0.0, 0.1); }, -0.3, 0.3, 601);
  const auto r = ode_comparison_check(h1, h2, 3, 1e-6);
  EXPECT_EQ(r.verdict, ComparisonVerdict::HypothesesViolated);
  EXPECT_EQ(r.which, ComparisonHypothesis::Differential);
  EXPECT_GT(r.location, -0.1);
  EXPECT_LT(r.location, 0.1);

  // Brute-force check of the failing side at the reported node.
  const double k = 1.5, t = r.location, e = 1e-6;
  auto f1 = [](double s) { return tan_profile(s) - 0.1 * bump(s, 0.0, 0.1); };
  const double lhs = k * f1(t) * f1(t) + (f1(t + e) - f1(t - e)) / e;
  const double rhs = k * tan_profile(t) * tan_profile(t) + (tan_profile(t + e) - tan_profile(t - e)) / e;
  EXPECT_GT(lhs, rhs);
}

TEST(OdeComparison, BoundaryViolations) {
  const auto h2 = SampledFunction::from(tan_profile, -0.3, 0.3, 301);
  auto h1 = h2;
  h1.values.front() += 1.0;
  const auto left = ode_comparison_check(h1, h2, 3, 1e-6);
  EXPECT_EQ(left.verdict, ComparisonVerdict::HypothesesViolated);
  EXPECT_EQ(left.which, ComparisonHypothesis::LeftBoundary);
  EXPECT_EQ(left.location, -0.3);

  auto h3 = h2;
  h3.values.back() -= 1.0;
  const auto right = ode_comparison_check(h3, h2, 3, 1e-6);
  EXPECT_EQ(right.which, ComparisonHypothesis::RightBoundary);
  EXPECT_EQ(right.location, 0.3);
}

TEST(OdeComparison, SubsolutionFromSameStartMissesRightBoundary) {
  // h1 solves the Riccati equation for a larger sigma, so the differential
  // inequality holds strictly; starting from the same value it must end lower.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    const double sigma = 1.0 + 4.0 * unit(rng), extra = 0.5 + unit(rng);
    const double h0 = 2.0 * (unit(rng) - 0.5);
    const auto s1 = solve_riccati(n, sigma + extra, h0, 0.5, 1e-3);
    const auto s2 = solve_riccati(n, sigma, h0, 0.5, 1e-3);
    ASSERT_EQ(s1.h.size(), s2.h.size());
    const SampledFunction h1{0.0, 0.5, s1.h}, h2{0.0, 0.5, s2.h};
    const auto r = ode_comparison_check(h1, h2, n, 1e-6);
    EXPECT_EQ(r.verdict, ComparisonVerdict::HypothesesViolated);
    EXPECT_EQ(r.which, ComparisonHypothesis::RightBoundary);
  }
}

TEST(OdeComparison, AnalyticEqualityDataNeverUnequal) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    const double k = n / (n - 1.0), sigma = 0.5 + 8.0 * unit(rng);
    const double A = std::sqrt(sigma / k), B = std::sqrt(sigma * k) / 2.0;
    const double c = unit(rng) - 0.5, len = 0.8 * (M_PI / 2.0 - std::abs(c)) / B;
    const std::size_t points = 200 + 100 * (trial % 4);
    auto h = [&](double t) { return -A * std::tan(B * t + c); };
    const auto h1 = SampledFunction::from(h, 0.0, len, points);
    const auto h2 = SampledFunction::from(h, 0.0, len, points);
    const double step = h1.spacing();
    const auto r = ode_comparison_check(h1, h2, n, 10.0 * step * step);
    EXPECT_NE(r.verdict, ComparisonVerdict::HypothesesHoldButUnequal);
  }
}

TEST(OdeComparison, ArgumentErrors) {
  const auto a = SampledFunction::from(tan_profile, -0.3, 0.3, 101);
  const auto b = SampledFunction::from(tan_profile, -0.3, 0.3, 102);
  const auto c = SampledFunction::from(tan_profile, -0.2, 0.3, 101);
  EXPECT_THROW(ode_comparison_check(a, b, 3, 1e-6), ArgumentError);
  EXPECT_THROW(ode_comparison_check(a, c, 3, 1e-6), ArgumentError);
  EXPECT_THROW(ode_comparison_check(a, a, 1, 1e-6), ArgumentError);
  EXPECT_THROW(ode_comparison_check(a, a, 3, 0.0), ArgumentError);
}

TEST(WarpedComparison, ReflexiveCase) {
  const auto m = cos_model(3, -0.3, 0.3);
  const auto r = compare_warped_products(m, m);
  EXPECT_EQ(r.outcome, WarpedComparisonOutcome::EqualityForced);
  EXPECT_EQ(r.case_name, "same_domain");
  EXPECT_TRUE(r.equality_verified);
  EXPECT_LT(r.max_deviation, 1e-14);
}

TEST(WarpedComparison, LogConstantCaseIgnoresWidth) {
  const auto r = compare_warped_products(exp_model(4, 0.0, 1.0), exp_model(4, 2.0, 5.0));
  EXPECT_EQ(r.outcome, WarpedComparisonOutcome::EqualityForced);
  EXPECT_EQ(r.case_name, "log_constant");
  EXPECT_TRUE(r.equality_verified);
}

TEST(WarpedComparison, NarrowerStrictlyLogConcaveBandFailsWidth) {
  const auto r = compare_warped_products(cos_model(3, -0.2, 0.2), cos_model(3, -0.3, 0.3));
  EXPECT_EQ(r.outcome, WarpedComparisonOutcome::HypothesisFails);
  EXPECT_EQ(r.case_name, "strictly_log_concave");
  EXPECT_EQ(r.failed, WarpedHypothesis::Width);
  EXPECT_NEAR(cos_model(3, -0.2, 0.2).width(), 0.4, 1e-15);
}

TEST(WarpedComparison, ScalarAndMeanCurvatureFailures) {
  const auto sc = compare_warped_products(power_model(3, 0.2, 0.8), cos_model(3, 0.2, 0.8));
  EXPECT_EQ(sc.outcome, WarpedComparisonOutcome::HypothesisFails);
  EXPECT_EQ(sc.failed, WarpedHypothesis::ScalarCurvature);

  const auto mc = compare_warped_products(cos_model(3, -0.3, 0.3), cos_model(3, -0.2, 0.4));
  EXPECT_EQ(mc.outcome, WarpedComparisonOutcome::HypothesisFails);
  EXPECT_EQ(mc.failed, WarpedHypothesis::MeanCurvature);
}

TEST(WarpedComparison, ForcedEqualityIsAlwaysConfirmed) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int forced = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const double lim = 0.95 * M_PI / n;
    auto draw = [&]() {
      double x = -lim + 2.0 * lim * unit(rng), y = -lim + 2.0 * lim * unit(rng);
      if (x > y)
        std::swap(x, y);
      return cos_model(n, x, y + 1e-3);
    };
    const auto m1 = draw();
    const auto m2 = trial % 5 == 0 ? m1 : draw();
    const auto r = compare_warped_products(m1, m2, 1e-8, 501);
    if (r.outcome == WarpedComparisonOutcome::EqualityForced) {
      ++forced;
      EXPECT_TRUE(r.equality_verified);
    }
  }
  EXPECT_GE(forced, 20);
}

TEST(WarpedComparison, InputErrors) {
  EXPECT_THROW(compare_warped_products(sphere_annulus(3, -0.3, 0.3), cos_model(3, -0.3, 0.3)),
               UnsupportedError);
  EXPECT_THROW(compare_warped_products(cos_model(3, -0.3, 0.3), cos_model(4, -0.3, 0.3)), ArgumentError);
}
