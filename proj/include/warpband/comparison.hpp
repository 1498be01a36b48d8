#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "warpband/error.hpp"
#include "warpband/model_space.hpp"
#include "warpband/warping.hpp"

namespace warpband {

/// Values of a function on the uniform grid a + i (b-a)/(N-1).
struct SampledFunction {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> values;

  double spacing() const { return (b - a) / static_cast<double>(values.size() - 1); }
  double node(std::size_t i) const {
    return i + 1 == values.size() ? b : a + spacing() * static_cast<double>(i);
  }

  template <class F> static SampledFunction from(F &&f, double a, double b, std::size_t points) {
    SampledFunction s{a, b, std::vector<double>(points)};
    for (std::size_t i = 0; i < points; ++i)
      s.values[i] = f(s.node(i));
    return s;
  }
};

enum class ComparisonVerdict { HypothesesHoldAndEqual, HypothesesViolated, HypothesesHoldButUnequal };
enum class ComparisonHypothesis { None, Differential, LeftBoundary, RightBoundary };

inline const char *to_string(ComparisonVerdict v) {
  switch (v) {
  case ComparisonVerdict::HypothesesHoldAndEqual:
    return "hypotheses_hold_and_equal";
  case ComparisonVerdict::HypothesesViolated:
    return "hypotheses_violated";
  case ComparisonVerdict::HypothesesHoldButUnequal:
    return "hypotheses_hold_but_unequal";
  }
  return "hypotheses_violated";
}

inline const char *to_string(ComparisonHypothesis h) {
  switch (h) {
  case ComparisonHypothesis::None:
    return "none";
  case ComparisonHypothesis::Differential:
    return "differential";
  case ComparisonHypothesis::LeftBoundary:
    return "left_boundary";
  case ComparisonHypothesis::RightBoundary:
    return "right_boundary";
  }
  return "none";
}

struct ComparisonCheck {
  ComparisonVerdict verdict = ComparisonVerdict::HypothesesHoldAndEqual;
  ComparisonHypothesis which = ComparisonHypothesis::None;
  double location = 0.0;       // where the failed hypothesis is worst
  double max_difference = 0.0; // max |h1 - h2|
};

/// Numerical form of the comparison lemma: h1 = h2 iff
///   k h1^2 + 2 h1' <= k h2^2 + 2 h2'   and   h1(a) <= h2(a), h2(b) <= h1(b).
/// Boundary conditions are checked before the differential inequality.
inline ComparisonCheck ode_comparison_check(const SampledFunction &h1, const SampledFunction &h2,
                                            int n, double tol) {
  if (h1.values.size() != h2.values.size() || h1.a != h2.a || h1.b != h2.b)
    throw ArgumentError("ode_comparison_check: h1 and h2 must share one grid");
  if (h1.values.size() < 4)
    throw ArgumentError("ode_comparison_check: need at least 4 grid points");
  if (n < 2)
    throw ArgumentError("ode_comparison_check: n must be at least 2");
  if (!(tol > 0.0))
    throw ArgumentError("ode_comparison_check: tol must be positive");

  ComparisonCheck r;
  const auto &f = h1.values;
  const auto &g = h2.values;
  for (std::size_t i = 0; i < f.size(); ++i)
    r.max_difference = std::max(r.max_difference, std::abs(f[i] - g[i]));

  if (f.front() > g.front() + tol) {
    r.verdict = ComparisonVerdict::HypothesesViolated;
    r.which = ComparisonHypothesis::LeftBoundary;
    r.location = h1.a;
    return r;
  }
  if (g.back() > f.back() + tol) {
    r.verdict = ComparisonVerdict::HypothesesViolated;
    r.which = ComparisonHypothesis::RightBoundary;
    r.location = h1.b;
    return r;
  }

  const double k = n / (n - 1.0);
  const double dx = h1.spacing();
  const auto df = WarpingFunction::first_difference(f, dx);
  const auto dg = WarpingFunction::first_difference(g, dx);
  double worst = -INFINITY;
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double excess = (k * f[i] * f[i] + 2.0 * df[i]) - (k * g[i] * g[i] + 2.0 * dg[i]);
    if (excess > worst) {
      worst = excess;
      worst_i = i;
    }
  }
  if (worst > tol) {
    r.verdict = ComparisonVerdict::HypothesesViolated;
    r.which = ComparisonHypothesis::Differential;
    r.location = h1.node(worst_i);
    return r;
  }
  r.verdict = r.max_difference <= tol ? ComparisonVerdict::HypothesesHoldAndEqual
                                      : ComparisonVerdict::HypothesesHoldButUnequal;
  return r;
}

// ---------------------------------------------------------------------------

enum class WarpedComparisonOutcome { EqualityForced, HypothesisFails };
enum class WarpedHypothesis { None, ScalarCurvature, MeanCurvature, Width, LogConcavity };

inline const char *to_string(WarpedComparisonOutcome o) {
  return o == WarpedComparisonOutcome::EqualityForced ? "equality_forced" : "hypothesis_fails";
}

inline const char *to_string(WarpedHypothesis h) {
  switch (h) {
  case WarpedHypothesis::None:
    return "none";
  case WarpedHypothesis::ScalarCurvature:
    return "scalar_curvature";
  case WarpedHypothesis::MeanCurvature:
    return "mean_curvature";
  case WarpedHypothesis::Width:
    return "width";
  case WarpedHypothesis::LogConcavity:
    return "log_concavity";
  }
  return "none";
}

struct WarpedComparison {
  WarpedComparisonOutcome outcome = WarpedComparisonOutcome::EqualityForced;
  WarpedHypothesis failed = WarpedHypothesis::None;
  // Which result applied: "same_domain", "log_constant" or "strictly_log_concave".
  std::string case_name;
  // max |h1(t) - h2(phi(t))| over the check grid.
  double max_deviation = 0.0;
  // For EqualityForced: max_deviation is within tolerance.
  bool equality_verified = false;
};

/// Compare two warped products over the same scalar-flat base through the
/// affine map phi: [a,b] -> [c,d]. Checks Sc1 >= Sc2 o phi, H1 >= H2 on both
/// boundaries, and (strictly log-concave m2 on a different domain)
/// wid1 >= wid2, in that order. When all hold, h1 = h2 o phi is forced; the
/// result records whether that is confirmed numerically.
inline WarpedComparison compare_warped_products(const ModelSpace &m1, const ModelSpace &m2,
                                                double tol = 1e-8, std::size_t points = 2001) {
  if (m1.base_scalar() != 0.0 || m2.base_scalar() != 0.0)
    throw UnsupportedError("compare_warped_products requires a scalar-flat base");
  if (m1.n() != m2.n())
    throw ArgumentError("compare_warped_products: models must have the same dimension");
  if (points < 2)
    throw ArgumentError("compare_warped_products: need at least 2 points");

  const double a = m1.lower(), b = m1.upper(), c = m2.lower(), d = m2.upper();
  auto phi = [&](double t) { return std::clamp(c + (d - c) * (t - a) / (b - a), c, d); };
  auto scaled = [&](double x) { return tol * std::max(1.0, std::abs(x)); };

  WarpedComparison r;
  bool need_width = false;
  if (std::abs(a - c) <= scaled(a) && std::abs(b - d) <= scaled(b)) {
    r.case_name = "same_domain";
  } else {
    switch (log_concavity_classify(m2.warp())) {
    case LogConcavity::LogConstant:
      r.case_name = "log_constant";
      break;
    case LogConcavity::StrictlyLogConcave:
      r.case_name = "strictly_log_concave";
      need_width = true;
      break;
    case LogConcavity::Neither:
      r.case_name = "neither";
      r.outcome = WarpedComparisonOutcome::HypothesisFails;
      r.failed = WarpedHypothesis::LogConcavity;
      return r;
    }
  }

  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = i + 1 == points ? b : a + (b - a) * static_cast<double>(i) / (points - 1.0);

  for (double t : grid) {
    const double s2 = scalar_curvature_profile(m2, phi(t));
    r.max_deviation =
        std::max(r.max_deviation, std::abs(mean_curvature_profile(m1, t) -
                                           mean_curvature_profile(m2, phi(t))));
    if (r.failed == WarpedHypothesis::None && scalar_curvature_profile(m1, t) < s2 - scaled(s2))
      r.failed = WarpedHypothesis::ScalarCurvature;
  }
  if (r.failed == WarpedHypothesis::None) {
    const auto [m1_minus, m1_plus] = boundary_mean_curvatures(m1);
    const auto [m2_minus, m2_plus] = boundary_mean_curvatures(m2);
    if (m1_minus < m2_minus - scaled(m2_minus) || m1_plus < m2_plus - scaled(m2_plus))
      r.failed = WarpedHypothesis::MeanCurvature;
  }
  if (r.failed == WarpedHypothesis::None && need_width && m1.width() < m2.width() - scaled(m2.width()))
    r.failed = WarpedHypothesis::Width;

  if (r.failed != WarpedHypothesis::None) {
    r.outcome = WarpedComparisonOutcome::HypothesisFails;
    return r;
  }
  r.outcome = WarpedComparisonOutcome::EqualityForced;
  r.equality_verified = r.max_deviation <= tol;
  return r;
}

} // namespace warpband
