#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "warpband/band.hpp"
#include "warpband/band_geometry.hpp"
#include "warpband/curve_operator.hpp"
#include "warpband/error.hpp"
#include "warpband/model_space.hpp"
#include "warpband/mu_bubble.hpp"

namespace warpband {

struct SpectrumReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> eigenfunction; // first eigenfunction per vertex, unit mass norm, positive
  double residual1 = 0.0;            // |A y - lambda y| for the symmetrized operator A
  double residual2 = 0.0;
  double operator_norm = 0.0; // Gershgorin bound on |A|
  int iterations = 0;
};

enum class ConformalVerdict { PSCAdmitting, Zero, Obstructed };

inline const char *to_string(ConformalVerdict v) {
  switch (v) {
  case ConformalVerdict::PSCAdmitting:
    return "psc_admitting";
  case ConformalVerdict::Zero:
    return "zero";
  case ConformalVerdict::Obstructed:
    return "obstructed";
  }
  return "zero";
}

namespace detail {

/// Symmetric cyclic tridiagonal matrix: diagonal d, couplings e[i] between i
/// and i+1 (e[n-1] joins n-1 and 0).
struct CyclicTridiagonal {
  std::vector<double> d;
  std::vector<double> e;

  std::size_t size() const { return d.size(); }

  void apply(const std::vector<double> &x, std::vector<double> &y) const {
    const std::size_t n = size();
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = d[i] * x[i] + e[i] * x[(i + 1) % n] + e[(i + n - 1) % n] * x[(i + n - 1) % n];
  }

  double gershgorin() const {
    const std::size_t n = size();
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      norm = std::max(norm, std::abs(d[i]) + std::abs(e[i]) + std::abs(e[(i + n - 1) % n]));
    return norm;
  }
};

/// LDL^T factorization of A - mu without pivoting; the last row fills in.
class ShiftedFactor {
public:
  ShiftedFactor(const CyclicTridiagonal &a, double mu, double tiny) {
    const std::size_t n = a.size();
    pivot_.resize(n);
    corner_.resize(n); // entry (i, n-1) when row i is eliminated
    e_ = a.e;
    double last = a.d[n - 1] - mu;
    pivot_[0] = a.d[0] - mu;
    corner_[0] = a.e[n - 1];
    for (std::size_t i = 0; i + 2 < n; ++i) {
      guard(pivot_[i], tiny);
      const double l = e_[i] / pivot_[i], m = corner_[i] / pivot_[i];
      pivot_[i + 1] = a.d[i + 1] - mu - e_[i] * l;
      corner_[i + 1] = (i + 2 == n - 1 ? a.e[n - 2] : 0.0) - e_[i] * m;
      last -= corner_[i] * m;
    }
    guard(pivot_[n - 2], tiny);
    pivot_[n - 1] = last - corner_[n - 2] * corner_[n - 2] / pivot_[n - 2];
    guard(pivot_[n - 1], tiny);
  }

  /// Number of eigenvalues of A below mu (Sylvester inertia).
  int negatives() const {
    return static_cast<int>(std::count_if(pivot_.begin(), pivot_.end(), [](double p) { return p < 0; }));
  }

  std::vector<double> solve(std::vector<double> y) const {
    const std::size_t n = pivot_.size();
    for (std::size_t i = 0; i + 2 < n; ++i) {
      y[i + 1] -= e_[i] / pivot_[i] * y[i];
      y[n - 1] -= corner_[i] / pivot_[i] * y[i];
    }
    y[n - 1] -= corner_[n - 2] / pivot_[n - 2] * y[n - 2];
    std::vector<double> x(n);
    x[n - 1] = y[n - 1] / pivot_[n - 1];
    x[n - 2] = (y[n - 2] - corner_[n - 2] * x[n - 1]) / pivot_[n - 2];
    for (std::size_t i = n - 2; i-- > 0;)
      x[i] = (y[i] - e_[i] * x[i + 1] - corner_[i] * x[n - 1]) / pivot_[i];
    return x;
  }

private:
  static void guard(double &p, double tiny) {
    if (std::abs(p) < tiny)
      p = -tiny;
  }

  std::vector<double> pivot_;
  std::vector<double> corner_;
  std::vector<double> e_;
};

inline double dot(const std::vector<double> &a, const std::vector<double> &b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline void normalize(std::vector<double> &x) {
  const double s = std::sqrt(dot(x, x));
  for (double &v : x)
    v /= s;
}

inline void deflate(std::vector<double> &x, const std::vector<double> *against) {
  if (!against)
    return;
  const double c = dot(x, *against);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] -= c * (*against)[i];
}

/// Largest shift with fewer than k eigenvalues below it, to ~eps * |A|.
inline double lower_bracket(const CyclicTridiagonal &a, int k, double norm) {
  const double tiny = DBL_MIN / DBL_EPSILON + DBL_EPSILON * DBL_EPSILON * norm;
  double lo = -norm - 1.0, hi = norm + 1.0;
  for (int it = 0; it < 200 && hi - lo > 4.0 * DBL_EPSILON * std::max(norm, 1e-300); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    if (ShiftedFactor(a, mid, tiny).negatives() < k)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  int iterations = 0;
};

/// k-th smallest eigenpair by inverse iteration at a shift just below it,
/// orthogonal to `against` when given.
inline EigenPair eigenpair(const CyclicTridiagonal &a, int k, double norm, std::vector<double> start,
                           const std::vector<double> *against, double tol) {
  const double tiny = DBL_MIN / DBL_EPSILON + DBL_EPSILON * DBL_EPSILON * norm;
  const double shift = lower_bracket(a, k, norm) - 1e-9 * std::max(norm, 1.0);
  const ShiftedFactor factor(a, shift, tiny);
  EigenPair out;
  std::vector<double> x = std::move(start), ax;
  deflate(x, against);
  normalize(x);
  constexpr int max_iterations = 500;
  for (int it = 1; it <= max_iterations; ++it) {
    x = factor.solve(x);
    deflate(x, against);
    normalize(x);
    a.apply(x, ax);
    out.value = dot(x, ax);
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      r += (ax[i] - out.value * x[i]) * (ax[i] - out.value * x[i]);
    out.residual = std::sqrt(r);
    out.iterations = it;
    if (out.residual <= tol) {
      out.vector = std::move(x);
      return out;
    }
  }
  throw NumericalError("inverse iteration did not converge: eigenvalue " + std::to_string(k) +
                       ", residual " + std::to_string(out.residual) + " after " +
                       std::to_string(max_iterations) + " iterations (target " +
                       std::to_string(tol) + ")");
}

/// M^{-1/2} K M^{-1/2} + diag(V) for the finite-volume Laplacian of the curve.
inline CyclicTridiagonal symmetrized_operator(const DiscreteClosedCurve &c) {
  const std::size_t n = c.size();
  CyclicTridiagonal a;
  a.d.resize(n);
  a.e.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n, next = (i + 1) % n;
    a.d[i] = (1.0 / c.lengths[prev] + 1.0 / c.lengths[i]) / c.mass(i) + c.potential[i];
    a.e[i] = -1.0 / (c.lengths[i] * std::sqrt(c.mass(i) * c.mass(next)));
  }
  return a;
}

} // namespace detail

/// Two smallest eigenvalues of -Delta + V on a closed polygonal curve
/// (generalized problem K psi + V M psi = lambda M psi).
inline SpectrumReport lambda1(const DiscreteClosedCurve &c) {
  c.validate();
  const std::size_t n = c.size();
  const auto a = detail::symmetrized_operator(c);
  SpectrumReport rep;
  rep.operator_norm = a.gershgorin();
  const double tol = 1e-10 * rep.operator_norm;

  std::vector<double> ones(n, 1.0), ramp(n);
  for (std::size_t i = 0; i < n; ++i)
    ramp[i] = static_cast<double>(i + 1) / static_cast<double>(n);

  auto first = detail::eigenpair(a, 1, rep.operator_norm, ones, nullptr, tol);
  if (detail::dot(first.vector, ones) < 0)
    for (double &v : first.vector)
      v = -v;
  auto second = detail::eigenpair(a, 2, rep.operator_norm, ramp, &first.vector, tol);
  rep.lambda1 = first.value;
  rep.lambda2 = std::max(second.value, first.value);
  rep.residual1 = first.residual;
  rep.residual2 = second.residual;
  rep.iterations = first.iterations + second.iterations;
  rep.eigenfunction.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    rep.eigenfunction[i] = first.vector[i] / std::sqrt(c.mass(i));
  return rep;
}

inline double default_verdict_tolerance(const SpectrumReport &rep) {
  return 1e-8 * rep.operator_norm;
}

inline ConformalVerdict conformal_verdict(const SpectrumReport &rep, double tol) {
  if (!(tol > 0.0))
    throw ArgumentError("verdict tolerance must be positive");
  if (rep.lambda1 > tol)
    return ConformalVerdict::PSCAdmitting;
  if (rep.lambda1 < -tol)
    return ConformalVerdict::Obstructed;
  return ConformalVerdict::Zero;
}

inline ConformalVerdict conformal_verdict(const SpectrumReport &rep) {
  return conformal_verdict(rep, default_verdict_tolerance(rep));
}

/// Curve carrying the stability operator -Delta + V with
/// V = -(Sc + k h^2 + 2 <grad h, nu>)/2 along the main loop of a minimizer.
inline DiscreteClosedCurve stability_curve(const DiscreteBand &b, const MinimizerReport &rep,
                                           const ModelSpace &m, const BandMap &map) {
  return midpoint_curve(segment_lengths(main_segments(rep)), structural_potential(b, rep, m, map));
}

inline SpectrumReport stability_pipeline(const DiscreteBand &b, const MinimizerReport &rep,
                                         const ModelSpace &m, const BandMap &map) {
  return lambda1(stability_curve(b, rep, m, map));
}

} // namespace warpband
