#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "warpband/error.hpp"
#include "warpband/warping.hpp"

namespace warpband {

enum class CatalogId {
  Cos,
  Power,
  Sinh,
  Constant,
  Exp,
  SphereAnnulus,
  EuclideanAnnulus,
  HyperbolicAnnulus,
  Custom,
};

inline const char *to_string(CatalogId id) {
  switch (id) {
  case CatalogId::Cos:
    return "cos";
  case CatalogId::Power:
    return "power";
  case CatalogId::Sinh:
    return "sinh";
  case CatalogId::Constant:
    return "const";
  case CatalogId::Exp:
    return "exp";
  case CatalogId::SphereAnnulus:
    return "sphere";
  case CatalogId::EuclideanAnnulus:
    return "euclidean";
  case CatalogId::HyperbolicAnnulus:
    return "hyperbolic";
  case CatalogId::Custom:
    return "custom";
  }
  return "custom";
}

/// Warped product phi(t)^2 g_N + dt^2 over an (n-1)-dimensional base of
/// constant scalar curvature. Curvatures are in 1/length^2, h in 1/length.
class ModelSpace {
public:
  ModelSpace(int n, double base_scalar, WarpingFunction warp, CatalogId id = CatalogId::Custom)
      : n_(n), base_scalar_(base_scalar), warp_(std::move(warp)), id_(id) {
    if (n < 2)
      throw ConstructionError("model dimension must be at least 2");
    if (!std::isfinite(base_scalar))
      throw ConstructionError("base scalar curvature must be finite");
  }

  int n() const { return n_; }
  double base_scalar() const { return base_scalar_; }
  const WarpingFunction &warp() const { return warp_; }
  CatalogId id() const { return id_; }
  double lower() const { return warp_.lower(); }
  double upper() const { return warp_.upper(); }
  double width() const { return warp_.upper() - warp_.lower(); }

private:
  int n_;
  double base_scalar_;
  WarpingFunction warp_;
  CatalogId id_;
};

/// Sc = Sc_N/phi^2 - 2(n-1) phi''/phi - (n-1)(n-2) (phi'/phi)^2
inline double scalar_curvature_profile(const ModelSpace &m, double t) {
  const auto [phi, d1, d2] = m.warp().eval(t);
  const double n = m.n();
  const double ld = d1 / phi;
  return m.base_scalar() / (phi * phi) - 2.0 * (n - 1.0) * d2 / phi - (n - 1.0) * (n - 2.0) * ld * ld;
}

/// Slice mean curvature h = (n-1) phi'/phi (inner-normal convention).
inline double mean_curvature_profile(const ModelSpace &m, double t) {
  return (m.n() - 1.0) * m.warp().log_derivative(t);
}

/// h'(t) = (n-1) (phi'/phi)'.
inline double mean_curvature_slope(const ModelSpace &m, double t) {
  return (m.n() - 1.0) * m.warp().log_slope(t);
}

/// (H(d-M), H(d+M)) = (-h(a), h(b)).
inline std::pair<double, double> boundary_mean_curvatures(const ModelSpace &m) {
  return {-mean_curvature_profile(m, m.lower()), mean_curvature_profile(m, m.upper())};
}

/// Sc + n/(n-1) h^2 + 2h' - Sc_N/phi^2; zero for exact inputs.
inline double warped_identity_residual(const ModelSpace &m, double t) {
  const double n = m.n();
  const double h = mean_curvature_profile(m, t);
  const double phi = m.warp().eval(t).value;
  return scalar_curvature_profile(m, t) + n / (n - 1.0) * h * h + 2.0 * mean_curvature_slope(m, t) -
         m.base_scalar() / (phi * phi);
}

struct CurvatureProfile {
  std::vector<double> t;
  std::vector<double> phi;
  std::vector<double> scalar;
  std::vector<double> mean;
  std::vector<double> residual;
  double H_minus = 0.0;
  double H_plus = 0.0;
};

inline CurvatureProfile curvature_profile(const ModelSpace &m, std::size_t points) {
  if (points < 2)
    throw ArgumentError("curvature profile needs at least 2 points");
  CurvatureProfile p;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = i + 1 == points ? m.upper()
                                     : m.lower() + m.width() * static_cast<double>(i) /
                                                       static_cast<double>(points - 1);
    p.t.push_back(t);
    p.phi.push_back(m.warp().eval(t).value);
    p.scalar.push_back(scalar_curvature_profile(m, t));
    p.mean.push_back(mean_curvature_profile(m, t));
    p.residual.push_back(warped_identity_residual(m, t));
  }
  std::tie(p.H_minus, p.H_plus) = boundary_mean_curvatures(m);
  return p;
}

/// Model space test: Sc constant within tol and warp strictly log-concave or
/// log-constant.
inline bool is_model_space(const ModelSpace &m, double tol = 1e-8) {
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i <= 200; ++i) {
    const double sc = scalar_curvature_profile(m, m.lower() + m.width() * i / 200.0);
    lo = std::min(lo, sc);
    hi = std::max(hi, sc);
  }
  return hi - lo < tol * std::max(1.0, std::abs(hi)) &&
         log_concavity_classify(m.warp()) != LogConcavity::Neither;
}

// ---------------------------------------------------------------------------
// Catalog

/// cos(nt/2)^{2/n} on [l-, l+], -pi/n < l- < l+ < pi/n; Sc = n(n-1).
inline ModelSpace cos_model(int n, double l_minus, double l_plus) {
  if (n < 2)
    throw ConstructionError("model dimension must be at least 2");
  const double limit = M_PI / n;
  if (!(-limit < l_minus && l_minus < l_plus && l_plus < limit))
    throw ConstructionError("cos model requires -pi/n < l- < l+ < pi/n");
  return {n, 0.0, WarpingFunction::closed_form(WarpBase::Cosine, n / 2.0, 2.0 / n, l_minus, l_plus),
          CatalogId::Cos};
}

/// t^{2/n} on [l-, l+], 0 < l- < l+; scalar flat.
inline ModelSpace power_model(int n, double l_minus, double l_plus) {
  if (n < 2)
    throw ConstructionError("model dimension must be at least 2");
  if (!(0.0 < l_minus && l_minus < l_plus && std::isfinite(l_plus)))
    throw ConstructionError("power model requires 0 < l- < l+ < inf");
  return {n, 0.0, WarpingFunction::closed_form(WarpBase::Identity, 1.0, 2.0 / n, l_minus, l_plus),
          CatalogId::Power};
}

/// sinh(nt/2)^{2/n} on [l-, l+], 0 < l- < l+; Sc = -n(n-1).
inline ModelSpace sinh_model(int n, double l_minus, double l_plus) {
  if (n < 2)
    throw ConstructionError("model dimension must be at least 2");
  if (!(0.0 < l_minus && l_minus < l_plus && std::isfinite(l_plus)))
    throw ConstructionError("sinh model requires 0 < l- < l+ < inf");
  return {n, 0.0, WarpingFunction::closed_form(WarpBase::Sinh, n / 2.0, 2.0 / n, l_minus, l_plus),
          CatalogId::Sinh};
}

/// phi = 1: the product band, scalar flat.
inline ModelSpace constant_model(int n, double l_minus, double l_plus) {
  return {n, 0.0, WarpingFunction::constant(l_minus, l_plus), CatalogId::Constant};
}

/// phi = exp(t); Sc = -n(n-1).
inline ModelSpace exp_model(int n, double l_minus, double l_plus) {
  return {n, 0.0, WarpingFunction::closed_form(WarpBase::Exponential, 1.0, 1.0, l_minus, l_plus),
          CatalogId::Exp};
}

/// Round sphere minus two antipodal points: cos(t)^2 g_{S^{n-1}} + dt^2.
inline ModelSpace sphere_annulus(int n, double l_minus, double l_plus) {
  if (!(-M_PI / 2 < l_minus && l_minus < l_plus && l_plus < M_PI / 2))
    throw ConstructionError("sphere annulus requires -pi/2 < l- < l+ < pi/2");
  return {n, (n - 1.0) * (n - 2.0),
          WarpingFunction::closed_form(WarpBase::Cosine, 1.0, 1.0, l_minus, l_plus),
          CatalogId::SphereAnnulus};
}

/// Euclidean space minus the origin: t^2 g_{S^{n-1}} + dt^2.
inline ModelSpace euclidean_annulus(int n, double l_minus, double l_plus) {
  if (!(0.0 < l_minus && l_minus < l_plus && std::isfinite(l_plus)))
    throw ConstructionError("euclidean annulus requires 0 < l- < l+ < inf");
  return {n, (n - 1.0) * (n - 2.0),
          WarpingFunction::closed_form(WarpBase::Identity, 1.0, 1.0, l_minus, l_plus),
          CatalogId::EuclideanAnnulus};
}

/// Hyperbolic space minus a point: sinh(t)^2 g_{S^{n-1}} + dt^2.
inline ModelSpace hyperbolic_annulus(int n, double l_minus, double l_plus) {
  if (!(0.0 < l_minus && l_minus < l_plus && std::isfinite(l_plus)))
    throw ConstructionError("hyperbolic annulus requires 0 < l- < l+ < inf");
  return {n, (n - 1.0) * (n - 2.0),
          WarpingFunction::closed_form(WarpBase::Sinh, 1.0, 1.0, l_minus, l_plus),
          CatalogId::HyperbolicAnnulus};
}

struct CatalogEntry {
  CatalogId id;
  std::string name;
  std::function<ModelSpace(int, double, double)> make;
  // Parameters that are valid for every n >= 2.
  double default_l_minus;
  double default_l_plus;
  // Analytic Sc as a function of n.
  std::function<double(int)> scalar;
};

/// The eight catalog families, in a fixed order.
inline std::vector<CatalogEntry> model_catalog() {
  return {
      {CatalogId::Cos, "cos", cos_model, -0.2, 0.2, [](int n) { return n * (n - 1.0); }},
      {CatalogId::Power, "power", power_model, 0.5, 2.0, [](int) { return 0.0; }},
      {CatalogId::Sinh, "sinh", sinh_model, 0.5, 2.0, [](int n) { return -n * (n - 1.0); }},
      {CatalogId::Constant, "const", constant_model, 0.0, 1.0, [](int) { return 0.0; }},
      {CatalogId::Exp, "exp", exp_model, 0.0, 1.0, [](int n) { return -n * (n - 1.0); }},
      {CatalogId::SphereAnnulus, "sphere", sphere_annulus, -0.5, 0.5,
       [](int n) { return n * (n - 1.0); }},
      {CatalogId::EuclideanAnnulus, "euclidean", euclidean_annulus, 1.0, 2.0,
       [](int) { return 0.0; }},
      {CatalogId::HyperbolicAnnulus, "hyperbolic", hyperbolic_annulus, 0.5, 2.0,
       [](int n) { return -n * (n - 1.0); }},
  };
}

inline const CatalogEntry &catalog_entry(const std::string &name) {
  static const std::vector<CatalogEntry> catalog = model_catalog();
  for (const auto &e : catalog)
    if (e.name == name)
      return e;
  throw ArgumentError("unknown model family '" + name + "'");
}

} // namespace warpband
