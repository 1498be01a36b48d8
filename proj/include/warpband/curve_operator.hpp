#pragma once

#include <cmath>
#include <vector>

#include "warpband/error.hpp"

namespace warpband {

/// Closed polygon for the 1-D operator -Delta + V: lengths[i] joins vertex i
/// to vertex i+1 (cyclically), potential[i] lives at vertex i.
struct DiscreteClosedCurve {
  std::vector<double> lengths;
  std::vector<double> potential;

  std::size_t size() const { return lengths.size(); }

  /// Dual length of vertex i (finite-volume mass).
  double mass(std::size_t i) const {
    const std::size_t n = lengths.size();
    return 0.5 * (lengths[(i + n - 1) % n] + lengths[i]);
  }

  void validate() const {
    if (lengths.size() < 3)
      throw ArgumentError("closed curve needs at least 3 vertices");
    if (potential.size() != lengths.size())
      throw ArgumentError("potential must have one value per vertex");
    for (double l : lengths)
      if (!(l > 0.0) || !std::isfinite(l))
        throw ArgumentError("curve segment lengths must be positive");
    for (double v : potential)
      if (!std::isfinite(v))
        throw ArgumentError("potential must be finite");
  }

  /// Uniform circle of the given circumference.
  static DiscreteClosedCurve circle(std::size_t vertices, double circumference,
                                    std::vector<double> potential = {}) {
    DiscreteClosedCurve c;
    c.lengths.assign(vertices, circumference / static_cast<double>(vertices));
    c.potential = potential.empty() ? std::vector<double>(vertices, 0.0) : std::move(potential);
    return c;
  }
};

/// Curve whose vertices sit at the midpoints of consecutive segments of a
/// closed edge loop with the given segment lengths.
inline DiscreteClosedCurve midpoint_curve(const std::vector<double> &segment_lengths,
                                          std::vector<double> potential) {
  const std::size_t n = segment_lengths.size();
  DiscreteClosedCurve c;
  c.lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.lengths[i] = 0.5 * (segment_lengths[i] + segment_lengths[(i + 1) % n]);
  c.potential = std::move(potential);
  c.validate();
  return c;
}

/// sum (psi_{i+1} - psi_i)^2 / L_i + sum V_i psi_i^2 m_i
inline double quadratic_form(const DiscreteClosedCurve &c, const std::vector<double> &psi) {
  if (psi.size() != c.size())
    throw ArgumentError("test function length does not match the curve");
  const std::size_t n = c.size();
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = psi[(i + 1) % n] - psi[i];
    q += d * d / c.lengths[i] + c.potential[i] * psi[i] * psi[i] * c.mass(i);
  }
  return q;
}

/// sum psi_i^2 m_i
inline double mass_norm2(const DiscreteClosedCurve &c, const std::vector<double> &psi) {
  if (psi.size() != c.size())
    throw ArgumentError("test function length does not match the curve");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    s += psi[i] * psi[i] * c.mass(i);
  return s;
}

} // namespace warpband
