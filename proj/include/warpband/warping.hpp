#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "warpband/error.hpp"

namespace warpband {

/// phi, phi', phi'' at one point.
struct WarpSample {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Analytic warping functions of the form g(c*t)^p.
enum class WarpBase {
  One,         // phi = 1
  Exponential, // phi = exp(t)
  Cosine,      // phi = cos(c t)^p
  Identity,    // phi = t^p
  Sinh,        // phi = sinh(c t)^p
};

struct WarpClosedForm {
  WarpBase base = WarpBase::One;
  double rate = 1.0;     // c
  double exponent = 1.0; // p
};

struct WarpSampled {
  double spacing = 0.0;
  std::vector<double> value;
  std::vector<double> d1;
  std::vector<double> d2;
  // (phi'/phi)' obtained by differentiating the sampled log-derivative.
  std::vector<double> log_slope;
};

/// Positive warping function on a closed interval [a, b], either closed form
/// or sampled on a uniform grid. Immutable after construction.
class WarpingFunction {
public:
  using ClosedForm = WarpClosedForm;
  using Sampled = WarpSampled;

  static WarpingFunction closed_form(WarpBase base, double rate, double exponent, double a,
                                     double b) {
    WarpingFunction w(a, b);
    w.rep_ = ClosedForm{base, rate, exponent};
    w.validate_closed_form();
    return w;
  }

  static WarpingFunction constant(double a, double b) {
    return closed_form(WarpBase::One, 1.0, 1.0, a, b);
  }

  /// Uniform samples phi(a + i*(b-a)/(N-1)), N >= 8.
  static WarpingFunction sampled(double a, double b, std::vector<double> values) {
    WarpingFunction w(a, b);
    if (values.size() < 8)
      throw ConstructionError("sampled warping function needs at least 8 grid points");
    for (double v : values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConstructionError("warping function must be positive and finite");
    Sampled s;
    s.spacing = (b - a) / static_cast<double>(values.size() - 1);
    s.d1 = first_difference(values, s.spacing);
    s.d2 = second_difference(values, s.spacing);
    s.log_slope.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double ld = s.d1[i] / values[i];
      s.log_slope[i] = s.d2[i] / values[i] - ld * ld;
    }
    s.value = std::move(values);
    w.rep_ = std::move(s);
    return w;
  }

  double lower() const { return a_; }
  double upper() const { return b_; }
  bool is_sampled() const { return std::holds_alternative<Sampled>(rep_); }

  /// Grid spacing of a sampled function, 0 for closed forms.
  double spacing() const {
    if (auto *s = std::get_if<Sampled>(&rep_))
      return s->spacing;
    return 0.0;
  }

  const ClosedForm *closed() const { return std::get_if<ClosedForm>(&rep_); }
  const Sampled *samples() const { return std::get_if<Sampled>(&rep_); }

  WarpSample eval(double t) const {
    t = checked(t);
    if (auto *c = std::get_if<ClosedForm>(&rep_)) {
      const double value = closed_value(*c, t);
      const auto [ld, ls] = closed_log_derivatives(*c, t);
      return {value, ld * value, (ls + ld * ld) * value};
    }
    const auto &s = std::get<Sampled>(rep_);
    return {interpolate(s.value, t), interpolate(s.d1, t), interpolate(s.d2, t)};
  }

  /// (phi'/phi)(t)
  double log_derivative(double t) const {
    t = checked(t);
    if (auto *c = std::get_if<ClosedForm>(&rep_))
      return closed_log_derivatives(*c, t).first;
    const auto &s = std::get<Sampled>(rep_);
    return interpolate(s.d1, t) / interpolate(s.value, t);
  }

  /// (phi'/phi)'(t); negative everywhere iff strictly log-concave.
  double log_slope(double t) const {
    t = checked(t);
    if (auto *c = std::get_if<ClosedForm>(&rep_))
      return closed_log_derivatives(*c, t).second;
    return interpolate(std::get<Sampled>(rep_).log_slope, t);
  }

  /// Second-order differences, one-sided at the ends.
  static std::vector<double> first_difference(const std::vector<double> &f, double dx) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    for (std::size_t i = 1; i + 1 < n; ++i)
      d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    return d;
  }

  static std::vector<double> second_difference(const std::vector<double> &f, double dx) {
    const std::size_t n = f.size();
    const double dx2 = dx * dx;
    std::vector<double> d(n);
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / dx2;
    for (std::size_t i = 1; i + 1 < n; ++i)
      d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / dx2;
    return d;
  }

private:
  WarpingFunction(double a, double b) : a_(a), b_(b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
      throw ConstructionError("warping domain must be a finite interval with a < b");
  }

  double checked(double t) const {
    const double slack = 1e-12 * std::max(1.0, b_ - a_);
    if (!(t >= a_ - slack && t <= b_ + slack))
      throw DomainError("t = " + std::to_string(t) + " outside [" + std::to_string(a_) + ", " +
                        std::to_string(b_) + "]");
    return std::clamp(t, a_, b_);
  }

  void validate_closed_form() const {
    const auto &c = std::get<ClosedForm>(rep_);
    switch (c.base) {
    case WarpBase::Cosine:
      if (!(std::abs(c.rate * a_) < M_PI / 2 && std::abs(c.rate * b_) < M_PI / 2))
        throw ConstructionError("cosine warp requires |c t| < pi/2 on the domain");
      break;
    case WarpBase::Identity:
    case WarpBase::Sinh:
      if (!(a_ > 0.0))
        throw ConstructionError("power and sinh warps require a positive domain");
      break;
    default:
      break;
    }
  }

  static double closed_value(const ClosedForm &c, double t) {
    switch (c.base) {
    case WarpBase::One:
      return 1.0;
    case WarpBase::Exponential:
      return std::exp(t);
    case WarpBase::Cosine:
      return std::pow(std::cos(c.rate * t), c.exponent);
    case WarpBase::Identity:
      return std::pow(t, c.exponent);
    case WarpBase::Sinh:
      return std::pow(std::sinh(c.rate * t), c.exponent);
    }
    return 1.0;
  }

  // (log phi)' and (log phi)''
  static std::pair<double, double> closed_log_derivatives(const ClosedForm &c, double t) {
    const double p = c.exponent;
    const double r = c.rate;
    switch (c.base) {
    case WarpBase::One:
      return {0.0, 0.0};
    case WarpBase::Exponential:
      return {1.0, 0.0};
    case WarpBase::Cosine: {
      const double tn = std::tan(r * t);
      return {-p * r * tn, -p * r * r * (1.0 + tn * tn)};
    }
    case WarpBase::Identity:
      return {p / t, -p / (t * t)};
    case WarpBase::Sinh: {
      const double sh = std::sinh(r * t);
      return {p * r * std::cosh(r * t) / sh, -p * r * r / (sh * sh)};
    }
    }
    return {0.0, 0.0};
  }

  double interpolate(const std::vector<double> &nodes, double t) const {
    const double spacing = std::get<Sampled>(rep_).spacing;
    const double x = (t - a_) / spacing;
    const auto last = nodes.size() - 1;
    auto i = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0, static_cast<double>(last - 1)));
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * nodes[i] + w * nodes[i + 1];
  }

  double a_;
  double b_;
  std::variant<ClosedForm, Sampled> rep_;
};

/// Read a two-column (t, phi) CSV. Header row optional; t must be strictly
/// increasing with uniform spacing (1e-9 relative).
inline WarpingFunction read_warp_csv(std::istream &in) {
  std::vector<double> ts, phis;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double t = 0.0, phi = 0.0;
    if (!(fields >> t >> phi)) {
      if (ts.empty() && line_no == 1)
        continue; // header
      throw ParseError("warp csv line " + std::to_string(line_no) + ": expected two numbers");
    }
    ts.push_back(t);
    phis.push_back(phi);
  }
  if (ts.size() < 8)
    throw ParseError("warp csv needs at least 8 rows, got " + std::to_string(ts.size()));
  const double spacing = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double step = ts[i] - ts[i - 1];
    if (!(step > 0.0))
      throw ParseError("warp csv: t must be strictly increasing");
    if (std::abs(step - spacing) > 1e-9 * std::abs(spacing))
      throw ParseError("warp csv: t spacing is not uniform at row " + std::to_string(i + 1));
  }
  return WarpingFunction::sampled(ts.front(), ts.back(), std::move(phis));
}

inline WarpingFunction read_warp_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path);
  return read_warp_csv(in);
}

/// Sample any warping function on n uniform points.
inline WarpingFunction sample_warp(const WarpingFunction &w, std::size_t n) {
  std::vector<double> values(n);
  const double a = w.lower(), b = w.upper();
  for (std::size_t i = 0; i < n; ++i)
    values[i] = w.eval(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)).value;
  return WarpingFunction::sampled(a, b, std::move(values));
}

enum class LogConcavity { StrictlyLogConcave, LogConstant, Neither };

inline const char *to_string(LogConcavity c) {
  switch (c) {
  case LogConcavity::StrictlyLogConcave:
    return "strictly_log_concave";
  case LogConcavity::LogConstant:
    return "log_constant";
  case LogConcavity::Neither:
    return "neither";
  }
  return "neither";
}

/// Default classification tolerance: 1e-10 for closed forms, 10*dx^2 for
/// sampled functions.
inline double default_log_concavity_tol(const WarpingFunction &w) {
  return w.is_sampled() ? 10.0 * w.spacing() * w.spacing() : 1e-10;
}

/// Classify by q = (phi'/phi)' on a dense grid (the sample nodes for sampled
/// functions).
inline LogConcavity log_concavity_classify(const WarpingFunction &w, double tol) {
  std::size_t points = 2001;
  if (auto *s = w.samples())
    points = s->value.size();
  double q_max = -INFINITY, q_abs = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = w.lower() + (w.upper() - w.lower()) * static_cast<double>(i) /
                                     static_cast<double>(points - 1);
    const double q = w.log_slope(t);
    q_max = std::max(q_max, q);
    q_abs = std::max(q_abs, std::abs(q));
  }
  if (q_abs <= tol)
    return LogConcavity::LogConstant;
  if (q_max < -tol)
    return LogConcavity::StrictlyLogConcave;
  return LogConcavity::Neither;
}

inline LogConcavity log_concavity_classify(const WarpingFunction &w) {
  return log_concavity_classify(w, default_log_concavity_tol(w));
}

} // namespace warpband
