#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_set>
#include <vector>

#include "warpband/band.hpp"
#include "warpband/error.hpp"
#include "warpband/model_space.hpp"

namespace warpband {

/// Scalar field on the vertices or the cell centers of a band, with bilinear
/// interpolation (periodic in v on cylinders, clamped elsewhere).
class GridField {
public:
  enum class Location { Vertex, Cell };

  GridField(const DiscreteBand &b, Location loc, std::vector<double> values)
      : loc_(loc), periodic_(b.periodic()), values_(std::move(values)) {
    rows_ = loc == Location::Vertex ? b.nu() + 1 : b.nu();
    cols_ = loc == Location::Vertex ? b.vertex_columns() : b.nv();
    if (values_.size() != static_cast<std::size_t>(rows_) * cols_)
      throw ArgumentError("grid field size does not match the band");
  }

  double node(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  const std::vector<double> &values() const { return values_; }

  double at(double u, double v) const {
    const double off = loc_ == Location::Cell ? 0.5 : 0.0;
    auto [r0, wr] = split(clamp_row(u - off), rows_);
    double y = v - off;
    int c0, c1;
    double wc;
    if (periodic_) {
      const double f = std::floor(y);
      wc = y - f;
      c0 = wrap(static_cast<int>(f));
      c1 = wrap(c0 + 1);
    } else {
      auto [c, w] = split(std::clamp(y, 0.0, cols_ - 1.0), cols_);
      c0 = c;
      c1 = std::min(c + 1, cols_ - 1);
      wc = w;
    }
    const int r1 = std::min(r0 + 1, rows_ - 1);
    return (1 - wr) * ((1 - wc) * node(r0, c0) + wc * node(r0, c1)) +
           wr * ((1 - wc) * node(r1, c0) + wc * node(r1, c1));
  }

  /// (d/du, d/dv) by differences of the interpolant over half a cell.
  std::array<double, 2> gradient(double u, double v) const {
    const double off = loc_ == Location::Cell ? 0.5 : 0.0;
    const double up = clamp_row(u + 0.5 - off) + off, um = clamp_row(u - 0.5 - off) + off;
    const double du = up > um ? (at(up, v) - at(um, v)) / (up - um) : 0.0;
    double vp = v + 0.5, vm = v - 0.5;
    if (!periodic_) {
      vp = std::clamp(vp - off, 0.0, cols_ - 1.0) + off;
      vm = std::clamp(vm - off, 0.0, cols_ - 1.0) + off;
    }
    const double dv = vp > vm ? (at(u, vp) - at(u, vm)) / (vp - vm) : 0.0;
    return {du, dv};
  }

private:
  double clamp_row(double x) const { return std::clamp(x, 0.0, rows_ - 1.0); }
  int wrap(int c) const { return ((c % cols_) + cols_) % cols_; }
  static std::pair<int, double> split(double x, int n) {
    int i = std::min(static_cast<int>(std::floor(x)), std::max(n - 2, 0));
    return {i, x - i};
  }

  Location loc_;
  bool periodic_;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

/// Closed (or open) path along axis edges of the mesh.
struct Curve {
  std::vector<Vertex> vertices;
  bool closed = true;
};

struct CurveStep {
  Vertex from;
  int di = 0;
  int dj = 0;
};

/// Axis steps of a curve; validates unit steps and (optionally) embeddedness.
inline std::vector<CurveStep> curve_steps(const DiscreteBand &b, const Curve &c,
                                          bool require_embedded = true) {
  const auto &vs = c.vertices;
  if (vs.size() < 2 || (c.closed && vs.size() < 3))
    throw ArgumentError("curve too short");
  std::unordered_set<int> seen;
  for (const auto &v : vs) {
    if (!b.has_vertex(v.i, v.j))
      throw ArgumentError("curve vertex outside the band");
    if (!seen.insert(b.vertex_index(v.i, v.j)).second && require_embedded)
      throw ArgumentError("curve is not embedded (repeated vertex)");
  }
  std::vector<CurveStep> steps;
  const std::size_t count = c.closed ? vs.size() : vs.size() - 1;
  for (std::size_t k = 0; k < count; ++k) {
    const Vertex &p = vs[k], &q = vs[(k + 1) % vs.size()];
    const int di = q.i - p.i;
    int dj = q.j - p.j;
    if (b.periodic()) {
      dj = ((dj % b.nv()) + b.nv()) % b.nv();
      if (dj == b.nv() - 1)
        dj = -1;
    }
    if (std::abs(di) + std::abs(dj) != 1)
      throw ArgumentError("curve steps must be unit axis moves");
    steps.push_back({p, di, dj});
  }
  return steps;
}

/// Per-segment geometry of a curve.
struct SegmentGeometry {
  CurveStep step;
  double mid_u = 0.0;
  double mid_v = 0.0;
  double length = 0.0;
  // Geodesic curvature w.r.t. the left normal: smooth part plus half of the
  // turning at each end vertex.
  double curvature = 0.0;
  double turning_part = 0.0;
  // Outward unit normal (minus the left normal), contravariant components.
  std::array<double, 2> outward{0.0, 0.0};
  // Scalar curvature, mean of the end vertices.
  double scalar = 0.0;
};

/// Metric fields, discrete curvature and curve geometry of one band.
class BandGeometry {
public:
  explicit BandGeometry(const DiscreteBand &b)
      : band_(b), g11_(cell_component(b, &CellMetric::g11)),
        g12_(cell_component(b, &CellMetric::g12)), g22_(cell_component(b, &CellMetric::g22)) {
    compute_vertex_scalar();
  }

  const DiscreteBand &band() const { return band_; }

  CellMetric metric_at(double u, double v) const {
    return {g11_.at(u, v), g12_.at(u, v), g22_.at(u, v)};
  }

  /// Sc = 2K with K = angle defect / (one third of the incident area).
  const std::vector<double> &vertex_scalar() const { return scalar_; }
  double scalar_at_vertex(int i, int j) const { return scalar_[band_.vertex_index(i, j)]; }

  /// Christoffel symbols of the first kind, gamma[l][i][j] = Gamma_{l,ij}.
  std::array<std::array<std::array<double, 2>, 2>, 2> christoffel(double u, double v) const {
    const auto d11 = g11_.gradient(u, v), d12 = g12_.gradient(u, v), d22 = g22_.gradient(u, v);
    // dg[k][i][j] = d_k g_ij
    double dg[2][2][2];
    for (int k = 0; k < 2; ++k) {
      dg[k][0][0] = d11[k];
      dg[k][0][1] = dg[k][1][0] = d12[k];
      dg[k][1][1] = d22[k];
    }
    std::array<std::array<std::array<double, 2>, 2>, 2> gamma{};
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          gamma[l][i][j] = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
    return gamma;
  }

  /// Signed turning angle from direction a to direction b at (u, v), positive
  /// for a left turn.
  double turning_angle(double u, double v, std::array<int, 2> a, std::array<int, 2> b) const {
    const CellMetric g = metric_at(u, v);
    const double na = g.norm(a[0], a[1]), nb = g.norm(b[0], b[1]);
    const double c = g.dot(a[0], a[1], b[0], b[1]) / (na * nb);
    const double s = std::sqrt(g.det()) * (a[0] * b[1] - a[1] * b[0]) / (na * nb);
    return std::atan2(s, c);
  }

  /// Region boundaries may touch themselves at saddle vertices; pass
  /// require_embedded = false for those.
  std::vector<SegmentGeometry> segments(const Curve &c, bool require_embedded = true) const {
    const auto steps = curve_steps(band_, c, require_embedded);
    std::vector<SegmentGeometry> out(steps.size());
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const auto &s = steps[k];
      auto &seg = out[k];
      seg.step = s;
      seg.mid_u = s.from.i + 0.5 * s.di;
      seg.mid_v = s.from.j + 0.5 * s.dj;
      const CellMetric g = metric_at(seg.mid_u, seg.mid_v);
      seg.length = g.norm(s.di, s.dj);
      const double tu = s.di / seg.length, tv = s.dj / seg.length;
      const double root = std::sqrt(g.det());
      // Left normal: lower components root*(-t^v, t^u), raised with g^{-1}.
      const double n1 = -root * tv, n2 = root * tu;
      const double det = g.det();
      const double N1 = (g.g22 * n1 - g.g12 * n2) / det;
      const double N2 = (-g.g12 * n1 + g.g11 * n2) / det;
      const auto gamma = christoffel(seg.mid_u, seg.mid_v);
      const int e[2] = {s.di, s.dj};
      double gee[2] = {0.0, 0.0};
      for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            gee[l] += gamma[l][i][j] * e[i] * e[j];
      seg.curvature = (gee[0] * N1 + gee[1] * N2) / (seg.length * seg.length);
      seg.outward = {-N1, -N2};
      const Vertex q{s.from.i + s.di, s.from.j + s.dj};
      seg.scalar = 0.5 * (scalar_at_vertex(s.from.i, s.from.j) + scalar_at_vertex(q.i, q.j));
    }
    // Vertex turning, split evenly between the two adjacent segments.
    const std::size_t m = out.size();
    const std::size_t first = c.closed ? 0 : 1;
    for (std::size_t k = first; k < m; ++k) {
      const std::size_t prev = (k + m - 1) % m;
      const auto &s = out[k].step;
      const double theta = turning_angle(s.from.i, s.from.j, {out[prev].step.di, out[prev].step.dj},
                                         {s.di, s.dj});
      const double density = theta / (0.5 * (out[prev].length + out[k].length));
      out[prev].turning_part += 0.5 * density;
      out[k].turning_part += 0.5 * density;
    }
    for (auto &seg : out)
      seg.curvature += seg.turning_part;
    return out;
  }

private:
  static GridField cell_component(const DiscreteBand &b, double CellMetric::*member) {
    std::vector<double> v;
    v.reserve(b.metrics().size());
    for (const auto &g : b.metrics())
      v.push_back(g.*member);
    return {b, GridField::Location::Cell, std::move(v)};
  }

  void compute_vertex_scalar() {
    const auto &b = band_;
    std::vector<double> angle(b.vertex_count(), 0.0), area(b.vertex_count(), 0.0);
    auto triangle = [&](Vertex p, Vertex q, Vertex r) {
      auto len = [&](Vertex x, Vertex y) { return b.edge_length(x.i, x.j, y.i - x.i, y.j - x.j); };
      const double a = len(q, r), bb = len(p, r), c = len(p, q);
      auto corner = [](double opposite, double s1, double s2) {
        return std::acos(std::clamp((s1 * s1 + s2 * s2 - opposite * opposite) / (2 * s1 * s2), -1.0, 1.0));
      };
      const double ap = corner(a, bb, c), aq = corner(bb, a, c), ar = corner(c, a, bb);
      // Half of the cell in its own metric; edge lengths use averaged metrics
      // and need not satisfy the triangle inequality on rough bands.
      const double t_area = 0.5 * b.cell_area(std::min({p.i, q.i, r.i}), std::min({p.j, q.j, r.j}));
      for (auto [v, ang] : {std::pair{p, ap}, std::pair{q, aq}, std::pair{r, ar}}) {
        const int idx = b.vertex_index(v.i, v.j);
        angle[idx] += ang;
        area[idx] += t_area / 3.0;
      }
    };
    for (int i = 0; i < b.nu(); ++i)
      for (int j = 0; j < b.nv(); ++j) {
        triangle({i, j}, {i + 1, j}, {i + 1, j + 1});
        triangle({i, j}, {i + 1, j + 1}, {i, j + 1});
      }
    scalar_.assign(b.vertex_count(), 0.0);
    const int jmax = b.periodic() ? b.vertex_columns() - 1 : b.nv() - 1;
    const int jmin = b.periodic() ? 0 : 1;
    for (int i = 1; i < b.nu(); ++i)
      for (int j = jmin; j <= jmax; ++j) {
        const int idx = b.vertex_index(i, j);
        scalar_[idx] = 2.0 * (2.0 * M_PI - angle[idx]) / area[idx];
      }
    // Boundary vertices take the value of the nearest interior vertex.
    for (int i = 0; i <= b.nu(); ++i)
      for (int j = 0; j < b.vertex_columns(); ++j) {
        const int ci = std::clamp(i, 1, b.nu() - 1);
        const int cj = b.periodic() ? j : std::clamp(j, jmin, std::max(jmin, jmax));
        if (ci != i || cj != j)
          scalar_[b.vertex_index(i, j)] = scalar_[b.vertex_index(ci, cj)];
      }
  }

  DiscreteBand band_;
  GridField g11_, g12_, g22_;
  std::vector<double> scalar_;
};

// ---------------------------------------------------------------------------
// Separation

namespace detail {

inline std::uint64_t cell_pair_key(int a, int b) {
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// BFS over cells from the lower row; blocked(c1, c2) forbids crossing.
template <class Blocked> bool lower_reaches_upper(const DiscreteBand &b, Blocked &&blocked) {
  std::vector<char> seen(b.cell_count(), 0);
  std::queue<std::pair<int, int>> queue;
  for (int j = 0; j < b.nv(); ++j) {
    seen[b.cell_index(0, j)] = 1;
    queue.push({0, j});
  }
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop();
    if (i == b.nu() - 1)
      return true;
    const int here = b.cell_index(i, j);
    for (auto [di, dj] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
      const int ni = i + di, nj = b.wrap_cell(j + dj);
      if (!b.has_cell(ni, nj))
        continue;
      const int there = b.cell_index(ni, nj);
      if (seen[there] || blocked(here, there))
        continue;
      seen[there] = 1;
      queue.push({ni, nj});
    }
  }
  return false;
}

} // namespace detail

/// Cells on the two sides of an axis edge, or -1 where the edge is on the
/// band boundary.
inline std::pair<int, int> cells_across(const DiscreteBand &b, const CurveStep &s) {
  auto cell = [&](int i, int j) { return b.has_cell(i, b.wrap_cell(j)) ? b.cell_index(i, b.wrap_cell(j)) : -1; };
  if (s.di == 0) {
    const int j = std::min(s.from.j, s.from.j + s.dj);
    return {cell(s.from.i - 1, j), cell(s.from.i, j)};
  }
  const int i = std::min(s.from.i, s.from.i + s.di);
  return {cell(i, s.from.j - 1), cell(i, s.from.j)};
}

/// True iff the curve separates the lower from the upper boundary.
inline bool separation_check(const DiscreteBand &b, const Curve &c) {
  std::unordered_set<std::uint64_t> blocked;
  for (const auto &s : curve_steps(b, c)) {
    const auto [x, y] = cells_across(b, s);
    if (x >= 0 && y >= 0)
      blocked.insert(detail::cell_pair_key(x, y));
  }
  return !detail::lower_reaches_upper(
      b, [&](int p, int q) { return blocked.count(detail::cell_pair_key(p, q)) > 0; });
}

/// Separation by the reduced boundary of a cell set.
inline bool separation_check(const DiscreteBand &b, const std::vector<char> &cells) {
  if (cells.size() != static_cast<std::size_t>(b.cell_count()))
    throw ArgumentError("cell set size does not match the band");
  return !detail::lower_reaches_upper(b, [&](int p, int q) { return cells[p] != cells[q]; });
}

/// Horizontal loop at vertex row i, traversed in +v (lower side on the left).
inline Curve horizontal_loop(const DiscreteBand &b, int i) {
  if (!b.periodic())
    throw UnsupportedError("horizontal loops need a periodic band");
  Curve c;
  for (int j = 0; j < b.nv(); ++j)
    c.vertices.push_back({i, j});
  return c;
}

// ---------------------------------------------------------------------------
// Band maps

struct BandMap {
  std::vector<double> values; // per vertex
  double a = 0.0;
  double b = 1.0;
  double lipschitz = 0.0;      // measured over all 8-neighbor mesh edges
  double declared_bound = 1.0; // Lip <= declared_bound
  bool smoothed = false;
  std::string kind;
};

inline double measure_lipschitz(const DiscreteBand &b, const std::vector<double> &values) {
  double lip = 0.0;
  for (int i = 0; i <= b.nu(); ++i)
    for (int j = 0; j < b.vertex_columns(); ++j) {
      const double here = values[b.vertex_index(i, j)];
      b.for_each_neighbor(i, j, [&](int w, double len) {
        lip = std::max(lip, std::abs(values[w] - here) / len);
      });
    }
  return lip;
}

/// Distance-based band map onto [a, bb] with Lip <= 1 - margin, followed by
/// one Jacobi smoothing pass (kept only if it stays within the bound).
inline BandMap lipschitz_band_map(const DiscreteBand &b, double a, double bb, double margin) {
  if (!(bb > a) || !std::isfinite(a) || !std::isfinite(bb))
    throw ArgumentError("band map target must satisfy a < b");
  if (!(margin >= 0.0 && margin < 1.0))
    throw ArgumentError("margin must lie in [0, 1)");
  const double width = band_width(b);
  if (!(width > (bb - a) / (1.0 - margin)))
    throw PreconditionError("band width " + std::to_string(width) +
                            " too small for a map onto an interval of length " +
                            std::to_string(bb - a) + " with margin " + std::to_string(margin));
  const auto &d = b.distance_from_lower();
  BandMap m;
  m.a = a;
  m.b = bb;
  m.kind = "lipschitz";
  m.declared_bound = 1.0 - margin;
  m.values.resize(b.vertex_count());
  for (int i = 0; i <= b.nu(); ++i)
    for (int j = 0; j < b.vertex_columns(); ++j) {
      const int idx = b.vertex_index(i, j);
      m.values[idx] = i == 0 ? a : i == b.nu() ? bb : a + (bb - a) * std::clamp(d[idx] / width, 0.0, 1.0);
    }

  std::vector<double> smooth = m.values;
  for (int i = 1; i < b.nu(); ++i)
    for (int j = 0; j < b.vertex_columns(); ++j) {
      double sum = 0.0;
      int count = 0;
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        if (!b.has_vertex(i + di, j + dj))
          continue;
        sum += m.values[b.vertex_index(i + di, j + dj)];
        ++count;
      }
      const int idx = b.vertex_index(i, j);
      smooth[idx] = 0.5 * m.values[idx] + 0.5 * sum / count;
    }
  const double smooth_lip = measure_lipschitz(b, smooth);
  if (smooth_lip <= m.declared_bound) {
    m.values = std::move(smooth);
    m.lipschitz = smooth_lip;
    m.smoothed = true;
  } else {
    m.lipschitz = measure_lipschitz(b, m.values);
  }
  return m;
}

/// phi = a + (bb - a) i / nu: the coordinate map, e.g. the identity t-map of
/// a warped band onto its own model interval.
inline BandMap coordinate_band_map(const DiscreteBand &b, double a, double bb) {
  if (!(bb > a))
    throw ArgumentError("band map target must satisfy a < b");
  BandMap m;
  m.a = a;
  m.b = bb;
  m.kind = "coordinate";
  m.values.resize(b.vertex_count());
  for (int i = 0; i <= b.nu(); ++i)
    for (int j = 0; j < b.vertex_columns(); ++j)
      m.values[b.vertex_index(i, j)] = i == b.nu() ? bb : a + (bb - a) * i / b.nu();
  m.lipschitz = measure_lipschitz(b, m.values);
  m.declared_bound = m.lipschitz;
  return m;
}

/// Vertex field h = h_phi o map; map values are clamped into the model domain.
inline GridField pullback_mean_curvature(const DiscreteBand &b, const BandMap &map,
                                         const ModelSpace &m) {
  if (map.values.size() != static_cast<std::size_t>(b.vertex_count()))
    throw ArgumentError("band map does not match the band");
  const double slack = 1e-9 * std::max(1.0, m.width());
  if (std::abs(map.a - m.lower()) > slack || std::abs(map.b - m.upper()) > slack)
    throw ArgumentError("band map target interval must equal the model interval");
  std::vector<double> h(map.values.size());
  for (std::size_t k = 0; k < h.size(); ++k)
    h[k] = mean_curvature_profile(m, std::clamp(map.values[k], m.lower(), m.upper()));
  return {b, GridField::Location::Vertex, std::move(h)};
}

// ---------------------------------------------------------------------------
// Structural inequality

struct StructuralReport {
  bool holds = true;
  double worst_margin = INFINITY; // min over segments of lhs - rhs
  double worst_u = 0.0;
  double worst_v = 0.0;
  int curves_checked = 0;
  int segments_checked = 0;
};

/// Per-segment terms of Sc + k h^2 + 2 <grad h, nu> - Sc_N / phi(map)^2.
inline std::vector<double> structural_margins(const BandGeometry &geo, const BandMap &map,
                                              const ModelSpace &m, const GridField &h,
                                              const std::vector<SegmentGeometry> &segs) {
  const GridField t(geo.band(), GridField::Location::Vertex, map.values);
  const double k = m.n() / (m.n() - 1.0);
  std::vector<double> out;
  out.reserve(segs.size());
  for (const auto &s : segs) {
    const double hv = h.at(s.mid_u, s.mid_v);
    const auto dh = h.gradient(s.mid_u, s.mid_v);
    const double normal = dh[0] * s.outward[0] + dh[1] * s.outward[1];
    const double phi = m.warp().eval(std::clamp(t.at(s.mid_u, s.mid_v), m.lower(), m.upper())).value;
    out.push_back(s.scalar + k * hv * hv + 2.0 * normal - m.base_scalar() / (phi * phi));
  }
  return out;
}

/// The structural inequality along each supplied curve, within -tol.
inline StructuralReport structural_check(const DiscreteBand &b, const BandMap &map,
                                         const ModelSpace &m, const std::vector<Curve> &curves,
                                         double tol) {
  const BandGeometry geo(b);
  const GridField h = pullback_mean_curvature(b, map, m);
  StructuralReport r;
  for (const auto &c : curves) {
    const auto segs = geo.segments(c);
    const auto margins = structural_margins(geo, map, m, h, segs);
    for (std::size_t k = 0; k < segs.size(); ++k) {
      if (margins[k] < r.worst_margin) {
        r.worst_margin = margins[k];
        r.worst_u = segs[k].mid_u;
        r.worst_v = segs[k].mid_v;
      }
    }
    r.segments_checked += static_cast<int>(segs.size());
    ++r.curves_checked;
  }
  r.holds = r.worst_margin >= -tol;
  return r;
}

inline StructuralReport structural_check(const DiscreteBand &b, const BandMap &map,
                                         const ModelSpace &m, const Curve &c, double tol) {
  return structural_check(b, map, m, std::vector<Curve>{c}, tol);
}

} // namespace warpband
