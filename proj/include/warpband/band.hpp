#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "warpband/error.hpp"
#include "warpband/model_space.hpp"

namespace warpband {

enum class Topology { CylinderPeriodicInV, Rectangle };

inline const char *to_string(Topology t) {
  return t == Topology::CylinderPeriodicInV ? "cylinder" : "rectangle";
}

inline Topology parse_topology(const std::string &s) {
  if (s == "cylinder")
    return Topology::CylinderPeriodicInV;
  if (s == "rectangle")
    return Topology::Rectangle;
  throw ParseError("unknown topology '" + s + "'");
}

/// Constant metric on one cell in coordinate units (cell = unit square).
struct CellMetric {
  double g11 = 1.0;
  double g12 = 0.0;
  double g22 = 1.0;

  double det() const { return g11 * g22 - g12 * g12; }
  double norm(double du, double dv) const {
    return std::sqrt(g11 * du * du + 2.0 * g12 * du * dv + g22 * dv * dv);
  }
  double dot(double au, double av, double bu, double bv) const {
    return g11 * au * bu + g12 * (au * bv + av * bu) + g22 * av * bv;
  }
  static CellMetric average(const CellMetric &a, const CellMetric &b) {
    return {0.5 * (a.g11 + b.g11), 0.5 * (a.g12 + b.g12), 0.5 * (a.g22 + b.g22)};
  }
};

/// Vertex on the mesh: i along u in [0, nu], j along v.
struct Vertex {
  int i = 0;
  int j = 0;
  bool operator==(const Vertex &) const = default;
};

/// Cell (i, j) covers [i, i+1] x [j, j+1] in coordinates. The u = 0 edge is
/// the lower boundary, u = nu the upper one. Cylinders are periodic in v.
class DiscreteBand {
public:
  DiscreteBand(int nu, int nv, Topology topology, std::vector<CellMetric> metric)
      : nu_(nu), nv_(nv), topology_(topology), metric_(std::move(metric)),
        cache_(std::make_shared<DistanceCache>()) {
    if (nu < 2 || nv < 1)
      throw ConstructionError("band needs nu >= 2 and nv >= 1");
    if (topology == Topology::CylinderPeriodicInV && nv < 3)
      throw ConstructionError("periodic band needs nv >= 3");
    if (metric_.size() != static_cast<std::size_t>(nu) * nv)
      throw ConstructionError("band metric must have nu*nv cells");
    for (const auto &g : metric_)
      if (!(g.g11 > 0.0) || !(g.det() > 0.0) || !std::isfinite(g.g22) || !std::isfinite(g.g12))
        throw ConstructionError("cell metric must be positive definite");
  }

  int nu() const { return nu_; }
  int nv() const { return nv_; }
  Topology topology() const { return topology_; }
  bool periodic() const { return topology_ == Topology::CylinderPeriodicInV; }
  int cell_count() const { return nu_ * nv_; }

  /// Number of distinct vertex columns (v direction).
  int vertex_columns() const { return periodic() ? nv_ : nv_ + 1; }
  int vertex_count() const { return (nu_ + 1) * vertex_columns(); }

  int cell_index(int i, int j) const { return i * nv_ + j; }
  int vertex_index(int i, int j) const { return i * vertex_columns() + wrap_vertex(j); }
  Vertex vertex_at(int index) const { return {index / vertex_columns(), index % vertex_columns()}; }

  int wrap_vertex(int j) const {
    if (!periodic())
      return j;
    return ((j % nv_) + nv_) % nv_;
  }
  int wrap_cell(int j) const { return periodic() ? ((j % nv_) + nv_) % nv_ : j; }
  bool has_cell(int i, int j) const {
    return i >= 0 && i < nu_ && (periodic() || (j >= 0 && j < nv_));
  }
  bool has_vertex(int i, int j) const {
    return i >= 0 && i <= nu_ && (periodic() || (j >= 0 && j <= nv_));
  }

  const CellMetric &metric(int i, int j) const { return metric_[cell_index(i, wrap_cell(j))]; }
  const std::vector<CellMetric> &metrics() const { return metric_; }
  double cell_area(int i, int j) const { return std::sqrt(metric(i, j).det()); }

  double total_area() const {
    double a = 0.0;
    for (const auto &g : metric_)
      a += std::sqrt(g.det());
    return a;
  }

  /// Metric used for the mesh edge from vertex (i, j) in direction (di, dj):
  /// the cell's own metric for diagonals, the average of the adjacent cells
  /// for axis edges.
  CellMetric edge_metric(int i, int j, int di, int dj) const {
    if (di != 0 && dj != 0)
      return metric(std::min(i, i + di), std::min(j, j + dj));
    // Cells on either side of the edge: (ci, cj) and (ci + si, cj + sj).
    int ci = i, cj = j, si = 0, sj = 0;
    if (dj == 0) {
      ci = std::min(i, i + di);
      cj = j - 1;
      sj = 1;
    } else {
      cj = std::min(j, j + dj);
      ci = i - 1;
      si = 1;
    }
    const bool first = has_cell(ci, cj), second = has_cell(ci + si, cj + sj);
    if (first && second)
      return CellMetric::average(metric(ci, cj), metric(ci + si, cj + sj));
    // Boundary edge: continue the sequence of interior edge metrics (averages
    // of neighboring cells) by cubic extrapolation, so the boundary edge
    // carries the same smoothing bias as the interior ones.
    const int sign = first ? -1 : 1;
    const int ni = first ? ci : ci + si, nj = first ? cj : cj + sj;
    auto cell = [&](int k) { return metric(ni + sign * k * si, nj + sign * k * sj); };
    auto depth = [&](int k) { return has_cell(ni + sign * k * si, nj + sign * k * sj); };
    auto combine = [](std::initializer_list<std::pair<double, CellMetric>> terms) {
      CellMetric g{0.0, 0.0, 0.0};
      for (const auto &[w, c] : terms) {
        g.g11 += w * c.g11;
        g.g12 += w * c.g12;
        g.g22 += w * c.g22;
      }
      return g;
    };
    const CellMetric &near = metric(ni, nj);
    CellMetric g = near;
    if (depth(3))
      g = combine({{1.5, near}, {-1.0, cell(2)}, {0.5, cell(3)}});
    else if (depth(1))
      g = combine({{1.5, near}, {-0.5, cell(1)}});
    return g.g11 > 0.0 && g.det() > 0.0 ? g : near;
  }

  double edge_length(int i, int j, int di, int dj) const {
    return edge_metric(i, j, di, dj).norm(di, dj);
  }

  /// 8-neighborhood of a vertex as (neighbor index, metric length).
  template <class F> void for_each_neighbor(int i, int j, F &&f) const {
    static constexpr std::array<std::array<int, 2>, 8> dirs{
        {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
    for (const auto &d : dirs) {
      const int ni = i + d[0], nj = j + d[1];
      if (!has_vertex(ni, nj))
        continue;
      f(vertex_index(ni, nj), edge_length(i, j, d[0], d[1]));
    }
  }

  /// Shortest-path distance from the lower (upper) boundary to every vertex.
  const std::vector<double> &distance_from_lower() const {
    std::call_once(cache_->lower_once, [&] { cache_->lower = distance_field(0); });
    return cache_->lower;
  }
  const std::vector<double> &distance_from_upper() const {
    std::call_once(cache_->upper_once, [&] { cache_->upper = distance_field(nu_); });
    return cache_->upper;
  }

private:
  struct DistanceCache {
    std::once_flag lower_once, upper_once;
    std::vector<double> lower, upper;
  };

  std::vector<double> distance_field(int source_row) const {
    std::vector<double> dist(vertex_count(), INFINITY);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (int j = 0; j < vertex_columns(); ++j) {
      const int v = vertex_index(source_row, j);
      dist[v] = 0.0;
      queue.push({0.0, v});
    }
    while (!queue.empty()) {
      const auto [d, v] = queue.top();
      queue.pop();
      if (d > dist[v])
        continue;
      const auto [i, j] = vertex_at(v);
      for_each_neighbor(i, j, [&](int w, double len) {
        if (d + len < dist[w]) {
          dist[w] = d + len;
          queue.push({dist[w], w});
        }
      });
    }
    return dist;
  }

  int nu_;
  int nv_;
  Topology topology_;
  std::vector<CellMetric> metric_;
  std::shared_ptr<DistanceCache> cache_;
};

/// Distance between the two boundary components along the 8-neighbor graph.
inline double band_width(const DiscreteBand &b) {
  const auto &d = b.distance_from_lower();
  double w = INFINITY;
  for (int j = 0; j < b.vertex_columns(); ++j)
    w = std::min(w, d[b.vertex_index(b.nu(), j)]);
  return w;
}

/// Band with cell metric given by f(i, j).
template <class F> DiscreteBand build_band(int nu, int nv, Topology topology, F &&f) {
  if (nu < 2 || nv < 1)
    throw ArgumentError("band needs nu >= 2 and nv >= 1");
  std::vector<CellMetric> metric;
  metric.reserve(static_cast<std::size_t>(nu) * nv);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j)
      metric.push_back(f(i, j));
  return {nu, nv, topology, std::move(metric)};
}

/// S^1_r x [0, L], periodic in v.
inline DiscreteBand build_flat_cylinder(double L, double r, int nu, int nv) {
  if (!(L > 0.0) || !(r > 0.0) || !std::isfinite(L) || !std::isfinite(r))
    throw ArgumentError("flat cylinder needs L > 0 and r > 0");
  if (nu < 4 || nv < 4)
    throw ArgumentError("flat cylinder needs nu, nv >= 4");
  const double du = L / nu, dv = 2.0 * M_PI * r / nv;
  return build_band(nu, nv, Topology::CylinderPeriodicInV,
                    [&](int, int) { return CellMetric{du * du, 0.0, dv * dv}; });
}

/// phi(t)^2 dtheta^2 + dt^2 over a circle of the given circumference; u runs
/// along t, phi sampled at the cell centers.
inline DiscreteBand build_warped_band(const ModelSpace &m, int nv, int nu,
                                      double circumference = 2.0 * M_PI) {
  if (m.n() != 2)
    throw UnsupportedError("warped bands are built for n = 2 models only");
  if (nu < 4 || nv < 4)
    throw ArgumentError("warped band needs nu, nv >= 4");
  if (!(circumference > 0.0))
    throw ArgumentError("circumference must be positive");
  const double dt = m.width() / nu, dtheta = circumference / nv;
  std::vector<double> phi(nu);
  for (int i = 0; i < nu; ++i)
    phi[i] = m.warp().eval(m.lower() + (i + 0.5) * dt).value;
  return build_band(nu, nv, Topology::CylinderPeriodicInV, [&](int i, int) {
    return CellMetric{dt * dt, 0.0, phi[i] * phi[i] * dtheta * dtheta};
  });
}

// ---------------------------------------------------------------------------
// Band files

inline void write_band(std::ostream &out, const DiscreteBand &b) {
  out << "band " << b.nu() << ' ' << b.nv() << ' ' << to_string(b.topology()) << '\n';
  char line[96];
  for (const auto &g : b.metrics()) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", g.g11, g.g12, g.g22);
    out << line;
  }
}

inline void write_band(const std::string &path, const DiscreteBand &b) {
  std::ofstream out(path);
  if (!out)
    throw ArgumentError("cannot write " + path);
  write_band(out, b);
}

inline DiscreteBand read_band(std::istream &in) {
  std::string tag, topology;
  int nu = 0, nv = 0;
  if (!(in >> tag >> nu >> nv >> topology) || tag != "band")
    throw ParseError("band file: expected header 'band nu nv topology'");
  if (nu < 2 || nv < 1 || static_cast<long>(nu) * nv > 100'000'000L)
    throw ParseError("band file: bad grid size");
  std::vector<CellMetric> metric(static_cast<std::size_t>(nu) * nv);
  for (std::size_t c = 0; c < metric.size(); ++c)
    if (!(in >> metric[c].g11 >> metric[c].g12 >> metric[c].g22))
      throw ParseError("band file: expected " + std::to_string(metric.size()) +
                       " metric rows, got " + std::to_string(c));
  std::string extra;
  if (in >> extra)
    throw ParseError("band file: trailing data");
  try {
    return {nu, nv, parse_topology(topology), std::move(metric)};
  } catch (const ConstructionError &e) {
    throw ParseError(std::string("band file: ") + e.what());
  }
}

inline DiscreteBand read_band(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path);
  return read_band(in);
}

} // namespace warpband
