#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "warpband/band.hpp"
#include "warpband/band_geometry.hpp"
#include "warpband/curve_operator.hpp"
#include "warpband/error.hpp"
#include "warpband/maxflow.hpp"
#include "warpband/model_space.hpp"

namespace warpband {

/// Prescriptions are clamped to +-1e6 where they would blow up.
inline constexpr double prescription_clamp = 1e6;

enum class PerimeterModel { FaceLength, CauchyCrofton };

inline const char *to_string(PerimeterModel m) {
  return m == PerimeterModel::FaceLength ? "face_length" : "cauchy_crofton";
}

// ---------------------------------------------------------------------------
// Regions

/// Cell indicator set. Admissible: contains the lower collar row, avoids the
/// upper collar row.
struct Region {
  std::vector<char> cells;

  bool contains(int cell) const { return cells[cell] != 0; }
  int size() const { return static_cast<int>(std::count(cells.begin(), cells.end(), 1)); }
  bool operator==(const Region &) const = default;

  /// Rows 0..last_row.
  static Region rows(const DiscreteBand &b, int last_row) {
    Region r;
    r.cells.assign(b.cell_count(), 0);
    for (int i = 0; i <= last_row && i < b.nu(); ++i)
      for (int j = 0; j < b.nv(); ++j)
        r.cells[b.cell_index(i, j)] = 1;
    return r;
  }
};

inline bool is_admissible(const DiscreteBand &b, const Region &r) {
  if (r.cells.size() != static_cast<std::size_t>(b.cell_count()))
    return false;
  for (int j = 0; j < b.nv(); ++j)
    if (!r.contains(b.cell_index(0, j)) || r.contains(b.cell_index(b.nu() - 1, j)))
      return false;
  return std::all_of(r.cells.begin(), r.cells.end(), [](char c) { return c == 0 || c == 1; });
}

inline void validate_region(const DiscreteBand &b, const Region &r) {
  if (!is_admissible(b, r))
    throw ArgumentError("region must contain the lower collar row and avoid the upper one");
}

inline bool separation_check(const DiscreteBand &b, const Region &r) {
  return separation_check(b, r.cells);
}

// ---------------------------------------------------------------------------
// Prescriptions

enum class PrescriptionKind { Constant, ModelPullback, TanProfile, Custom };

inline const char *to_string(PrescriptionKind k) {
  switch (k) {
  case PrescriptionKind::Constant:
    return "constant";
  case PrescriptionKind::ModelPullback:
    return "model_pullback";
  case PrescriptionKind::TanProfile:
    return "tan_profile";
  case PrescriptionKind::Custom:
    return "custom";
  }
  return "custom";
}

/// Per-cell prescribed mean curvature h.
struct PrescriptionField {
  PrescriptionKind kind = PrescriptionKind::Custom;
  double parameter = 0.0;
  std::vector<double> values;

  double operator[](int cell) const { return values[cell]; }
};

inline void validate_prescription(const DiscreteBand &b, const PrescriptionField &h) {
  if (h.values.size() != static_cast<std::size_t>(b.cell_count()))
    throw ArgumentError("prescription does not match the band");
  for (double v : h.values)
    if (!std::isfinite(v))
      throw ArgumentError("prescription must be finite");
}

inline PrescriptionField constant_prescription(const DiscreteBand &b, double c) {
  if (!std::isfinite(c))
    throw ArgumentError("constant prescription must be finite");
  return {PrescriptionKind::Constant, c, std::vector<double>(b.cell_count(), c)};
}

inline PrescriptionField custom_prescription(const DiscreteBand &b, std::vector<double> values) {
  PrescriptionField h{PrescriptionKind::Custom, 0.0, std::move(values)};
  validate_prescription(b, h);
  return h;
}

/// Mean of the four corner values of each cell.
inline double cell_average(const DiscreteBand &b, const std::vector<double> &vertex_values, int i,
                           int j) {
  return 0.25 * (vertex_values[b.vertex_index(i, j)] + vertex_values[b.vertex_index(i + 1, j)] +
                 vertex_values[b.vertex_index(i, j + 1)] +
                 vertex_values[b.vertex_index(i + 1, j + 1)]);
}

/// h = -(2 pi / l) tan(pi s / l) with s the lower-boundary distance of the
/// cell center minus half the band width; +-1e6 beyond |s| >= l/2.
inline PrescriptionField tan_prescription(const DiscreteBand &b, double ell) {
  if (!(ell > 0.0) || !std::isfinite(ell))
    throw ArgumentError("tan profile needs a positive length");
  const auto &d = b.distance_from_lower();
  const double half = 0.5 * band_width(b);
  PrescriptionField h{PrescriptionKind::TanProfile, ell, std::vector<double>(b.cell_count())};
  for (int i = 0; i < b.nu(); ++i)
    for (int j = 0; j < b.nv(); ++j) {
      const double s = cell_average(b, d, i, j) - half;
      double v;
      if (std::abs(s) >= 0.5 * ell)
        v = s > 0 ? -prescription_clamp : prescription_clamp;
      else
        v = std::clamp(-(2.0 * M_PI / ell) * std::tan(M_PI * s / ell), -prescription_clamp,
                       prescription_clamp);
      h.values[b.cell_index(i, j)] = v;
    }
  return h;
}

/// h = h_phi o map at the cell centers.
inline PrescriptionField model_prescription(const DiscreteBand &b, const ModelSpace &m,
                                            const BandMap &map) {
  const GridField hv = pullback_mean_curvature(b, map, m);
  PrescriptionField h{PrescriptionKind::ModelPullback, 0.0, std::vector<double>(b.cell_count())};
  for (int i = 0; i < b.nu(); ++i)
    for (int j = 0; j < b.nv(); ++j)
      h.values[b.cell_index(i, j)] = hv.at(i + 0.5, j + 0.5);
  return h;
}

// ---------------------------------------------------------------------------
// Discrete perimeter

/// Pair of cells whose separation costs `weight`.
struct CellPair {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

namespace detail {

inline constexpr int crofton_dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};

/// Largest angle, measured in the metric g, between consecutive rays of the
/// eight lattice directions +-(1,0), +-(0,1), +-(1,1), +-(1,-1).
inline double widest_sector(const CellMetric &g) {
  // Upper Cholesky factor A with A^T A = g maps coordinates to an orthonormal frame.
  const double a11 = std::sqrt(g.g11), a12 = g.g12 / a11, a22 = std::sqrt(g.det()) / a11;
  std::array<double, 8> angle{};
  for (int k = 0; k < 4; ++k) {
    const double x = a11 * crofton_dirs[k][0] + a12 * crofton_dirs[k][1];
    const double y = a22 * crofton_dirs[k][1];
    angle[2 * k] = std::atan2(y, x);
    angle[2 * k + 1] = std::atan2(-y, -x);
  }
  std::sort(angle.begin(), angle.end());
  double widest = angle[0] + 2.0 * M_PI - angle[7];
  for (int k = 1; k < 8; ++k)
    widest = std::max(widest, angle[k] - angle[k - 1]);
  return widest;
}

/// Cut weights of the four pair directions (1,0), (0,1), (1,1), (1,-1) for a
/// constant metric g.
///
/// The unscaled weights make the cut length of every straight line along a
/// lattice direction exact; in between the discrete length is a polygonal
/// norm that overestimates by at most 1/cos(widest_sector/2). The factor
/// 2 / (1 + that bound) centers the error band, which is +-4.0% for square
/// cells (the classical 8-neighbor Cauchy-Crofton weights up to scale).
inline std::array<double, 4> crofton_weights(const CellMetric &g) {
  const double r1 = g.norm(1, 0), r2 = g.norm(0, 1), r3 = g.norm(1, 1), r4 = g.norm(1, -1);
  const double over = 1.0 / std::cos(0.5 * widest_sector(g));
  const double scale = 2.0 / (1.0 + over);
  return {scale * std::max(0.0, 0.5 * (r3 + r4) - r1), scale * std::max(0.0, 0.5 * (r3 + r4) - r2),
          scale * std::max(0.0, 0.5 * (r1 + r2 - r3)), scale * std::max(0.0, 0.5 * (r1 + r2 - r4))};
}

/// Relative error bound of the discrete perimeter for straight cuts.
inline double crofton_tolerance(const CellMetric &g) {
  const double over = 1.0 / std::cos(0.5 * widest_sector(g));
  return (over - 1.0) / (over + 1.0);
}

} // namespace detail

/// Weighted cell pairs realizing the discrete perimeter.
inline std::vector<CellPair> perimeter_pairs(const DiscreteBand &b, PerimeterModel model) {
  std::vector<CellPair> pairs;
  auto neighbor = [&](int i, int j) {
    return b.has_cell(i, b.wrap_cell(j)) ? b.cell_index(i, b.wrap_cell(j)) : -1;
  };
  for (int i = 0; i < b.nu(); ++i)
    for (int j = 0; j < b.nv(); ++j) {
      const int here = b.cell_index(i, j);
      if (model == PerimeterModel::FaceLength) {
        if (int up = neighbor(i + 1, j); up >= 0)
          pairs.push_back({here, up, b.edge_length(i + 1, j, 0, 1)});
        if (int side = neighbor(i, j + 1); side >= 0)
          pairs.push_back({here, side, b.edge_length(i, j + 1, 1, 0)});
        continue;
      }
      for (int k = 0; k < 4; ++k) {
        const int there = neighbor(i + detail::crofton_dirs[k][0], j + detail::crofton_dirs[k][1]);
        if (there < 0)
          continue;
        const auto g = CellMetric::average(b.metrics()[here], b.metrics()[there]);
        pairs.push_back({here, there, detail::crofton_weights(g)[k]});
      }
    }
  return pairs;
}

/// Worst relative error of the discrete perimeter of straight cuts over the
/// cells of the band. Face-length cuts are exact along the axes and
/// overestimate in between.
inline double perimeter_tolerance(const DiscreteBand &b, PerimeterModel model) {
  double worst = 0.0;
  for (const auto &g : b.metrics()) {
    if (model == PerimeterModel::CauchyCrofton) {
      worst = std::max(worst, detail::crofton_tolerance(g));
      continue;
    }
    const double a11 = std::sqrt(g.g11), a12 = g.g12 / a11, a22 = std::sqrt(g.det()) / a11;
    const double axis_angle = std::atan2(a22, a12); // angle between the images of e_u and e_v
    const double widest = std::max(axis_angle, M_PI - axis_angle);
    // The four-ray polygonal norm is the l1 norm in the skewed frame.
    worst = std::max(worst, 1.0 / std::cos(0.5 * widest) - 1.0);
  }
  return worst;
}

/// Energy  sum_{cut pairs} w - sum_{cells in region} unary  + offset.
class CutEnergy {
public:
  CutEnergy(const DiscreteBand &b, PerimeterModel model, const PrescriptionField &h,
            const std::vector<double> *u = nullptr, const Region *anchor = nullptr)
      : pairs_(perimeter_pairs(b, model)), unary_(b.cell_count()) {
    validate_prescription(b, h);
    if (u) {
      if (u->size() != static_cast<std::size_t>(b.cell_count()))
        throw ArgumentError("weight field does not match the band");
      for (double x : *u)
        if (!(x > 0.0) || !std::isfinite(x))
          throw ArgumentError("weight field must be positive");
      for (auto &p : pairs_)
        p.weight *= 0.5 * ((*u)[p.a] + (*u)[p.b]);
    }
    for (int i = 0; i < b.nu(); ++i)
      for (int j = 0; j < b.nv(); ++j) {
        const int c = b.cell_index(i, j);
        unary_[c] = h[c] * b.cell_area(i, j) * (u ? (*u)[c] : 1.0);
      }
    if (anchor) {
      validate_region(b, *anchor);
      for (std::size_t c = 0; c < unary_.size(); ++c)
        if (anchor->cells[c])
          offset_ += unary_[c];
    }
  }

  const std::vector<CellPair> &pairs() const { return pairs_; }
  const std::vector<double> &unary() const { return unary_; }
  double offset() const { return offset_; }

  double perimeter(const std::vector<char> &cells) const {
    double p = 0.0;
    for (const auto &e : pairs_)
      if (cells[e.a] != cells[e.b])
        p += e.weight;
    return p;
  }
  double bulk(const std::vector<char> &cells) const {
    double s = 0.0;
    for (std::size_t c = 0; c < unary_.size(); ++c)
      if (cells[c])
        s += unary_[c];
    return s - offset_;
  }
  double value(const std::vector<char> &cells) const { return perimeter(cells) - bulk(cells); }

private:
  std::vector<CellPair> pairs_;
  std::vector<double> unary_;
  double offset_ = 0.0;
};

/// A_h = perimeter of the reduced boundary inside X - integral of h over the region.
inline double functional_A_h(const DiscreteBand &b, const Region &r, const PrescriptionField &h,
                             PerimeterModel model = PerimeterModel::FaceLength) {
  validate_region(b, r);
  return CutEnergy(b, model, h).value(r.cells);
}

/// A^u_h = u-weighted perimeter - integral of (chi_r - chi_anchor) h u.
inline double warped_functional_A_u_h(const DiscreteBand &b, const Region &r,
                                      const std::vector<double> &u, const PrescriptionField &h,
                                      const Region &anchor,
                                      PerimeterModel model = PerimeterModel::FaceLength) {
  validate_region(b, r);
  return CutEnergy(b, model, h, &u, &anchor).value(r.cells);
}

// ---------------------------------------------------------------------------
// Region boundaries

struct BoundaryLoop {
  Curve curve;
  bool wraps = false; // winds once around the cylinder
};

/// Reduced boundary of a region as oriented edge chains with the region on
/// the left. At saddle vertices the chain turns left, which keeps diagonal
/// region cells on separate loops.
inline std::vector<BoundaryLoop> region_boundary(const DiscreteBand &b, const Region &r) {
  struct Edge {
    int from, to, du, dv;
    bool used = false;
  };
  std::vector<Edge> edges;
  auto in = [&](int i, int j) { return b.has_cell(i, b.wrap_cell(j)) && r.contains(b.cell_index(i, b.wrap_cell(j))); };
  auto exists = [&](int i, int j) { return b.has_cell(i, b.wrap_cell(j)); };
  auto add = [&](int i0, int j0, int i1, int j1) {
    edges.push_back({b.vertex_index(i0, j0), b.vertex_index(i1, j1), i1 - i0, j1 - j0});
  };
  for (int i = 0; i <= b.nu(); ++i)
    for (int j = 0; j < b.nv(); ++j) {
      // v-edge at row i between cells (i-1, j) and (i, j)
      if (exists(i - 1, j) && exists(i, j) && in(i - 1, j) != in(i, j)) {
        if (in(i - 1, j))
          add(i, j, i, j + 1);
        else
          add(i, j + 1, i, j);
      }
      // u-edge at column j between cells (i, j-1) and (i, j)
      if (i < b.nu() && exists(i, j - 1) && exists(i, j) && in(i, j - 1) != in(i, j)) {
        if (in(i, j - 1))
          add(i + 1, j, i, j);
        else
          add(i, j, i + 1, j);
      }
    }
  std::vector<std::vector<int>> outgoing(b.vertex_count());
  std::vector<int> indegree(b.vertex_count(), 0);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    outgoing[edges[e].from].push_back(e);
    ++indegree[edges[e].to];
  }

  auto pick = [&](int v, int du, int dv) {
    int best = -1, best_rank = 4;
    for (int e : outgoing[v]) {
      if (edges[e].used)
        continue;
      const int cross = du * edges[e].dv - dv * edges[e].du;
      const int dot = du * edges[e].du + dv * edges[e].dv;
      const int rank = cross > 0 ? 0 : dot > 0 ? 1 : cross < 0 ? 2 : 3;
      if (rank < best_rank) {
        best_rank = rank;
        best = e;
      }
    }
    return best;
  };

  std::vector<BoundaryLoop> loops;
  auto trace = [&](int start, bool closed) {
    BoundaryLoop loop;
    loop.curve.closed = closed;
    int e = start, net_dv = 0;
    while (e >= 0) {
      edges[e].used = true;
      loop.curve.vertices.push_back(b.vertex_at(edges[e].from));
      net_dv += edges[e].dv;
      const int next = pick(edges[e].to, edges[e].du, edges[e].dv);
      if (next < 0 && !closed)
        loop.curve.vertices.push_back(b.vertex_at(edges[e].to));
      e = next;
    }
    loop.wraps = closed && b.periodic() && net_dv != 0;
    loops.push_back(std::move(loop));
  };
  // Open chains start where a vertex has more outgoing than incoming edges.
  for (int e = 0; e < static_cast<int>(edges.size()); ++e)
    if (!edges[e].used &&
        static_cast<int>(outgoing[edges[e].from].size()) > indegree[edges[e].from])
      trace(e, false);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e)
    if (!edges[e].used)
      trace(e, true);
  return loops;
}

// ---------------------------------------------------------------------------
// Minimization

struct SegmentRecord {
  SegmentGeometry geometry;
  double h = 0.0;           // prescription at the segment
  double normal_dh = 0.0;   // <grad h, nu>
  double weight_term = 0.0; // <grad u, nu> / u (warped problems)
  bool interior = false;    // does not touch the collar rows

  /// First-variation residual H + <grad u, nu>/u - h.
  double residual() const { return geometry.curvature + weight_term - h; }
};

struct MinimizerReport {
  Region region;
  PerimeterModel model = PerimeterModel::CauchyCrofton;
  bool warped = false;
  double value = 0.0;
  double perimeter = 0.0;
  double bulk = 0.0;
  double cut_value = 0.0; // max-flow value (certificate)
  double perimeter_tolerance = 0.0;
  std::vector<BoundaryLoop> loops;
  std::vector<std::vector<SegmentRecord>> segments; // per loop
  int main_loop = -1; // wrapping loop with the most segments
  double max_abs_residual = 0.0; // max |H (+ u term) - h| over interior segments
  std::vector<std::pair<std::string, double>> second_variation;
};

struct MinimizeOptions {
  PerimeterModel model = PerimeterModel::CauchyCrofton;
};

namespace detail {

inline Region solve_cut(const DiscreteBand &b, const CutEnergy &energy, double *flow_out) {
  const int cells = b.cell_count();
  const int source = cells, sink = cells + 1;
  MaxFlow graph(cells + 2);
  const auto &unary = energy.unary();
  for (int c = 0; c < cells; ++c) {
    if (unary[c] > 0.0)
      graph.add_edge(source, c, unary[c]);
    else if (unary[c] < 0.0)
      graph.add_edge(c, sink, -unary[c]);
  }
  for (int j = 0; j < b.nv(); ++j) {
    graph.add_edge(source, b.cell_index(0, j), MaxFlow::infinite);
    graph.add_edge(b.cell_index(b.nu() - 1, j), sink, MaxFlow::infinite);
  }
  for (const auto &p : energy.pairs())
    graph.add_edge(p.a, p.b, p.weight, p.weight);
  const double flow = graph.solve(source, sink);
  if (flow_out)
    *flow_out = flow;
  const auto side = graph.source_side();
  Region r;
  r.cells.assign(side.begin(), side.begin() + cells);
  return r;
}

inline std::vector<double> default_second_variation_tests(std::size_t n, int mode) {
  std::vector<double> psi(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    if (mode == 1)
      psi[i] = std::cos(x);
    else if (mode == 2)
      psi[i] = std::sin(x);
    else if (mode == 3)
      psi[i] = 1.0 + 0.5 * std::cos(2.0 * x);
  }
  return psi;
}

} // namespace detail

/// Per-segment potential of the second variation for curves:
/// -Sc/2 - (H h + <grad h, nu>).
inline std::vector<double> second_variation_potential(const std::vector<SegmentRecord> &segs) {
  std::vector<double> v;
  v.reserve(segs.size());
  for (const auto &s : segs)
    v.push_back(-0.5 * s.geometry.scalar - (s.geometry.curvature * s.h + s.normal_dh));
  return v;
}

inline std::vector<double> segment_lengths(const std::vector<SegmentRecord> &segs) {
  std::vector<double> l;
  l.reserve(segs.size());
  for (const auto &s : segs)
    l.push_back(s.geometry.length);
  return l;
}

inline const std::vector<SegmentRecord> &main_segments(const MinimizerReport &rep) {
  if (rep.main_loop < 0)
    throw UnsupportedError("minimizer has no closed loop around the band");
  return rep.segments[rep.main_loop];
}

/// Quadratic form of the second variation on the main loop, psi per segment.
inline double second_variation_value(const MinimizerReport &rep, const std::vector<double> &psi) {
  const auto &segs = main_segments(rep);
  if (psi.size() != segs.size())
    throw ArgumentError("test function must have one value per boundary segment");
  return quadratic_form(midpoint_curve(segment_lengths(segs), second_variation_potential(segs)), psi);
}

/// Report data (boundary geometry, residuals, second-variation samples) for
/// an arbitrary admissible region.
inline MinimizerReport make_report(const DiscreteBand &b, const Region &r,
                                   const PrescriptionField &h, PerimeterModel model,
                                   const std::vector<double> *u = nullptr,
                                   const Region *anchor = nullptr) {
  validate_region(b, r);
  const CutEnergy energy(b, model, h, u, anchor);
  MinimizerReport rep;
  rep.region = r;
  rep.model = model;
  rep.warped = u != nullptr;
  rep.perimeter = energy.perimeter(r.cells);
  rep.bulk = energy.bulk(r.cells);
  rep.value = rep.perimeter - rep.bulk;
  rep.cut_value = NAN;
  rep.perimeter_tolerance = perimeter_tolerance(b, model);

  const BandGeometry geo(b);
  const GridField hf(b, GridField::Location::Cell, h.values);
  const std::optional<GridField> uf =
      u ? std::optional<GridField>(GridField(b, GridField::Location::Cell, *u)) : std::nullopt;
  rep.loops = region_boundary(b, r);
  std::size_t best = 0;
  for (std::size_t k = 0; k < rep.loops.size(); ++k) {
    const auto &loop = rep.loops[k];
    std::vector<SegmentRecord> recs;
    for (const auto &g : geo.segments(loop.curve, false)) {
      SegmentRecord s;
      s.geometry = g;
      s.h = hf.at(g.mid_u, g.mid_v);
      const auto dh = hf.gradient(g.mid_u, g.mid_v);
      s.normal_dh = dh[0] * g.outward[0] + dh[1] * g.outward[1];
      if (uf) {
        const auto du = uf->gradient(g.mid_u, g.mid_v);
        s.weight_term = (du[0] * g.outward[0] + du[1] * g.outward[1]) / uf->at(g.mid_u, g.mid_v);
      }
      const int i0 = g.step.from.i, i1 = g.step.from.i + g.step.di;
      s.interior = std::min(i0, i1) >= 2 && std::max(i0, i1) <= b.nu() - 2;
      if (s.interior)
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(s.residual()));
      recs.push_back(s);
    }
    if (loop.wraps && loop.curve.closed && recs.size() > best) {
      best = recs.size();
      rep.main_loop = static_cast<int>(k);
    }
    rep.segments.push_back(std::move(recs));
  }
  if (rep.main_loop >= 0) {
    static const char *names[] = {"constant", "cos1", "sin1", "one_plus_half_cos2"};
    const std::size_t n = rep.segments[rep.main_loop].size();
    for (int mode = 0; mode < 4; ++mode)
      rep.second_variation.emplace_back(
          names[mode], second_variation_value(rep, detail::default_second_variation_tests(n, mode)));
  }
  return rep;
}

/// Global minimizer of A_h by a minimum cut; the region returned is the
/// smallest minimizer.
inline MinimizerReport minimize(const DiscreteBand &b, const PrescriptionField &h,
                                const MinimizeOptions &opt = {}) {
  const CutEnergy energy(b, opt.model, h);
  double flow = 0.0;
  const Region r = detail::solve_cut(b, energy, &flow);
  MinimizerReport rep = make_report(b, r, h, opt.model);
  rep.cut_value = flow;
  return rep;
}

/// Global minimizer of A^u_h.
inline MinimizerReport minimize_warped(const DiscreteBand &b, const std::vector<double> &u,
                                       const PrescriptionField &h, const Region &anchor,
                                       const MinimizeOptions &opt = {}) {
  const CutEnergy energy(b, opt.model, h, &u, &anchor);
  double flow = 0.0;
  const Region r = detail::solve_cut(b, energy, &flow);
  MinimizerReport rep = make_report(b, r, h, opt.model, &u, &anchor);
  rep.cut_value = flow;
  return rep;
}

/// max |H - h| (with the weight term for warped problems) over boundary
/// segments that do not touch the collars.
inline bool first_variation_check(const MinimizerReport &rep, double tol) {
  return rep.max_abs_residual <= tol;
}

/// LHS - RHS of  int |psi'|^2 + Sc(S)/2 psi^2 >= int (Sc + k h^2 + 2<grad h, nu>)/2 psi^2
/// on the main loop, with h = h_phi o map (Sc(S) = 0 for curves).
inline double key_inequality_check(const DiscreteBand &b, const MinimizerReport &rep,
                                   const ModelSpace &m, const BandMap &map,
                                   const std::vector<double> &psi);

/// Potential -(Sc + k h^2 + 2<grad h, nu>)/2 along the main loop for h = h_phi o map.
inline std::vector<double> structural_potential(const DiscreteBand &b, const MinimizerReport &rep,
                                                const ModelSpace &m, const BandMap &map) {
  const auto &segs = main_segments(rep);
  const BandGeometry geo(b);
  const GridField h = pullback_mean_curvature(b, map, m);
  const double k = m.n() / (m.n() - 1.0);
  std::vector<double> v;
  v.reserve(segs.size());
  for (const auto &s : segs) {
    const auto &g = s.geometry;
    const double hv = h.at(g.mid_u, g.mid_v);
    const auto dh = h.gradient(g.mid_u, g.mid_v);
    const double normal = dh[0] * g.outward[0] + dh[1] * g.outward[1];
    v.push_back(-0.5 * (g.scalar + k * hv * hv + 2.0 * normal));
  }
  return v;
}

inline double key_inequality_check(const DiscreteBand &b, const MinimizerReport &rep,
                                   const ModelSpace &m, const BandMap &map,
                                   const std::vector<double> &psi) {
  const auto &segs = main_segments(rep);
  if (psi.size() != segs.size())
    throw ArgumentError("test function must have one value per boundary segment");
  return quadratic_form(midpoint_curve(segment_lengths(segs), structural_potential(b, rep, m, map)),
                        psi);
}

// ---------------------------------------------------------------------------
// Exhaustive oracles

/// Minimum of the discrete functional over every admissible region (the
/// interior rows are enumerated); at most 24 free cells.
inline double exhaustive_minimum(const DiscreteBand &b, const PrescriptionField &h,
                                 PerimeterModel model, const std::vector<double> *u = nullptr,
                                 const Region *anchor = nullptr, Region *argmin = nullptr) {
  const int free_cells = (b.nu() - 2) * b.nv();
  if (free_cells > 24)
    throw UnsupportedError("exhaustive enumeration limited to 24 free cells");
  const CutEnergy energy(b, model, h, u, anchor);
  Region r = Region::rows(b, 0);
  double best = INFINITY;
  const int first = b.nv(); // cells of row 1 onward
  for (std::uint32_t mask = 0; mask < (1u << free_cells); ++mask) {
    for (int k = 0; k < free_cells; ++k)
      r.cells[first + k] = (mask >> k) & 1u;
    const double v = energy.value(r.cells);
    if (v < best) {
      best = v;
      if (argmin)
        *argmin = r;
    }
  }
  return best;
}

/// Minimum over the regions made of the first k+1 rows, k = 0..nu-2.
inline double monotone_cut_minimum(const DiscreteBand &b, const PrescriptionField &h,
                                   PerimeterModel model, const std::vector<double> *u = nullptr,
                                   const Region *anchor = nullptr, int *best_row = nullptr) {
  const CutEnergy energy(b, model, h, u, anchor);
  double best = INFINITY;
  for (int k = 0; k + 1 < b.nu(); ++k) {
    const double v = energy.value(Region::rows(b, k).cells);
    if (v < best) {
      best = v;
      if (best_row)
        *best_row = k;
    }
  }
  return best;
}

} // namespace warpband
