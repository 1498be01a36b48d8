#include <gtest/gtest.h>

#include <cmath>
#include <queue>
#include <random>
#include <sstream>
#include <thread>

#include "warpband/band.hpp"
#include "warpband/band_geometry.hpp"

using namespace warpband;

namespace {

// Dijkstra on a refined copy of a constant-metric rectangle, with the 8
// directions (0,1), (1,1) and their images, or 16 adding (1,2) and (2,1).
double dense_width(const CellMetric &g, int nu, int nv, int refine, int directions) {
  const int ru = nu * refine, rv = nv * refine;
  const double s = 1.0 / refine;
  const int cols = rv + 1;
  std::vector<double> dist(static_cast<std::size_t>(ru + 1) * cols, INFINITY);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (int j = 0; j <= rv; ++j) {
    dist[j] = 0.0;
    queue.push({0.0, j});
  }
  static const int dirs[16][2] = {{1, 0},  {-1, 0}, {0, 1},   {0, -1}, {1, 1},  {1, -1}, {-1, 1}, {-1, -1},
                                  {1, 2},  {2, 1},  {-1, 2},  {2, -1}, {1, -2}, {-2, 1}, {-1, -2}, {-2, -1}};
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v])
      continue;
    const int i = v / cols, j = v % cols;
    for (int d_index = 0; d_index < directions; ++d_index) {
      const auto &e = dirs[d_index];
      const int ni = i + e[0], nj = j + e[1];
      if (ni < 0 || ni > ru || nj < 0 || nj > rv)
        continue;
      const double len = g.norm(e[0] * s, e[1] * s);
      const int w = ni * cols + nj;
      if (d + len < dist[w]) {
        dist[w] = d + len;
        queue.push({dist[w], w});
      }
    }
  }
  double best = INFINITY;
  for (int j = 0; j <= rv; ++j)
    best = std::min(best, dist[static_cast<std::size_t>(ru) * cols + j]);
  return best;
}

double max_interior_scalar_error(const DiscreteBand &b, double expected, int skip) {
  const BandGeometry geo(b);
  double worst = 0.0;
  for (int i = skip; i <= b.nu() - skip; ++i)
    for (int j = 0; j < b.vertex_columns(); ++j)
      worst = std::max(worst, std::abs(geo.scalar_at_vertex(i, j) - expected));
  return worst;
}

std::vector<char> lower_rows(const DiscreteBand &b, int rows) {
  std::vector<char> cells(b.cell_count(), 0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < b.nv(); ++j)
      cells[b.cell_index(i, j)] = 1;
  return cells;
}

} // namespace

TEST(FlatCylinder, WidthAreaCurvature) {
  const auto b = build_flat_cylinder(2.0, 1.0, 64, 64);
  EXPECT_NEAR(band_width(b), 2.0, 1e-9);
  EXPECT_NEAR(b.total_area(), 4.0 * M_PI, 1e-9);
  EXPECT_TRUE(b.periodic());
  EXPECT_LT(max_interior_scalar_error(b, 0.0, 0), 1e-9);
  EXPECT_NEAR(b.metric(3, 5).g11, (2.0 / 64) * (2.0 / 64), 1e-18);
  EXPECT_NEAR(b.metric(3, 5).g22, std::pow(2.0 * M_PI / 64, 2), 1e-18);
}

TEST(FlatCylinder, DegenerateSizes) {
  EXPECT_THROW(build_flat_cylinder(2.0, 1.0, 3, 64), ArgumentError);
  EXPECT_THROW(build_flat_cylinder(2.0, 1.0, 64, 3), ArgumentError);
  EXPECT_THROW(build_flat_cylinder(0.0, 1.0, 8, 8), ArgumentError);
  EXPECT_THROW(build_flat_cylinder(2.0, -1.0, 8, 8), ArgumentError);
  EXPECT_THROW(DiscreteBand(4, 4, Topology::Rectangle, std::vector<CellMetric>(16, CellMetric{1.0, 2.0, 1.0})),
               ConstructionError);
  EXPECT_THROW(DiscreteBand(4, 4, Topology::Rectangle, std::vector<CellMetric>(15)), ConstructionError);
}

TEST(WarpedBand, CosBandWidthAndCurvature) {
  const auto m = cos_model(2, -0.5, 0.5);
  const auto b = build_warped_band(m, 64, 64);
  EXPECT_NEAR(band_width(b), 1.0, 1e-9);
  EXPECT_LT(max_interior_scalar_error(b, 2.0, 8), 1e-3);
  EXPECT_LT(max_interior_scalar_error(b, 2.0, 1), 0.1);
}

TEST(WarpedBand, CurvatureConvergesUnderRefinement) {
  for (const auto &m : {cos_model(2, -0.5, 0.5), sinh_model(2, 0.5, 1.5), power_model(2, 0.5, 1.5)}) {
    const double expected = scalar_curvature_profile(m, m.lower() + 0.5 * m.width());
    // Second order away from the boundary rows, first order next to them.
    const double coarse = max_interior_scalar_error(build_warped_band(m, 32, 32), expected, 4);
    const double fine = max_interior_scalar_error(build_warped_band(m, 64, 64), expected, 8);
    EXPECT_LT(fine, 0.3 * coarse);
    EXPECT_LT(fine, 0.03);
    const double near_coarse = max_interior_scalar_error(build_warped_band(m, 32, 32), expected, 1);
    const double near_fine = max_interior_scalar_error(build_warped_band(m, 64, 64), expected, 1);
    EXPECT_LT(near_fine, 0.6 * near_coarse);
  }
}

TEST(WarpedBand, ConstantModelIsFlatCylinder) {
  const auto warped = build_warped_band(constant_model(2, 0.0, 2.0), 16, 32);
  const auto flat = build_flat_cylinder(2.0, 1.0, 32, 16);
  ASSERT_EQ(warped.cell_count(), flat.cell_count());
  for (int c = 0; c < flat.cell_count(); ++c) {
    EXPECT_DOUBLE_EQ(warped.metrics()[c].g11, flat.metrics()[c].g11);
    EXPECT_DOUBLE_EQ(warped.metrics()[c].g22, flat.metrics()[c].g22);
    EXPECT_EQ(warped.metrics()[c].g12, 0.0);
  }
}

TEST(WarpedBand, RejectsHigherDimensionalModels) {
  EXPECT_THROW(build_warped_band(cos_model(3, -0.3, 0.3), 16, 16), UnsupportedError);
  EXPECT_THROW(build_warped_band(cos_model(2, -0.3, 0.3), 3, 16), ArgumentError);
  EXPECT_THROW(build_warped_band(cos_model(2, -0.3, 0.3), 16, 16, 0.0), ArgumentError);
}

TEST(BandWidth, ShearedRectangleAgainstDenseOracle) {
  const CellMetric g{1.0, 0.6, 1.0};
  const int nu = 10, nv = 40;
  const auto b = build_band(nu, nv, Topology::Rectangle, [&](int, int) { return g; });
  const double exact = nu / std::sqrt(g.g22 / g.det());
  const double w = band_width(b);
  EXPECT_NEAR(w, dense_width(g, nu, nv, 4, 8), 1e-9);
  // The 8-neighbor graph overestimates by the lattice metrication factor,
  // here |(1,-1)|_g / exact = sqrt(0.8) / 0.8.
  EXPECT_GE(w, exact - 1e-12);
  EXPECT_NEAR(w / exact, std::sqrt(0.8) / 0.8, 1e-9);
  const double finer = dense_width(g, nu, nv, 4, 16);
  EXPECT_GE(finer, exact - 1e-12);
  EXPECT_LT(finer, w);
  EXPECT_LT(finer / exact, 1.01);
}

TEST(BandWidth, RefinementIsMonotoneAndConverges) {
  // Metric stretched along u by a factor that varies in v: the width is
  // realized along the cheapest column, 1.5 * (1 - 0.5) = 0.75.
  auto band_at = [](int level) {
    const int nu = 4 << level, nv = 8 << level;
    return build_band(nu, nv, Topology::CylinderPeriodicInV, [&](int, int j) {
      const double v = 2.0 * M_PI * (j + 0.5) / nv;
      const double f = 1.5 * (1.0 - 0.5 * std::cos(v)) / nu;
      return CellMetric{f * f, 0.0, std::pow(2.0 * M_PI / nv, 2)};
    });
  };
  std::vector<double> widths;
  for (int level = 0; level < 4; ++level)
    widths.push_back(band_width(band_at(level)));
  for (std::size_t k = 1; k < widths.size(); ++k)
    EXPECT_LE(widths[k], widths[k - 1] + 1e-12);
  for (double w : widths)
    EXPECT_GE(w, 0.75 - 1e-12);
  EXPECT_LT(std::abs(widths[3] - widths[2]), std::abs(widths[1] - widths[0]) + 1e-12);
  EXPECT_NEAR(widths[3] / widths[2], 1.0, 0.01);
}

TEST(BandWidth, DistanceCacheIsRaceFree) {
  const auto b = build_warped_band(cos_model(2, -0.5, 0.5), 48, 48);
  const auto reference = build_warped_band(cos_model(2, -0.5, 0.5), 48, 48).distance_from_lower();
  std::vector<std::thread> threads;
  std::vector<double> widths(8);
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] { widths[t] = band_width(b); });
  for (auto &t : threads)
    t.join();
  for (double w : widths)
    EXPECT_EQ(w, widths[0]);
  EXPECT_EQ(b.distance_from_lower(), reference);
}

TEST(BandFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  const auto b = build_band(5, 7, Topology::Rectangle, [&](int, int) {
    const double g11 = unit(rng), g22 = unit(rng);
    return CellMetric{g11, 0.3 * std::sqrt(g11 * g22) * (unit(rng) - 0.5), g22};
  });
  std::stringstream s;
  write_band(s, b);
  const auto back = read_band(s);
  EXPECT_EQ(back.nu(), 5);
  EXPECT_EQ(back.nv(), 7);
  EXPECT_EQ(back.topology(), Topology::Rectangle);
  for (int c = 0; c < b.cell_count(); ++c) {
    EXPECT_EQ(back.metrics()[c].g11, b.metrics()[c].g11);
    EXPECT_EQ(back.metrics()[c].g12, b.metrics()[c].g12);
    EXPECT_EQ(back.metrics()[c].g22, b.metrics()[c].g22);
  }
  std::stringstream again;
  write_band(again, back);
  std::stringstream first;
  write_band(first, b);
  EXPECT_EQ(again.str(), first.str());
}

TEST(BandFile, ParseErrors) {
  for (const char *text : {"", "mesh 2 2 rectangle\n", "band 2 2 rectangle\n1 0 1\n",
                           "band 2 2 torus\n1 0 1\n1 0 1\n1 0 1\n1 0 1\n",
                           "band 2 2 rectangle\n1 0 1\n1 0 1\n1 0 1\n1 0 1\n7\n",
                           "band 2 2 rectangle\n1 0 1\n1 2 1\n1 0 1\n1 0 1\n",
                           "band 2 2 cylinder\n1 0 1\n1 0 1\n1 0 1\n1 0 1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_band(in), ParseError) << text;
  }
}

TEST(LipschitzMap, ProductMetricIsLinear) {
  const auto b = build_flat_cylinder(2.0, 1.0, 32, 32);
  const auto map = lipschitz_band_map(b, 0.0, 1.0, 0.25);
  EXPECT_NEAR(map.lipschitz, 0.5, 1e-9);
  EXPECT_LT(map.lipschitz, 1.0);
  for (int i = 0; i <= b.nu(); ++i)
    for (int j = 0; j < b.vertex_columns(); ++j)
      EXPECT_NEAR(map.values[b.vertex_index(i, j)], i / 32.0, 1e-12);
  for (int j = 0; j < b.vertex_columns(); ++j) {
    EXPECT_EQ(map.values[b.vertex_index(0, j)], 0.0);
    EXPECT_EQ(map.values[b.vertex_index(b.nu(), j)], 1.0);
  }
}

TEST(LipschitzMap, HypothesisFailure) {
  const auto b = build_flat_cylinder(2.0, 1.0, 16, 16);
  EXPECT_THROW(lipschitz_band_map(b, 0.0, 2.0, 0.0), PreconditionError);
  EXPECT_THROW(lipschitz_band_map(b, 0.0, 1.6, 0.25), PreconditionError);
  EXPECT_THROW(lipschitz_band_map(b, 1.0, 1.0, 0.25), ArgumentError);
  EXPECT_THROW(lipschitz_band_map(b, 0.0, 1.0, 1.0), ArgumentError);
}

TEST(LipschitzMap, RandomBandsStayBelowOne) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int nu = 8 + trial % 5, nv = 8 + trial % 3;
    const auto b = build_band(nu, nv, trial % 2 ? Topology::Rectangle : Topology::CylinderPeriodicInV,
                              [&](int, int) {
                                const double g11 = 0.02 + 0.05 * unit(rng), g22 = 0.02 + 0.05 * unit(rng);
                                return CellMetric{g11, 0.4 * std::sqrt(g11 * g22) * (unit(rng) - 0.5), g22};
                              });
    const double margin = 0.1 + 0.3 * unit(rng);
    const double length = 0.9 * band_width(b) * (1.0 - margin);
    const auto map = lipschitz_band_map(b, -0.2, -0.2 + length, margin);
    EXPECT_LT(map.lipschitz, 1.0);
    EXPECT_LE(map.lipschitz, map.declared_bound + 1e-12);
    EXPECT_NEAR(measure_lipschitz(b, map.values), map.lipschitz, 1e-15);
    for (int j = 0; j < b.vertex_columns(); ++j) {
      EXPECT_EQ(map.values[b.vertex_index(0, j)], -0.2);
      EXPECT_EQ(map.values[b.vertex_index(nu, j)], -0.2 + length);
    }
  }
}

TEST(Separation, LoopsAndRegions) {
  const auto b = build_flat_cylinder(2.0, 1.0, 8, 8);
  EXPECT_TRUE(separation_check(b, horizontal_loop(b, 4)));
  const Curve small{{{3, 3}, {3, 4}, {4, 4}, {4, 3}}, true};
  EXPECT_FALSE(separation_check(b, small));
  EXPECT_TRUE(separation_check(b, lower_rows(b, 3)));
  EXPECT_FALSE(separation_check(b, std::vector<char>(b.cell_count(), 0)));
  EXPECT_THROW(separation_check(b, std::vector<char>(3, 0)), ArgumentError);
}

TEST(Separation, RandomValidRegionsSeparate) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> row(1, 7);
  const auto b = build_flat_cylinder(2.0, 1.0, 8, 10);
  for (int trial = 0; trial < 50; ++trial) {
    // Column heights give a region containing the lower collar and avoiding
    // the upper boundary; random extra cells never reach the top row.
    std::vector<char> cells(b.cell_count(), 0);
    for (int j = 0; j < b.nv(); ++j)
      for (int i = 0; i < row(rng); ++i)
        cells[b.cell_index(i, j)] = 1;
    for (int extra = 0; extra < 5; ++extra)
      cells[b.cell_index(row(rng) - 1, rng() % b.nv())] = 1;
    EXPECT_TRUE(separation_check(b, cells));
  }
}

TEST(Separation, InvariantUnderRelabeling) {
  const auto b = build_flat_cylinder(2.0, 1.0, 8, 8);
  // Row 3 for v in [0, 4], row 5 for v in [4, 8], joined by vertical steps.
  const Curve loop{{{3, 0}, {3, 1}, {3, 2}, {3, 3}, {3, 4}, {4, 4}, {5, 4}, {5, 5}, {5, 6}, {5, 7}, {5, 0}, {4, 0}},
                   true};
  ASSERT_TRUE(separation_check(b, loop));
  for (std::size_t shift = 1; shift < loop.vertices.size(); ++shift) {
    Curve rotated = loop;
    std::rotate(rotated.vertices.begin(), rotated.vertices.begin() + shift, rotated.vertices.end());
    EXPECT_TRUE(separation_check(b, rotated));
  }
  Curve reversed = loop;
  std::reverse(reversed.vertices.begin(), reversed.vertices.end());
  EXPECT_TRUE(separation_check(b, reversed));
}

TEST(Structural, FlatCylinderConstantModelIsEquality) {
  const auto b = build_flat_cylinder(2.0, 1.0, 16, 16);
  const auto m = constant_model(2, 0.0, 1.0);
  const auto map = lipschitz_band_map(b, 0.0, 1.0, 0.25);
  const auto r = structural_check(b, map, m, {horizontal_loop(b, 4), horizontal_loop(b, 11)}, 1e-9);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.curves_checked, 2);
  EXPECT_EQ(r.segments_checked, 32);
  EXPECT_NEAR(r.worst_margin, 0.0, 1e-9);
}

TEST(Structural, WarpedBandAgainstItsOwnModel) {
  const auto m = cos_model(2, -0.5, 0.5);
  double previous = INFINITY;
  for (int n : {32, 64}) {
    const auto b = build_warped_band(m, n, n);
    const auto map = coordinate_band_map(b, -0.5, 0.5);
    std::vector<Curve> loops;
    for (int i = 1; i < n; ++i)
      loops.push_back(horizontal_loop(b, i));
    const auto r = structural_check(b, map, m, loops, 1.0);
    EXPECT_LT(std::abs(r.worst_margin), 0.1);
    EXPECT_LT(std::abs(r.worst_margin), previous);
    previous = std::abs(r.worst_margin);
  }
}

TEST(Structural, FlatCylinderAgainstModels) {
  const auto b = build_flat_cylinder(2.0, 1.0, 32, 32);
  std::vector<Curve> loops;
  for (int i = 1; i < 32; ++i)
    loops.push_back(horizontal_loop(b, i));

  const auto cos_map = lipschitz_band_map(b, -0.5, 0.5, 0.25);
  EXPECT_FALSE(structural_check(b, cos_map, cos_model(2, -0.5, 0.5), loops, 1e-6).holds);

  const auto power_map = lipschitz_band_map(b, 0.5, 1.5, 0.25);
  const auto power = structural_check(b, power_map, power_model(2, 0.5, 1.5), loops, 1e-6);
  EXPECT_TRUE(power.holds);
  EXPECT_GT(power.worst_margin, 0.1);
}

TEST(Structural, MapMustTargetModelInterval) {
  const auto b = build_flat_cylinder(2.0, 1.0, 16, 16);
  const auto map = lipschitz_band_map(b, 0.0, 1.0, 0.25);
  EXPECT_THROW(structural_check(b, map, cos_model(2, -0.5, 0.5), horizontal_loop(b, 3), 1e-6), ArgumentError);
}
