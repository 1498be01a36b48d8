#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "warpband/model_space.hpp"
#include "warpband/warping.hpp"

using namespace warpband;

namespace {

double max_identity_residual(const ModelSpace &m, int points) {
  double worst = 0.0;
  for (int i = 0; i < points; ++i)
    worst = std::max(worst, std::abs(warped_identity_residual(m, m.lower() + m.width() * i / (points - 1.0))));
  return worst;
}

WarpingFunction sampled_from(double (*f)(double), double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = f(a + (b - a) * i / (n - 1.0));
  return WarpingFunction::sampled(a, b, v);
}

} // namespace

TEST(EvalWarp, ConstantFunction) {
  const auto s = WarpingFunction::constant(0.0, 1.0).eval(0.5);
  EXPECT_EQ(s.value, 1.0);
  EXPECT_EQ(s.d1, 0.0);
  EXPECT_EQ(s.d2, 0.0);
}

TEST(EvalWarp, Exponential) {
  const auto s = exp_model(3, 0.0, 1.0).warp().eval(0.0);
  EXPECT_DOUBLE_EQ(s.value, 1.0);
  EXPECT_DOUBLE_EQ(s.d1, 1.0);
  EXPECT_DOUBLE_EQ(s.d2, 1.0);
}

TEST(EvalWarp, CosModelAtZeroMatchesHandDerivativeAndFiniteDifference) {
  const auto w = cos_model(7, -0.2, 0.2).warp();
  const auto s = w.eval(0.0);
  EXPECT_NEAR(s.value, 1.0, 1e-15);
  EXPECT_NEAR(s.d1, 0.0, 1e-15);
  // phi'' (0) = -p c^2 with c = 7/2, p = 2/7.
  EXPECT_NEAR(s.d2, -3.5, 1e-14);
  const double h = 1e-5;
  const double fd2 = (w.eval(h).value - 2.0 * w.eval(0.0).value + w.eval(-h).value) / (h * h);
  EXPECT_NEAR(fd2, s.d2, 1e-5);
  for (double t : {-0.15, 0.05, 0.17}) {
    const auto at = w.eval(t);
    const double fd1 = (w.eval(t + h).value - w.eval(t - h).value) / (2 * h);
    EXPECT_NEAR(fd1, at.d1, 1e-9);
  }
}

TEST(EvalWarp, OutsideDomainThrows) {
  const auto w = WarpingFunction::constant(0.0, 1.0);
  EXPECT_THROW(w.eval(1.5), DomainError);
  EXPECT_THROW(w.eval(-0.1), DomainError);
  EXPECT_THROW(scalar_curvature_profile(cos_model(3, -0.3, 0.3), 0.4), DomainError);
}

TEST(ScalarCurvature, CatalogValues) {
  const auto cos7 = cos_model(7, -0.2, 0.2);
  const auto flat = constant_model(4, 0.0, 1.0);
  const auto exp4 = exp_model(4, 0.0, 1.0);
  const auto pow5 = power_model(5, 0.3, 2.0);
  for (int i = 0; i <= 20; ++i) {
    const double s = i / 20.0;
    EXPECT_NEAR(scalar_curvature_profile(cos7, -0.2 + 0.4 * s), 42.0, 1e-10);
    EXPECT_EQ(scalar_curvature_profile(flat, s), 0.0);
    EXPECT_NEAR(scalar_curvature_profile(exp4, s), -12.0, 1e-12);
    EXPECT_NEAR(scalar_curvature_profile(pow5, 0.3 + 1.7 * s), 0.0, 1e-10);
  }
}

TEST(MeanCurvature, CatalogValues) {
  const auto cos7 = cos_model(7, -0.2, 0.2);
  for (double t : {-0.2, -0.1, 0.0, 0.13, 0.2})
    EXPECT_NEAR(mean_curvature_profile(cos7, t), -6.0 * std::tan(3.5 * t), 1e-12);
  EXPECT_EQ(mean_curvature_profile(constant_model(5, 0.0, 1.0), 0.3), 0.0);
  EXPECT_NEAR(mean_curvature_profile(exp_model(4, 0.0, 1.0), 0.7), 3.0, 1e-14);
}

TEST(BoundaryMeanCurvatures, SignConventionMatchesClosedForms) {
  const double lm = -0.25, lp = 0.3;
  const auto [hm, hp] = boundary_mean_curvatures(cos_model(7, lm, lp));
  EXPECT_NEAR(hm, 6.0 * std::tan(3.5 * lm), 1e-12);
  EXPECT_NEAR(hp, -6.0 * std::tan(3.5 * lp), 1e-12);

  const auto [fm, fp] = boundary_mean_curvatures(constant_model(3, 0.0, 2.0));
  EXPECT_EQ(fm, 0.0);
  EXPECT_EQ(fp, 0.0);

  const double a = 0.4, b = 1.3;
  const auto [sm, sp] = boundary_mean_curvatures(sinh_model(3, a, b));
  auto coth = [](double x) { return 1.0 / std::tanh(x); };
  EXPECT_NEAR(sm, -2.0 * coth(1.5 * a), 1e-12);
  EXPECT_NEAR(sp, 2.0 * coth(1.5 * b), 1e-12);
}

TEST(IdentityResidual, EveryCatalogModelTenThousandPoints) {
  for (const auto &entry : model_catalog())
    for (int n = 2; n <= 7; ++n) {
      const auto m = entry.make(n, entry.default_l_minus, entry.default_l_plus);
      EXPECT_LT(max_identity_residual(m, 10000), 1e-8) << entry.name << " n=" << n;
    }
}

TEST(IdentityResidual, TwoDimensionalCosineByHand) {
  // n = 2, phi = cos t: Sc = 2, h = -tan t, 2h' = -2 sec^2 t.
  const auto m = cos_model(2, -1.0, 1.0);
  for (double t : {-0.9, -0.3, 0.0, 0.6}) {
    EXPECT_NEAR(scalar_curvature_profile(m, t), 2.0, 1e-12);
    EXPECT_NEAR(mean_curvature_profile(m, t), -std::tan(t), 1e-12);
    EXPECT_NEAR(warped_identity_residual(m, t), 0.0, 1e-12);
  }
}

TEST(IdentityResidual, SampledWarpConvergesAtSecondOrder) {
  const auto exact = cos_model(3, -0.4, 0.5);
  double previous = 0.0;
  for (std::size_t n : {257u, 513u, 1025u, 2049u}) {
    const ModelSpace m(3, 0.0, sample_warp(exact.warp(), n));
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      worst = std::max(worst, std::abs(warped_identity_residual(m, -0.4 + 0.9 * (i + 0.5) / (n - 1.0))));
    if (previous > 0.0) {
      EXPECT_GT(previous / worst, 3.0) << n;
      EXPECT_LT(previous / worst, 5.0) << n;
    }
    previous = worst;
  }
  EXPECT_LT(previous, 1e-5);
}

TEST(SampledWarp, ProfilesConvergeToAnalyticAtSecondOrder) {
  const auto exact = sinh_model(4, 0.5, 1.5);
  double previous = 0.0;
  for (std::size_t n : {129u, 257u, 513u}) {
    const ModelSpace m(4, 0.0, sample_warp(exact.warp(), n));
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 0.5 + i / (n - 1.0);
      worst = std::max(worst, std::abs(scalar_curvature_profile(m, t) - scalar_curvature_profile(exact, t)));
      worst = std::max(worst, std::abs(mean_curvature_profile(m, t) - mean_curvature_profile(exact, t)));
    }
    if (previous > 0.0)
      EXPECT_NEAR(previous / worst, 4.0, 1.0) << n;
    previous = worst;
  }
}

TEST(SampledWarp, CenteredAndOneSidedDerivativesAgreeToSecondOrder) {
  double previous = 0.0;
  for (std::size_t n : {65u, 129u, 257u}) {
    const auto w = sampled_from([](double t) { return std::exp(std::sin(t)); }, 0.0, 2.0, n);
    const auto &s = *w.samples();
    const double dx = s.spacing;
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
      const double forward = (-3.0 * s.value[i] + 4.0 * s.value[i + 1] - s.value[i + 2]) / (2 * dx);
      worst = std::max(worst, std::abs(forward - s.d1[i]));
    }
    if (previous > 0.0)
      EXPECT_NEAR(previous / worst, 4.0, 0.5);
    previous = worst;
  }
}

TEST(SampledWarp, RejectsShortOrNonPositiveData) {
  EXPECT_THROW(WarpingFunction::sampled(0.0, 1.0, std::vector<double>(7, 1.0)), ConstructionError);
  std::vector<double> v(10, 1.0);
  v[4] = 0.0;
  EXPECT_THROW(WarpingFunction::sampled(0.0, 1.0, v), ConstructionError);
  EXPECT_THROW(WarpingFunction::constant(1.0, 1.0), ConstructionError);
}

TEST(WarpCsv, ReadsWithAndWithoutHeader) {
  std::ostringstream with, without;
  with << "t,phi\n";
  for (int i = 0; i < 11; ++i) {
    with << i * 0.1 << ',' << std::exp(i * 0.1) << '\n';
    without << i * 0.1 << ',' << std::exp(i * 0.1) << '\n';
  }
  std::istringstream a(with.str()), b(without.str());
  const auto wa = read_warp_csv(a), wb = read_warp_csv(b);
  EXPECT_DOUBLE_EQ(wa.lower(), 0.0);
  EXPECT_DOUBLE_EQ(wa.upper(), 1.0);
  EXPECT_DOUBLE_EQ(wa.eval(0.5).value, wb.eval(0.5).value);
}

TEST(WarpCsv, RejectsNonUniformAndDecreasingGrids) {
  std::ostringstream uneven, decreasing;
  for (int i = 0; i < 10; ++i) {
    uneven << (i == 5 ? 0.52 : i * 0.1) << ",1\n";
    decreasing << -i * 0.1 << ",1\n";
  }
  std::istringstream a(uneven.str()), b(decreasing.str()), c("t,phi\n0,1\n0.1,1\n");
  EXPECT_THROW(read_warp_csv(a), ParseError);
  EXPECT_THROW(read_warp_csv(b), ParseError);
  EXPECT_THROW(read_warp_csv(c), ParseError);
}

TEST(LogConcavity, Examples) {
  EXPECT_EQ(log_concavity_classify(exp_model(3, 0.0, 1.0).warp()), LogConcavity::LogConstant);
  EXPECT_EQ(log_concavity_classify(cos_model(5, -0.3, 0.3).warp()), LogConcavity::StrictlyLogConcave);
  const auto cosh = sampled_from([](double t) { return std::cosh(t); }, -1.0, 1.0, 401);
  EXPECT_EQ(log_concavity_classify(cosh), LogConcavity::Neither);
}

TEST(LogConcavity, CatalogClassificationAtDefaultTolerance) {
  for (int n = 2; n <= 7; ++n) {
    EXPECT_EQ(log_concavity_classify(cos_model(n, -0.2, 0.2).warp(), 1e-10), LogConcavity::StrictlyLogConcave);
    EXPECT_EQ(log_concavity_classify(power_model(n, 0.5, 2.0).warp(), 1e-10), LogConcavity::StrictlyLogConcave);
    EXPECT_EQ(log_concavity_classify(sinh_model(n, 0.5, 2.0).warp(), 1e-10), LogConcavity::StrictlyLogConcave);
    EXPECT_EQ(log_concavity_classify(constant_model(n, 0.0, 1.0).warp(), 1e-10), LogConcavity::LogConstant);
    EXPECT_EQ(log_concavity_classify(exp_model(n, 0.0, 1.0).warp(), 1e-10), LogConcavity::LogConstant);
  }
}

TEST(Catalog, ContainsEightFamiliesWithConstantScalarCurvature) {
  const auto catalog = model_catalog();
  ASSERT_EQ(catalog.size(), 8u);
  for (const auto &entry : catalog)
    for (int n = 2; n <= 6; ++n) {
      const auto m = entry.make(n, entry.default_l_minus, entry.default_l_plus);
      for (int i = 0; i <= 50; ++i)
        EXPECT_NEAR(scalar_curvature_profile(m, m.lower() + m.width() * i / 50.0), entry.scalar(n), 1e-9)
            << entry.name << " n=" << n;
    }
}

TEST(Catalog, StatedExamples) {
  const auto sphere = sphere_annulus(3, -0.5, 0.5);
  const auto euclid = euclidean_annulus(3, 1.0, 2.0);
  EXPECT_EQ(sphere.base_scalar(), 2.0);
  for (double t : {-0.5, 0.0, 0.4}) {
    EXPECT_NEAR(scalar_curvature_profile(sphere, t), 6.0, 1e-12);
    EXPECT_NEAR(scalar_curvature_profile(euclid, t + 1.5), 0.0, 1e-12);
  }
  EXPECT_TRUE(is_model_space(cos_model(7, -0.2, 0.2)));
  EXPECT_EQ(catalog_entry("hyperbolic").id, CatalogId::HyperbolicAnnulus);
  EXPECT_THROW(catalog_entry("torus"), ArgumentError);
}

TEST(Catalog, ParameterRangesAreEnforced) {
  EXPECT_THROW(cos_model(7, -0.2, 0.5), ConstructionError);
  EXPECT_THROW(cos_model(3, 0.3, 0.2), ConstructionError);
  EXPECT_THROW(power_model(3, 0.0, 1.0), ConstructionError);
  EXPECT_THROW(sinh_model(3, -0.1, 1.0), ConstructionError);
  EXPECT_THROW(cos_model(1, -0.1, 0.1), ConstructionError);
  EXPECT_NO_THROW(cos_model(7, -0.2, 0.44));
}

TEST(CurvatureProfileTable, BoundaryValuesMatchProfile) {
  const auto m = cos_model(4, -0.3, 0.5);
  const auto p = curvature_profile(m, 101);
  ASSERT_EQ(p.t.size(), 101u);
  EXPECT_EQ(p.t.front(), -0.3);
  EXPECT_EQ(p.t.back(), 0.5);
  EXPECT_DOUBLE_EQ(p.H_minus, -p.mean.front());
  EXPECT_DOUBLE_EQ(p.H_plus, p.mean.back());
}
