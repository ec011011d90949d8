#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hcf/superquadric.hpp"

namespace hcf {
namespace {

const Superquadric kUnitSphere{1, 1, 1, 1, 1};
const Superquadric kPeg{0.25, 0.05, 0.05, 1, 1};

class SuperquadricProperties : public ::testing::Test {
 protected:
  std::mt19937_64 gen{99};

  Superquadric random_sq() {
    std::uniform_real_distribution<double> axis(0.02, 2.0), eps(0.1, 2.0);
    return {axis(gen), axis(gen), axis(gen), eps(gen), eps(gen)};
  }
  Vec3 random_dir() {
    std::normal_distribution<double> n;
    Vec3 v(n(gen), n(gen), n(gen));
    return v.normalized();
  }
  // Distance along `dir` at which the ray leaves the surface, by bisection on F.
  static double surface_radius(const Superquadric& sq, const Vec3& dir) {
    double lo = 0.0, hi = 1.0;
    while (inside_outside(sq, hi * dir) < 1.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (inside_outside(sq, mid * dir) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

TEST(Superquadric, ImplicitValueExamples) {
  EXPECT_EQ(implicit_value(kUnitSphere, Vec3(1, 0, 0)), 0.0);
  EXPECT_EQ(implicit_value(kUnitSphere, Vec3(2, 0, 0)), 3.0);
  // 3·0.9^10 − 1, evaluated with 50-digit arithmetic beforehand.
  EXPECT_NEAR(implicit_value({1, 1, 1, 0.2, 0.2}, Vec3(0.9, 0.9, 0.9)), 0.0460353203, 1e-12);
}

TEST(Superquadric, NegativeCoordinatesUseAbsoluteValues) {
  const Superquadric box{1, 1, 1, 0.3, 0.7};
  const Vec3 p(0.4, -0.5, 0.6);
  EXPECT_EQ(implicit_value(box, p), implicit_value(box, p.cwiseAbs()));
  EXPECT_TRUE(std::isfinite(implicit_value(box, -p)));
}

TEST(Superquadric, ZeroCoordinatesAreFine) {
  EXPECT_EQ(implicit_value({1, 2, 3, 0.5, 1.5}, Vec3::Zero()), -1.0);
  EXPECT_EQ(inside_outside({1, 2, 3, 0.5, 1.5}, Vec3(0, 0, 3)), 1.0);
}

TEST(Superquadric, InsideOutsideExamples) {
  EXPECT_EQ(inside_outside(kUnitSphere, Vec3(1, 0, 0)), 1.0);
  EXPECT_EQ(inside_outside(kUnitSphere, Vec3(2, 0, 0)), 4.0);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(gen), u(gen), u(gen));
    EXPECT_DOUBLE_EQ(inside_outside(kPeg, p) - 1.0, implicit_value(kPeg, p));
  }
}

TEST(Superquadric, RadialDisplacementExamples) {
  EXPECT_EQ(radial_displacement(kUnitSphere, Vec3(2, 0, 0)).d, Vec3(1, 0, 0));
  EXPECT_EQ(radial_displacement(kUnitSphere, Vec3(0, 1, 0)).d, Vec3::Zero());
  EXPECT_LT((radial_displacement(kPeg, Vec3(0.5, 0, 0)).d - Vec3(0.25, 0, 0)).norm(), 1e-12);
  EXPECT_LT((radial_displacement(kPeg, Vec3(0, -0.2, 0)).d - Vec3(0, -0.15, 0)).norm(), 1e-12);
}

TEST(Superquadric, RadialDisplacementOnSurfaceIsZero) {
  const Superquadric sq{0.3, 0.1, 0.2, 0.5, 1.5};
  const Vec3 p = surface_point(sq, 0.4, -1.1);
  EXPECT_LT(radial_displacement(sq, p).d.norm(), 1e-14);
}

TEST(Superquadric, RadialDisplacementSignedForInteriorPoints) {
  const Vec3 d = radial_displacement(kUnitSphere, Vec3(0.5, 0, 0)).d;
  EXPECT_NEAR(d.x(), -0.5, 1e-15);  // inward
}

TEST(Superquadric, RadialDisplacementRejectsOrigin) {
  EXPECT_THROW(radial_displacement(kPeg, Vec3::Zero()), SingularityError);
  EXPECT_THROW(radial_displacement(kPeg, Vec3(1e-10, 0, 0)), SingularityError);
}

TEST(Superquadric, ValidateRejectsBadParameters) {
  EXPECT_THROW((Superquadric{0, 1, 1, 1, 1}.validate()), InvalidArgument);
  EXPECT_THROW((Superquadric{1, 1, 1, 0, 1}.validate()), InvalidArgument);
  EXPECT_THROW((Superquadric{1, 1, 1, 1, 2.5}.validate()), InvalidArgument);
  EXPECT_NO_THROW(kPeg.validate());
}

// --- properties over random superquadrics ----------------------------------------

TEST_F(SuperquadricProperties, Collinearity) {
  for (int i = 0; i < 1000; ++i) {
    const Superquadric sq = random_sq();
    std::uniform_real_distribution<double> scale(0.1, 5.0);
    const Vec3 p = random_dir() * scale(gen);
    const Vec3 d = radial_displacement(sq, p).d;
    EXPECT_LE(d.cross(p).norm(), 1e-12 * d.norm() * p.norm() + 1e-300);
  }
}

TEST_F(SuperquadricProperties, SphereExactness) {
  std::uniform_real_distribution<double> radius(0.05, 3.0), dist(0.01, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = radius(gen);
    const Vec3 p = random_dir() * dist(gen);
    const Vec3 d = radial_displacement({a, a, a, 1, 1}, p).d;
    EXPECT_NEAR(d.norm(), std::abs(p.norm() - a), 1e-12);
  }
}

TEST_F(SuperquadricProperties, MatchesBisectedSurfaceDistance) {
  // Independent route: locate the surface crossing on the ray by bisection.
  for (int i = 0; i < 200; ++i) {
    const Superquadric sq = random_sq();
    const Vec3 u = random_dir();
    const double r = surface_radius(sq, u);
    const Vec3 d = radial_displacement(sq, 1.7 * r * u).d;
    EXPECT_NEAR(d.norm(), 0.7 * r, 1e-9 * r);
  }
}

TEST_F(SuperquadricProperties, ScalingCovariance) {
  std::uniform_real_distribution<double> lam(0.1, 10.0), dist(0.1, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const Superquadric sq = random_sq();
    const double l = lam(gen);
    const Vec3 p = random_dir() * dist(gen);
    const Superquadric scaled{l * sq.ax, l * sq.ay, l * sq.az, sq.eps1, sq.eps2};
    const Vec3 d = radial_displacement(sq, p).d;
    const Vec3 ds = radial_displacement(scaled, l * p).d;
    EXPECT_LE((ds - l * d).norm(), 1e-12 * l * (d.norm() + p.norm()));
  }
}

TEST_F(SuperquadricProperties, MonotoneAlongRay) {
  for (int i = 0; i < 1000; ++i) {
    const Superquadric sq = random_sq();
    const Vec3 u = random_dir();
    const double r = surface_radius(sq, u);
    double prev = 0.0;
    for (double t = 1.01; t < 4.0; t += 0.25) {
      const double m = radial_displacement(sq, t * r * u).d.norm();
      EXPECT_GT(m, prev);
      prev = m;
    }
  }
}

// --- sampling ----------------------------------------------------------------------

TEST(SuperquadricSampling, UnitSphereRadius) {
  Rng rng(1);
  for (const Vec3& p : sample_surface(kUnitSphere, 100, rng)) EXPECT_NEAR(p.norm(), 1.0, 1e-9);
}

TEST_F(SuperquadricProperties, SamplesLieOnSurface) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Superquadric sq = random_sq();
    for (const Vec3& p : sample_surface(sq, 40, rng)) {
      EXPECT_LT(std::abs(implicit_value(sq, p)), 1e-9);
    }
  }
}

TEST(SuperquadricSampling, Reproducible) {
  Rng a(42), b(42);
  const auto pa = sample_surface(kPeg, 30, a);
  const auto pb = sample_surface(kPeg, 30, b);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
  Rng c(0);
  EXPECT_THROW(sample_surface(kPeg, 0, c), InvalidArgument);
}

// --- fitting ------------------------------------------------------------------------

void expect_within_percent(const Superquadric& got, const Superquadric& want, double pct) {
  EXPECT_NEAR(got.ax, want.ax, pct * want.ax);
  EXPECT_NEAR(got.ay, want.ay, pct * want.ay);
  EXPECT_NEAR(got.az, want.az, pct * want.az);
  EXPECT_NEAR(got.eps1, want.eps1, pct * want.eps1);
  EXPECT_NEAR(got.eps2, want.eps2, pct * want.eps2);
}

TEST(SuperquadricFit, RecoversPegFromPerturbedStart) {
  Rng rng(3);
  const auto cloud = sample_surface(kPeg, 400, rng);
  for (double sign : {1.0, -1.0}) {
    const Superquadric initial{kPeg.ax * (1 + 0.1 * sign), kPeg.ay * (1 - 0.1 * sign),
                               kPeg.az * (1 + 0.1 * sign), kPeg.eps1 * (1 - 0.1 * sign),
                               kPeg.eps2 * (1 + 0.1 * sign)};
    expect_within_percent(fit_superquadric(cloud, initial).params, kPeg, 0.02);
  }
}

TEST(SuperquadricFit, RecoversUnitSphere) {
  Rng rng(4);
  const auto cloud = sample_surface(kUnitSphere, 400, rng);
  const FitResult fit = fit_superquadric(cloud, {1.1, 0.9, 1.0, 1.2, 0.8});
  expect_within_percent(fit.params, kUnitSphere, 0.02);
  EXPECT_LT(fit.cost, 1e-12);
}

TEST(SuperquadricFit, RecoversBoxLikeShape) {
  const Superquadric box{0.3, 0.2, 0.1, 0.3, 0.6};
  Rng rng(8);
  const auto cloud = sample_surface(box, 600, rng);
  expect_within_percent(fit_superquadric(cloud, {0.32, 0.19, 0.105, 0.33, 0.55}).params, box, 0.02);
}

TEST(SuperquadricFit, DegenerateCloudFails) {
  const std::vector<Vec3> cloud(50, Vec3(0.1, 0.02, 0.01));
  try {
    fit_superquadric(cloud, kPeg);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_GT(e.best().ax, 0.0);
  }
}

TEST(SuperquadricFit, TooFewPoints) {
  Rng rng(1);
  EXPECT_THROW(fit_superquadric(sample_surface(kPeg, 19, rng), kPeg), InvalidArgument);
}

// --- point cloud text -----------------------------------------------------------

TEST(PointCloudIo, RoundTripsExactly) {
  Rng rng(9);
  const auto cloud = sample_surface(kPeg, 25, rng);
  std::stringstream ss;
  write_point_cloud(ss, cloud);
  const auto back = read_point_cloud(ss);
  ASSERT_EQ(back.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(back[i], cloud[i]);
}

TEST(PointCloudIo, RejectsMalformedLine) {
  std::stringstream ss("1 2 3\n\n4 5\n");
  EXPECT_THROW(read_point_cloud(ss), ConfigError);
}

}  // namespace
}  // namespace hcf
