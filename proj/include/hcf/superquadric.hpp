#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hcf/errors.hpp"
#include "hcf/random.hpp"
#include "hcf/so3.hpp"

namespace hcf {

inline constexpr double kMinShapeExponent = 0.1;
inline constexpr double kMaxShapeExponent = 2.0;
inline constexpr double kOriginGuard = 1e-9;

/// Superellipsoid with semi-axes (ax, ay, az) in metres and shape
/// exponents eps1 (latitude) and eps2 (longitude).
struct Superquadric {
  double ax = 0.25;
  double ay = 0.05;
  double az = 0.05;
  double eps1 = 1.0;
  double eps2 = 1.0;

  void validate() const {
    if (!(ax > 0.0 && ay > 0.0 && az > 0.0)) {
      throw InvalidArgument("superquadric semi-axes must be positive");
    }
    if (!(eps1 > 0.0 && eps1 <= kMaxShapeExponent && eps2 > 0.0 && eps2 <= kMaxShapeExponent)) {
      throw InvalidArgument("superquadric shape exponents must lie in (0, 2]");
    }
  }

  friend bool operator==(const Superquadric&, const Superquadric&) = default;
};

/// Vector from the surface to the query point along the ray from the
/// body origin, expressed in the body frame.
struct RadialDisplacement {
  Vec3 d = Vec3::Zero();
};

/// Inside-outside function F: 1 on the surface, > 1 outside, < 1 inside.
/// Normalized coordinates enter through their absolute values.
inline double inside_outside(const Superquadric& sq, const Vec3& p) {
  const double ex = 2.0 / sq.eps2;
  const double ez = 2.0 / sq.eps1;
  const double xy = std::pow(std::abs(p.x() / sq.ax), ex) + std::pow(std::abs(p.y() / sq.ay), ex);
  return std::pow(xy, sq.eps2 / sq.eps1) + std::pow(std::abs(p.z() / sq.az), ez);
}

/// Implicit function f = F − 1: negative inside, 0 on the surface, positive outside.
inline double implicit_value(const Superquadric& sq, const Vec3& p) {
  return inside_outside(sq, p) - 1.0;
}

/**
 * d = p·(1 − F(p)^(−eps1/2)). Points outward for exterior queries and inward
 * for interior ones; on spheres ‖d‖ equals the Euclidean surface distance.
 * Throws SingularityError when ‖p‖ ≤ 1e-9.
 */
inline RadialDisplacement radial_displacement(const Superquadric& sq, const Vec3& p) {
  if (!(p.norm() > kOriginGuard)) {
    throw SingularityError("radial displacement is undefined at the superquadric origin");
  }
  const double f = inside_outside(sq, p);
  return {p * (1.0 - std::pow(f, -0.5 * sq.eps1))};
}

namespace detail {
inline double signed_pow(double x, double e) {
  return std::copysign(std::pow(std::abs(x), e), x);
}
}  // namespace detail

/// Surface point at latitude eta ∈ [−π/2, π/2] and longitude omega ∈ [−π, π).
inline Vec3 surface_point(const Superquadric& sq, double eta, double omega) {
  using detail::signed_pow;
  const double ce = signed_pow(std::cos(eta), sq.eps1);
  return Vec3(sq.ax * ce * signed_pow(std::cos(omega), sq.eps2),
              sq.ay * ce * signed_pow(std::sin(omega), sq.eps2),
              sq.az * signed_pow(std::sin(eta), sq.eps1));
}

/// n points on the surface with uniformly drawn (eta, omega).
inline std::vector<Vec3> sample_surface(const Superquadric& sq, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("sample_surface: n must be at least 1");
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = rng.uniform(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
    const double omega = rng.uniform(-std::numbers::pi, std::numbers::pi);
    out.push_back(surface_point(sq, eta, omega));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitResult {
  Superquadric params;
  double cost = 0.0;  // ½·Σ residual²
  int iterations = 0;
};

/// Fit did not converge; best() holds the parameters reached.
class FitError : public Error {
 public:
  FitError(const std::string& what, Superquadric best) : Error(what), best_(best) {}
  const Superquadric& best() const { return best_; }

 private:
  Superquadric best_;
};

struct FitOptions {
  int max_evaluations = 4000;
  double tolerance = 1e-12;
};

namespace detail {

inline Superquadric clamp_params(const Eigen::VectorXd& x) {
  Superquadric sq;
  sq.ax = std::max(x[0], 1e-6);
  sq.ay = std::max(x[1], 1e-6);
  sq.az = std::max(x[2], 1e-6);
  sq.eps1 = std::clamp(x[3], kMinShapeExponent, kMaxShapeExponent);
  sq.eps2 = std::clamp(x[4], kMinShapeExponent, kMaxShapeExponent);
  return sq;
}

// Residual per point: (F^eps1 − 1)·√(ax·ay·az).
struct FitFunctor : Eigen::DenseFunctor<double> {
  explicit FitFunctor(const std::vector<Vec3>& cloud)
      : Eigen::DenseFunctor<double>(5, static_cast<int>(cloud.size())), cloud_(&cloud) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    const Superquadric sq = clamp_params(x);
    const double scale = std::sqrt(sq.ax * sq.ay * sq.az);
    for (std::size_t i = 0; i < cloud_->size(); ++i) {
      const double f = inside_outside(sq, (*cloud_)[i]);
      fvec[static_cast<Eigen::Index>(i)] = (std::pow(f, sq.eps1) - 1.0) * scale;
    }
    return 0;
  }

  const std::vector<Vec3>* cloud_;
};

}  // namespace detail

/**
 * Least-squares superquadric fit to a body-frame-aligned point cloud.
 * Throws InvalidArgument for fewer than 20 points and FitError when the
 * solver stops without converging or the parameters are not identifiable
 * from the cloud (rank-deficient residual Jacobian).
 */
inline FitResult fit_superquadric(const std::vector<Vec3>& cloud, const Superquadric& initial,
                                  const FitOptions& options = {}) {
  if (cloud.size() < 20) throw InvalidArgument("fit_superquadric needs at least 20 points");

  using Functor = Eigen::NumericalDiff<detail::FitFunctor, Eigen::Central>;
  Functor functor{detail::FitFunctor(cloud)};
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.setMaxfev(options.max_evaluations);
  lm.setXtol(options.tolerance);
  lm.setFtol(options.tolerance);

  Eigen::VectorXd x(5);
  x << initial.ax, initial.ay, initial.az, initial.eps1, initial.eps2;
  const auto status = lm.minimize(x);

  FitResult result;
  result.params = detail::clamp_params(x);
  result.iterations = static_cast<int>(lm.iterations());
  result.cost = 0.5 * lm.fnorm() * lm.fnorm();

  using Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::TooManyFunctionEvaluation || status == Status::ImproperInputParameters) {
    throw FitError("superquadric fit did not converge", result.params);
  }

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(cloud.size()), 5);
  functor.df(x, jac);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sv = svd.singularValues();
  if (!(sv[4] > 1e-8 * sv[0])) {
    throw FitError("superquadric parameters are not identifiable from the cloud", result.params);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Point cloud text I/O: one "x y z" triple per line.
// ---------------------------------------------------------------------------

inline std::vector<Vec3> read_point_cloud(std::istream& in) {
  std::vector<Vec3> cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) {
      throw ConfigError("point cloud line " + std::to_string(lineno) + ": expected three numbers");
    }
    cloud.emplace_back(x, y, z);
  }
  return cloud;
}

inline void write_point_cloud(std::ostream& out, const std::vector<Vec3>& cloud) {
  char buf[96];
  for (const Vec3& p : cloud) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
}

}  // namespace hcf
