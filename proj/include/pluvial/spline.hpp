#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pluvial {

/// Curvature penalty of a spline basis, k x k symmetric PSD.
using PenaltyMatrix = Eigen::MatrixXd;

struct ClampPercentiles {
  double lo = 0.01;
  double hi = 0.99;
};

/// Cubic regression spline parameterized by its values at the knots.
///
/// Between knots the function is the natural cubic spline interpolant of the
/// coefficients; beyond the outer knots it continues linearly. Optional clamps
/// freeze the function outside [clamp_lo, clamp_hi]. When centered, the basis
/// drops the direction of the training-sample mean row (sum-to-zero
/// constraint) and has k - 1 columns.
class SplineBasis {
 public:
  /// Knots at type-7 quantiles of the distinct training values (after
  /// clamping), clamps at type-7 percentiles of the raw training values.
  static SplineBasis build(std::span<const double> x_train, int k,
                           std::optional<ClampPercentiles> clamp = std::nullopt,
                           bool center = true);

  SplineBasis(std::vector<double> knots, std::optional<double> clamp_lo,
              std::optional<double> clamp_hi, std::optional<Eigen::VectorXd> centering);

  int k() const { return static_cast<int>(knots_.size()); }
  /// Number of design columns: k - 1 when centered.
  int dim() const { return centering_ ? k() - 1 : k(); }
  const std::vector<double>& knots() const { return knots_; }
  std::optional<double> clamp_lo() const { return clamp_lo_; }
  std::optional<double> clamp_hi() const { return clamp_hi_; }
  bool centered() const { return centering_.has_value(); }
  const std::optional<Eigen::VectorXd>& centering() const { return centering_; }

  double clamp(double x) const;

  /// Uncentered basis values at clamp(x).
  Eigen::VectorXd eval_row(double x) const;
  /// Uncentered first derivative of the basis; zero where the clamp is active.
  Eigen::VectorXd derivative_row(double x) const;
  /// Uncentered curvature penalty: integral of b_i'' b_j'' over the knot range.
  PenaltyMatrix penalty() const;

  /// k x dim() matrix mapping centered coefficients to knot values
  /// (identity when uncentered).
  const Eigen::MatrixXd& constraint_basis() const { return z_; }
  /// Design row for the centered (or raw) parameterization.
  Eigen::VectorXd design_row(double x) const;
  PenaltyMatrix design_penalty() const;

 private:
  std::vector<double> knots_;
  std::optional<double> clamp_lo_;
  std::optional<double> clamp_hi_;
  std::optional<Eigen::VectorXd> centering_;
  Eigen::MatrixXd second_deriv_;  // knot values -> knot second derivatives
  Eigen::MatrixXd z_;
};

}  // namespace pluvial
