#include "pluvial/spline.hpp"

#include <algorithm>
#include <cmath>

#include "pluvial/errors.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

namespace {

// Second-divided-difference operator D ((k-2) x k) and the tridiagonal
// Gram matrix B ((k-2) x (k-2)) of the natural cubic spline.
void natural_spline_operators(const std::vector<double>& knots, Eigen::MatrixXd& d,
                              Eigen::MatrixXd& b) {
  const int k = static_cast<int>(knots.size());
  d = Eigen::MatrixXd::Zero(k - 2, k);
  b = Eigen::MatrixXd::Zero(k - 2, k - 2);
  for (int i = 0; i < k - 2; ++i) {
    const double h0 = knots[i + 1] - knots[i];
    const double h1 = knots[i + 2] - knots[i + 1];
    d(i, i) = 1.0 / h0;
    d(i, i + 1) = -1.0 / h0 - 1.0 / h1;
    d(i, i + 2) = 1.0 / h1;
    b(i, i) = (h0 + h1) / 3.0;
    if (i + 1 < k - 2) {
      b(i, i + 1) = h1 / 6.0;
      b(i + 1, i) = h1 / 6.0;
    }
  }
}

// Householder reflection H = I - 2uu'/u'u with H c proportional to e_0;
// columns 1.. of H span the orthogonal complement of c.
Eigen::MatrixXd null_space_of_row(const Eigen::VectorXd& c) {
  const int k = static_cast<int>(c.size());
  Eigen::VectorXd u = c;
  const double norm = c.norm();
  if (!(norm > 0.0)) throw ComputationError("degenerate centering constraint");
  u(0) += (c(0) >= 0.0 ? norm : -norm);
  const double uu = u.squaredNorm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k) - (2.0 / uu) * u * u.transpose();
  return h.rightCols(k - 1);
}

}  // namespace

SplineBasis SplineBasis::build(std::span<const double> x_train, int k,
                               std::optional<ClampPercentiles> clamp, bool center) {
  if (k < 3) throw ValidationError("cubic regression spline needs k >= 3");
  for (double x : x_train)
    if (!std::isfinite(x)) throw ValidationError("non-finite covariate value in spline training data");

  std::optional<double> lo, hi;
  std::vector<double> xs(x_train.begin(), x_train.end());
  if (clamp) {
    if (!(clamp->lo >= 0.0 && clamp->lo < clamp->hi && clamp->hi <= 1.0))
      throw ValidationError("clamp percentiles must satisfy 0 <= lo < hi <= 1");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) throw ValidationError("empty spline training data");
    lo = quantile_sorted(sorted, clamp->lo);
    hi = quantile_sorted(sorted, clamp->hi);
    for (double& x : xs) x = std::clamp(x, *lo, *hi);
  }

  const auto distinct = distinct_sorted(xs);
  if (static_cast<int>(distinct.size()) < k)
    throw ValidationError("spline needs at least k = " + std::to_string(k) +
                          " distinct covariate values, found " + std::to_string(distinct.size()));
  std::vector<double> knots(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    knots[static_cast<std::size_t>(j)] =
        quantile_sorted(distinct, static_cast<double>(j) / static_cast<double>(k - 1));

  SplineBasis basis(knots, lo, hi, std::nullopt);
  if (!center) return basis;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  // Row sums accumulated per column with compensation.
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(k));
  for (auto& col : cols) col.reserve(xs.size());
  for (double x : xs) {
    const Eigen::VectorXd row = basis.eval_row(x);
    for (int j = 0; j < k; ++j) cols[static_cast<std::size_t>(j)].push_back(row(j));
  }
  for (int j = 0; j < k; ++j) c(j) = mean(cols[static_cast<std::size_t>(j)]);
  return SplineBasis(std::move(knots), lo, hi, c);
}

SplineBasis::SplineBasis(std::vector<double> knots, std::optional<double> clamp_lo,
                         std::optional<double> clamp_hi, std::optional<Eigen::VectorXd> centering)
    : knots_(std::move(knots)),
      clamp_lo_(clamp_lo),
      clamp_hi_(clamp_hi),
      centering_(std::move(centering)) {
  const int k = static_cast<int>(knots_.size());
  if (k < 3) throw ValidationError("cubic regression spline needs k >= 3");
  for (int j = 1; j < k; ++j)
    if (!(knots_[j] > knots_[j - 1])) throw ValidationError("spline knots must be strictly ascending");
  if (clamp_lo_ && clamp_hi_ && !(*clamp_lo_ <= *clamp_hi_))
    throw ValidationError("spline clamp_lo exceeds clamp_hi");
  if (centering_ && centering_->size() != k) throw ValidationError("centering vector has wrong length");

  Eigen::MatrixXd d, b;
  natural_spline_operators(knots_, d, b);
  second_deriv_ = Eigen::MatrixXd::Zero(k, k);
  second_deriv_.middleRows(1, k - 2) = b.ldlt().solve(d);
  z_ = centering_ ? null_space_of_row(*centering_) : Eigen::MatrixXd::Identity(k, k);
}

double SplineBasis::clamp(double x) const {
  if (clamp_lo_ && x < *clamp_lo_) x = *clamp_lo_;
  if (clamp_hi_ && x > *clamp_hi_) x = *clamp_hi_;
  return x;
}

Eigen::VectorXd SplineBasis::eval_row(double x) const {
  x = clamp(x);
  const int k = this->k();
  Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
  if (x < knots_.front()) {
    const double h = knots_[1] - knots_[0];
    const double dx = x - knots_[0];
    row(0) = 1.0 - dx / h;
    row(1) = dx / h;
    row += dx * (-h / 3.0 * second_deriv_.row(0) - h / 6.0 * second_deriv_.row(1)).transpose();
    return row;
  }
  if (x > knots_.back()) {
    const double h = knots_[k - 1] - knots_[k - 2];
    const double dx = x - knots_[k - 1];
    row(k - 2) = -dx / h;
    row(k - 1) = 1.0 + dx / h;
    row += dx * (h / 6.0 * second_deriv_.row(k - 2) + h / 3.0 * second_deriv_.row(k - 1)).transpose();
    return row;
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int j = static_cast<int>(it - knots_.begin()) - 1;
  j = std::clamp(j, 0, k - 2);
  const double h = knots_[j + 1] - knots_[j];
  const double am = (knots_[j + 1] - x) / h;
  const double ap = (x - knots_[j]) / h;
  const double cm = ((knots_[j + 1] - x) * (knots_[j + 1] - x) * (knots_[j + 1] - x) / h -
                     h * (knots_[j + 1] - x)) / 6.0;
  const double cp = ((x - knots_[j]) * (x - knots_[j]) * (x - knots_[j]) / h - h * (x - knots_[j])) / 6.0;
  row(j) += am;
  row(j + 1) += ap;
  row += (cm * second_deriv_.row(j) + cp * second_deriv_.row(j + 1)).transpose();
  return row;
}

Eigen::VectorXd SplineBasis::derivative_row(double x) const {
  const int k = this->k();
  Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
  if ((clamp_lo_ && x < *clamp_lo_) || (clamp_hi_ && x > *clamp_hi_)) return row;
  if (x < knots_.front()) x = knots_.front();
  if (x > knots_.back()) x = knots_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int j = std::clamp(static_cast<int>(it - knots_.begin()) - 1, 0, k - 2);
  const double h = knots_[j + 1] - knots_[j];
  const double dm = (-3.0 * (knots_[j + 1] - x) * (knots_[j + 1] - x) / h + h) / 6.0;
  const double dp = (3.0 * (x - knots_[j]) * (x - knots_[j]) / h - h) / 6.0;
  row(j) -= 1.0 / h;
  row(j + 1) += 1.0 / h;
  row += (dm * second_deriv_.row(j) + dp * second_deriv_.row(j + 1)).transpose();
  return row;
}

PenaltyMatrix SplineBasis::penalty() const {
  Eigen::MatrixXd d, b;
  natural_spline_operators(knots_, d, b);
  PenaltyMatrix s = d.transpose() * b.ldlt().solve(d);
  return 0.5 * (s + s.transpose());
}

Eigen::VectorXd SplineBasis::design_row(double x) const {
  return z_.transpose() * eval_row(x);
}

PenaltyMatrix SplineBasis::design_penalty() const {
  PenaltyMatrix s = z_.transpose() * penalty() * z_;
  return 0.5 * (s + s.transpose());
}

}  // namespace pluvial
