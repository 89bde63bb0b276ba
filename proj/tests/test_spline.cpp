#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pluvial/errors.hpp"
#include "pluvial/spline.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {
namespace {

std::vector<double> uniform_sample(std::size_t n, double a, double b, std::uint64_t seed) {
  Sampler s(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = s.uniform(a, b);
  return x;
}

TEST(Spline, PenaltyMatchesQuadrature) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = uniform_sample(400, -3.0, 7.0, seed);
    for (int k : {4, 6, 10}) {
      const auto b = SplineBasis::build(x, k, std::nullopt, false);
      const Eigen::MatrixXd q = oracle::penalty_quadrature(b, 2000);
      const Eigen::MatrixXd s = b.penalty();
      EXPECT_LT((q - s).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, s.cwiseAbs().maxCoeff()))
          << "seed " << seed << " k " << k;
    }
  }
}

TEST(Spline, PenaltyIsPsdAndAnnihilatesLines) {
  const auto x = uniform_sample(300, 0.0, 10.0, 3);
  const auto b = SplineBasis::build(x, 8, std::nullopt, false);
  const Eigen::MatrixXd s = b.penalty();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
  Eigen::VectorXd beta(b.k());
  for (int j = 0; j < b.k(); ++j) beta(j) = 2.5 * b.knots()[j] - 1.0;
  EXPECT_NEAR(beta.dot(s * beta), 0.0, 1e-9);
  // A line in knot values reproduces the line everywhere, including beyond the knots.
  for (double t : {-5.0, 0.3, 4.4, 9.99, 15.0}) EXPECT_NEAR(b.eval_row(t).dot(beta), 2.5 * t - 1.0, 1e-9);
}

TEST(Spline, KnotsAndClampsAreType7Quantiles) {
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.push_back(i);
  for (int i = 0; i < 30; ++i) x.push_back(10.0);  // repeats do not move knots
  const auto b = SplineBasis::build(x, 5, ClampPercentiles{0.1, 0.9}, false);
  ASSERT_TRUE(b.clamp_lo() && b.clamp_hi());
  EXPECT_DOUBLE_EQ(*b.clamp_lo(), oracle::quantile7(x, 0.1));
  EXPECT_DOUBLE_EQ(*b.clamp_hi(), oracle::quantile7(x, 0.9));

  std::vector<double> clamped;
  for (double v : x) clamped.push_back(std::clamp(v, *b.clamp_lo(), *b.clamp_hi()));
  const auto distinct = distinct_sorted(clamped);
  for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(b.knots()[j], oracle::quantile7(distinct, j / 4.0));
}

TEST(Spline, ClampFreezesValuesAndDerivative) {
  const auto x = uniform_sample(500, 0.0, 100.0, 11);
  const auto b = SplineBasis::build(x, 6, ClampPercentiles{0.05, 0.95});
  const double lo = *b.clamp_lo(), hi = *b.clamp_hi();
  for (double t : {lo - 1.0, lo - 50.0, -1e6}) {
    EXPECT_EQ(b.design_row(t), b.design_row(lo));
    EXPECT_EQ(b.derivative_row(t).norm(), 0.0);
  }
  for (double t : {hi + 1.0, hi + 50.0, 1e6}) {
    EXPECT_EQ(b.design_row(t), b.design_row(hi));
    EXPECT_EQ(b.derivative_row(t).norm(), 0.0);
  }
}

TEST(Spline, DerivativeMatchesFiniteDifference) {
  const auto x = uniform_sample(300, -2.0, 2.0, 12);
  const auto b = SplineBasis::build(x, 7, std::nullopt, false);
  for (double t = -1.9; t < 1.9; t += 0.173) {
    const double h = 1e-5;
    const Eigen::VectorXd fd = (b.eval_row(t + h) - b.eval_row(t - h)) / (2.0 * h);
    EXPECT_LT((fd - b.derivative_row(t)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Spline, CenteredColumnsHaveZeroTrainingMean) {
  const auto x = uniform_sample(1000, 5.0, 25.0, 13);
  const auto b = SplineBasis::build(x, 9);
  ASSERT_EQ(b.dim(), 8);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(b.dim());
  for (double v : x) sum += b.design_row(v);
  EXPECT_LT(sum.cwiseAbs().maxCoeff() / static_cast<double>(x.size()), 1e-12);
  const Eigen::MatrixXd& z = b.constraint_basis();
  EXPECT_LT((z.transpose() * z - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spline, UnpenalizedLeastSquaresRecoversLine) {
  const auto x = uniform_sample(200, 0.0, 1.0, 14);
  const auto b = SplineBasis::build(x, 5, std::nullopt, false);
  Eigen::MatrixXd xm(x.size(), b.k());
  Eigen::VectorXd y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm.row(static_cast<Eigen::Index>(i)) = b.eval_row(x[i]).transpose();
    y(static_cast<Eigen::Index>(i)) = x[i];
  }
  const Eigen::VectorXd beta = xm.colPivHouseholderQr().solve(y);
  for (double t : {0.05, 0.5, 0.77}) EXPECT_NEAR(b.eval_row(t).dot(beta), t, 1e-9);
}

TEST(Spline, RejectsDegenerateInput) {
  std::vector<double> few = {1, 1, 2, 2, 3, 3};
  EXPECT_THROW(SplineBasis::build(few, 4), ValidationError);
  EXPECT_NO_THROW(SplineBasis::build(few, 3));
  std::vector<double> bad = {1, 2, NAN, 4, 5};
  EXPECT_THROW(SplineBasis::build(bad, 3), ValidationError);
  EXPECT_THROW(SplineBasis::build(uniform_sample(50, 0, 1, 1), 2), ValidationError);
  EXPECT_THROW(SplineBasis::build(uniform_sample(50, 0, 1, 1), 4, ClampPercentiles{0.9, 0.1}), ValidationError);
  EXPECT_THROW(SplineBasis({0.0, 1.0, 1.0}, std::nullopt, std::nullopt, std::nullopt), ValidationError);
}

}  // namespace
}  // namespace pluvial
