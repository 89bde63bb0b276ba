#pragma once

#include <string>

namespace pluvial {

enum class FamilyKind { kPoisson, kNegBinomial, kGaussian };

/// Response distribution with its canonical-use link: log for the count
/// families, identity for the unit-variance Gaussian (used for testing the
/// marginal likelihood machinery, where the Laplace approximation is exact).
struct Family {
  FamilyKind kind = FamilyKind::kPoisson;
  /// Negative binomial size; Var = mu + mu^2 / theta.
  double theta = 1.0;

  static Family poisson() { return {FamilyKind::kPoisson, 1.0}; }
  static Family negbin(double theta) { return {FamilyKind::kNegBinomial, theta}; }
  static Family gaussian() { return {FamilyKind::kGaussian, 1.0}; }

  bool has_theta() const { return kind == FamilyKind::kNegBinomial; }
  std::string name() const;
  static Family parse(const std::string& name, double theta = 1.0);

  double mean(double eta) const;
  double variance(double mu) const;

  /// Per-observation log-likelihood and its eta derivatives.
  struct Derivs {
    double l = 0.0;
    double g = 0.0;      // dl/deta
    double w = 0.0;      // -d2l/deta2
    double w_eta = 0.0;  // dw/deta
  };
  Derivs derivs(double y, double eta) const;
  double loglik(double y, double eta) const { return derivs(y, eta).l; }

  /// Derivatives with respect to log(theta) (negative binomial only).
  struct ThetaDerivs {
    double l = 0.0;
    double g = 0.0;
    double w = 0.0;
  };
  ThetaDerivs theta_derivs(double y, double eta) const;

  /// P(N >= 1) for a count with mean mu.
  double prob_at_least_one(double mu) const;
};

}  // namespace pluvial
