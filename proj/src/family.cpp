#include "pluvial/family.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "pluvial/errors.hpp"

namespace pluvial {

std::string Family::name() const {
  switch (kind) {
    case FamilyKind::kPoisson: return "poisson";
    case FamilyKind::kNegBinomial: return "negbin";
    case FamilyKind::kGaussian: return "gaussian";
  }
  return "?";
}

Family Family::parse(const std::string& name, double theta) {
  if (name == "poisson") return poisson();
  if (name == "negbin") return negbin(theta);
  if (name == "gaussian") return gaussian();
  throw ValidationError("unknown family '" + name + "' (expected poisson or negbin)");
}

double Family::mean(double eta) const {
  return kind == FamilyKind::kGaussian ? eta : std::exp(eta);
}

double Family::variance(double mu) const {
  switch (kind) {
    case FamilyKind::kPoisson: return mu;
    case FamilyKind::kNegBinomial: return mu + mu * mu / theta;
    case FamilyKind::kGaussian: return 1.0;
  }
  return 1.0;
}

Family::Derivs Family::derivs(double y, double eta) const {
  Derivs d;
  switch (kind) {
    case FamilyKind::kPoisson: {
      const double mu = std::exp(eta);
      d.l = y * eta - mu - std::lgamma(y + 1.0);
      d.g = y - mu;
      d.w = mu;
      d.w_eta = mu;
      break;
    }
    case FamilyKind::kNegBinomial: {
      const double mu = std::exp(eta);
      const double t = theta;
      const double s = mu + t;
      d.l = std::lgamma(y + t) - std::lgamma(t) - std::lgamma(y + 1.0) + t * std::log(t / s) +
            y * (eta - std::log(s));
      d.g = t * (y - mu) / s;
      d.w = t * mu * (y + t) / (s * s);
      d.w_eta = t * (y + t) * mu * (t - mu) / (s * s * s);
      break;
    }
    case FamilyKind::kGaussian: {
      const double r = y - eta;
      d.l = -0.5 * r * r - 0.5 * std::log(2.0 * std::numbers::pi);
      d.g = r;
      d.w = 1.0;
      d.w_eta = 0.0;
      break;
    }
  }
  return d;
}

Family::ThetaDerivs Family::theta_derivs(double y, double eta) const {
  ThetaDerivs d;
  if (kind != FamilyKind::kNegBinomial) return d;
  using boost::math::digamma;
  const double mu = std::exp(eta);
  const double t = theta;
  const double s = mu + t;
  const double dl_dt = digamma(y + t) - digamma(t) + std::log(t) + 1.0 - std::log(s) - (y + t) / s;
  const double dg_dt = (y - mu) * mu / (s * s);
  const double dw_dt = mu * (mu * (y + 2.0 * t) - y * t) / (s * s * s);
  d.l = t * dl_dt;
  d.g = t * dg_dt;
  d.w = t * dw_dt;
  return d;
}

double Family::prob_at_least_one(double mu) const {
  if (!(mu > 0.0)) return 0.0;
  if (kind == FamilyKind::kNegBinomial) return -std::expm1(theta * std::log1p(-mu / (theta + mu)));
  return -std::expm1(-mu);
}

}  // namespace pluvial
