#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pluvial/design.hpp"
#include "pluvial/family.hpp"
#include "pluvial/frame.hpp"

namespace pluvial {

/// Penalty matrix sum_j lambda_j S_j embedded in p x p, plus ridge * I.
Eigen::MatrixXd total_penalty(int ncoef, const std::vector<PenaltyBlock>& blocks,
                              const std::vector<double>& lambda, double ridge);

/// Penalized log-likelihood sum_i l_i - beta' S beta / 2 (S including the ridge).
double penalized_loglik(const Design& d, const Family& fam, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& beta);

/// Gradient of penalized_loglik with respect to beta.
Eigen::VectorXd penalized_gradient(const Design& d, const Family& fam, const Eigen::MatrixXd& s,
                                   const Eigen::VectorXd& beta);

struct PirlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  double penalized_loglik = 0.0;
  double loglik = 0.0;
  /// Infinity norm of the penalized gradient at beta.
  double grad_norm = 0.0;
  int iterations = 0;
  /// Converged by the relative-change rule only (gradient test not met).
  bool stalled = false;
};

/// Newton iteration (observed information) with step halving for fixed
/// smoothing parameters. Throws ComputationError when it fails to converge.
PirlsResult pirls_fit(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
                      const std::vector<double>& lambda, const FitOptions& opt,
                      const Eigen::VectorXd* beta_start = nullptr);

/// Laplace-approximate restricted marginal likelihood and the gradient of its
/// negative with respect to (log lambda_1, ..., log lambda_m[, log theta]).
struct LamlResult {
  double laml = 0.0;
  Eigen::VectorXd grad;
  PirlsResult pirls;
  /// Inverse penalized Hessian at the mode.
  Eigen::MatrixXd h_inv;
};

LamlResult laml_eval(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
                     const std::vector<double>& lambda, const FitOptions& opt, bool theta_gradient,
                     const Eigen::VectorXd* beta_start = nullptr);

/// Convenience: criterion value at log smoothing parameters.
double laml(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
            const std::vector<double>& log_lambda, const FitOptions& opt = {});

struct FitDiagnostics {
  int outer_iterations = 0;
  double outer_grad_norm = 0.0;
  int pirls_iterations = 0;
  double pirls_grad_norm = 0.0;
  double laml = 0.0;
  std::size_t n_obs = 0;
  std::vector<std::string> trace;
};

struct FittedModel {
  ModelSpec spec;
  Family family;
  Encoding encoding;
  Eigen::VectorXd beta;
  /// One smoothing parameter per penalized term, in term order.
  std::vector<double> lambda;
  std::optional<double> sigma_u;
  Eigen::MatrixXd covariance;
  /// Effective degrees of freedom per term (1 for unpenalized columns).
  std::vector<double> edf;
  FitDiagnostics diagnostics;
  /// Linear predictor of the training rows (not serialized).
  Eigen::VectorXd fitted_eta;

  Design design(const ModelFrame& frame, EncodeReport* report = nullptr) const {
    return encode(encoding, frame, report);
  }
  Eigen::VectorXd predict_eta(const ModelFrame& frame, EncodeReport* report = nullptr) const;
  /// Expected counts over each row's exposure.
  Eigen::VectorXd predict_mu(const ModelFrame& frame, EncodeReport* report = nullptr) const;
  double prob_at_least_one(double mu) const { return family.prob_at_least_one(mu); }
  /// Index of the penalized term among `lambda`, or -1.
  int lambda_index(int term) const;
};

/// Chooses smoothing parameters (and theta) by minimizing the negative
/// criterion with a bounded Newton iteration; coefficients by PIRLS.
FittedModel fit_gam(const ModelFrame& train, const ModelSpec& spec);

/// Training/prediction frame matching the model's temporal resolution.
ModelFrame training_frame(const std::vector<ContractRecord>& records, const ModelSpec& spec);

/// Sorted random-effect estimates against standard normal quantiles at
/// (i - 0.5) / n. Empty when the model has no random intercept.
std::vector<std::pair<double, double>> random_effect_qq(const FittedModel& m);

}  // namespace pluvial
