#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pluvial/family.hpp"
#include "pluvial/frame.hpp"
#include "pluvial/spline.hpp"

namespace pluvial {

enum class TermKind { kCategorical, kLinear, kSmooth, kRandomIntercept };

enum class Transform { kNone, kLog };

/// Decomposition groups a term may belong to.
inline constexpr const char* kGroups[] = {"building", "topo", "clim", "region"};

struct TermSpec {
  TermKind kind = TermKind::kSmooth;
  std::string covariate;
  /// Unique within a spec; defaults to the covariate name.
  std::string label;
  std::string group;
  /// Basis dimension of a smooth.
  int k = 10;
  /// Smooth: freeze outside these percentiles. Linear: truncate the covariate.
  std::optional<ClampPercentiles> clamp;
  Transform transform = Transform::kNone;
};

enum class Temporal { kAnnual, kQuarterly };

struct FitOptions {
  double pirls_tol = 1e-6;
  int max_pirls_iter = 200;
  double outer_tol = 1e-5;
  int max_outer_iter = 200;
  double ridge = 1e-10;
};

/// Declarative model: intercept + terms + offset log(exposure) + log(value).
struct ModelSpec {
  std::string label = "model";
  FamilyKind family = FamilyKind::kNegBinomial;
  /// Dispersion held fixed instead of estimated (negative binomial only).
  std::optional<double> fixed_theta;
  Temporal temporal = Temporal::kAnnual;
  std::vector<TermSpec> terms;
  FitOptions options;

  /// Throws ValidationError on duplicate labels, unknown groups, bad k.
  void validate() const;
};

std::string to_string(TermKind kind);
TermKind parse_term_kind(const std::string& s);
std::string to_string(Temporal t);
Temporal parse_temporal(const std::string& s);

/// Fitted column layout and data-dependent state of one term.
struct TermEncoding {
  TermSpec spec;
  int col_start = 0;
  int ncols = 0;
  /// Categorical: all levels, reference first. Random intercept: regions.
  std::vector<std::string> levels;
  std::optional<SplineBasis> basis;
  /// Smooths: orthogonal rotation of the centered basis that diagonalizes the
  /// penalty, range-space directions first, null space last.
  Eigen::MatrixXd rotation;
  /// Diagonal of the rotated penalty (zero on the null space).
  Eigen::VectorXd penalty_diag;
  /// Linear terms: truncation bounds and training mean of the transformed value.
  std::optional<double> clamp_lo;
  std::optional<double> clamp_hi;
  double center = 0.0;

  bool penalized() const {
    return spec.kind == TermKind::kSmooth || spec.kind == TermKind::kRandomIntercept;
  }
  /// Transformed (and for linear terms, truncated) covariate value.
  double transform(double x) const;
  /// Design columns of a smooth at a transformed covariate value.
  Eigen::VectorXd smooth_row(double v) const { return rotation.transpose() * basis->design_row(v); }
  /// Sets rotation and penalty_diag from the basis.
  void diagonalize_penalty();
};

/// Intercept in column 0, then each term's block.
struct Encoding {
  std::vector<TermEncoding> terms;
  int ncoef = 1;

  /// Learns levels, bases and centering from training data.
  static Encoding build(const ModelFrame& frame, const ModelSpec& spec);
  int find(const std::string& label) const;
};

struct EncodeReport {
  /// Rows whose categorical level was unseen and mapped to the reference.
  std::size_t unknown_levels = 0;
  /// Rows whose region was unseen and given a zero random effect.
  std::size_t unknown_regions = 0;
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd offset;
  Eigen::VectorXd y;
};

Design encode(const Encoding& enc, const ModelFrame& frame, EncodeReport* report = nullptr);

/// Block of the penalty matrix belonging to one penalized term.
struct PenaltyBlock {
  int term = 0;
  int col_start = 0;
  Eigen::MatrixXd s;
  int rank = 0;
  /// Sum of logs of the positive eigenvalues of s.
  double log_det_plus = 0.0;
};

std::vector<PenaltyBlock> penalty_blocks(const Encoding& enc);

/// eta_i = sum_j x_ij beta_j + offset_i, accumulated in a fixed order so that
/// a row gives the same value whatever matrix it belongs to.
Eigen::VectorXd linear_predictor(const Design& d, const Eigen::VectorXd& beta);

/// Contribution of a term to the linear predictor of each row of a frame,
/// reading only the term's own covariate.
Eigen::VectorXd term_eta(const Encoding& enc, int term, const ModelFrame& frame,
                         const Eigen::VectorXd& beta, EncodeReport* report = nullptr);

/// Contribution of a term to the linear predictor of each row.
Eigen::VectorXd term_contribution(const Encoding& enc, int term, const Design& d,
                                  const Eigen::VectorXd& beta);

}  // namespace pluvial
