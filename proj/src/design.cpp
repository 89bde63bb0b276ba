#include "pluvial/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pluvial/errors.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

namespace {

double apply_transform(Transform t, double x, const std::string& covariate) {
  if (t == Transform::kNone) return x;
  if (!(x > 0.0)) throw ValidationError("log transform of non-positive '" + covariate + "' value");
  return std::log(x);
}

std::vector<double> transformed_column(const ModelFrame& frame, const TermSpec& t) {
  const auto& col = frame.numeric_column(t.covariate);
  std::vector<double> out(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (!std::isfinite(col[i])) throw ValidationError("non-finite value of covariate '" + t.covariate + "'");
    out[i] = apply_transform(t.transform, col[i], t.covariate);
  }
  return out;
}

}  // namespace

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::kCategorical: return "categorical";
    case TermKind::kLinear: return "linear";
    case TermKind::kSmooth: return "smooth";
    case TermKind::kRandomIntercept: return "random_intercept";
  }
  return "?";
}

TermKind parse_term_kind(const std::string& s) {
  if (s == "categorical") return TermKind::kCategorical;
  if (s == "linear") return TermKind::kLinear;
  if (s == "smooth") return TermKind::kSmooth;
  if (s == "random_intercept") return TermKind::kRandomIntercept;
  throw ValidationError("unknown term kind '" + s + "'");
}

std::string to_string(Temporal t) { return t == Temporal::kAnnual ? "annual" : "quarterly"; }

Temporal parse_temporal(const std::string& s) {
  if (s == "annual") return Temporal::kAnnual;
  if (s == "quarterly") return Temporal::kQuarterly;
  throw ValidationError("unknown temporal resolution '" + s + "' (expected annual or quarterly)");
}

void ModelSpec::validate() const {
  if (family == FamilyKind::kGaussian && temporal == Temporal::kQuarterly)
    throw ValidationError("quarterly models need a count family");
  if (fixed_theta && !(*fixed_theta > 0.0)) throw ValidationError("fixed theta must be positive");
  std::set<std::string> labels;
  for (const auto& t : terms) {
    const std::string& label = t.label.empty() ? t.covariate : t.label;
    if (t.covariate.empty()) throw ValidationError("term without covariate");
    if (!labels.insert(label).second) throw ValidationError("duplicate term label '" + label + "'");
    if (std::find_if(std::begin(kGroups), std::end(kGroups),
                     [&](const char* g) { return t.group == g; }) == std::end(kGroups))
      throw ValidationError("term '" + label + "' has unknown group '" + t.group +
                            "' (expected building, topo, clim or region)");
    if (t.kind == TermKind::kSmooth && t.k < 3)
      throw ValidationError("smooth '" + label + "' needs k >= 3");
    if (t.clamp && !(t.clamp->lo >= 0.0 && t.clamp->lo < t.clamp->hi && t.clamp->hi <= 1.0))
      throw ValidationError("term '" + label + "' clamp percentiles must satisfy 0 <= lo < hi <= 1");
    if (t.clamp && (t.kind == TermKind::kCategorical || t.kind == TermKind::kRandomIntercept))
      throw ValidationError("term '" + label + "': clamps apply to smooth and linear terms only");
  }
}

double TermEncoding::transform(double x) const {
  double v = apply_transform(spec.transform, x, spec.covariate);
  if (clamp_lo && v < *clamp_lo) v = *clamp_lo;
  if (clamp_hi && v > *clamp_hi) v = *clamp_hi;
  return v;
}

void TermEncoding::diagonalize_penalty() {
  const Eigen::MatrixXd s = basis->design_penalty();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const auto m = s.rows();
  const int rank = basis->k() - 2;
  rotation.resize(m, m);
  penalty_diag = Eigen::VectorXd::Zero(m);
  // Eigenvalues come ascending; reverse so the largest lead.
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(m - 1 - j);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    rotation.col(j) = v;
    if (j < rank) penalty_diag(j) = es.eigenvalues()(m - 1 - j);
  }
  if (!(penalty_diag.size() == 0 || penalty_diag(std::max(rank - 1, 0)) > 0.0))
    throw ComputationError("smooth '" + spec.label + "' penalty has unexpected rank");
}

Encoding Encoding::build(const ModelFrame& frame, const ModelSpec& spec) {
  spec.validate();
  if (frame.size() == 0) throw ValidationError("no training rows");
  Encoding enc;
  int col = 1;
  for (const auto& ts : spec.terms) {
    TermEncoding te;
    te.spec = ts;
    if (te.spec.label.empty()) te.spec.label = ts.covariate;
    te.col_start = col;
    switch (ts.kind) {
      case TermKind::kCategorical:
      case TermKind::kRandomIntercept: {
        const auto& values = frame.categorical_column(ts.covariate);
        std::set<std::string> levels(values.begin(), values.end());
        te.levels.assign(levels.begin(), levels.end());
        te.ncols = static_cast<int>(te.levels.size()) - (ts.kind == TermKind::kCategorical ? 1 : 0);
        if (ts.kind == TermKind::kCategorical && te.ncols < 1)
          throw ValidationError("categorical '" + te.spec.label + "' has a single level in the training data");
        break;
      }
      case TermKind::kLinear: {
        auto x = transformed_column(frame, ts);
        if (ts.clamp) {
          std::vector<double> sorted = x;
          std::sort(sorted.begin(), sorted.end());
          te.clamp_lo = quantile_sorted(sorted, ts.clamp->lo);
          te.clamp_hi = quantile_sorted(sorted, ts.clamp->hi);
          for (double& v : x) v = std::clamp(v, *te.clamp_lo, *te.clamp_hi);
        }
        te.center = mean(x);
        te.ncols = 1;
        break;
      }
      case TermKind::kSmooth: {
        const auto x = transformed_column(frame, ts);
        te.basis = SplineBasis::build(x, ts.k, ts.clamp, true);
        te.ncols = te.basis->dim();
        te.diagonalize_penalty();
        break;
      }
    }
    col += te.ncols;
    enc.terms.push_back(std::move(te));
  }
  enc.ncoef = col;
  return enc;
}

int Encoding::find(const std::string& label) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].spec.label == label) return static_cast<int>(i);
  return -1;
}

namespace {

// Fills the term's columns of x (rows x ncoef).
void encode_term(const TermEncoding& te, const ModelFrame& frame, Eigen::MatrixXd& x, EncodeReport& rep) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  switch (te.spec.kind) {
    case TermKind::kCategorical:
    case TermKind::kRandomIntercept: {
      const auto& values = frame.categorical_column(te.spec.covariate);
      const bool re = te.spec.kind == TermKind::kRandomIntercept;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = values[static_cast<std::size_t>(i)];
        auto it = std::lower_bound(te.levels.begin(), te.levels.end(), v);
        if (it == te.levels.end() || *it != v) {
          ++(re ? rep.unknown_regions : rep.unknown_levels);
          continue;
        }
        const int level = static_cast<int>(it - te.levels.begin());
        if (re)
          x(i, te.col_start + level) = 1.0;
        else if (level > 0)
          x(i, te.col_start + level - 1) = 1.0;
      }
      break;
    }
    case TermKind::kLinear: {
      const auto& values = frame.numeric_column(te.spec.covariate);
      for (Eigen::Index i = 0; i < n; ++i)
        x(i, te.col_start) = te.transform(values[static_cast<std::size_t>(i)]) - te.center;
      break;
    }
    case TermKind::kSmooth: {
      const auto& values = frame.numeric_column(te.spec.covariate);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = te.transform(values[static_cast<std::size_t>(i)]);
        if (!std::isfinite(v)) throw ValidationError("non-finite value of covariate '" + te.spec.covariate + "'");
        x.row(i).segment(te.col_start, te.ncols) = te.smooth_row(v).transpose();
      }
      break;
    }
  }
}

}  // namespace

Design encode(const Encoding& enc, const ModelFrame& frame, EncodeReport* report) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  Design d;
  d.x = Eigen::MatrixXd::Zero(n, enc.ncoef);
  d.offset.resize(n);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    if (!(frame.exposure[r] > 0.0) || !(frame.value[r] > 0.0))
      throw ValidationError("row " + frame.id[r] + ": exposure and value must be positive");
    d.offset(i) = std::log(frame.exposure[r]) + std::log(frame.value[r]);
    d.y(i) = frame.y[r];
    d.x(i, 0) = 1.0;
  }
  EncodeReport rep;
  for (const auto& te : enc.terms) encode_term(te, frame, d.x, rep);
  if (report) *report = rep;
  return d;
}

Eigen::VectorXd term_eta(const Encoding& enc, int term, const ModelFrame& frame,
                         const Eigen::VectorXd& beta, EncodeReport* report) {
  const auto& te = enc.terms.at(static_cast<std::size_t>(term));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frame.size()), enc.ncoef);
  EncodeReport rep;
  encode_term(te, frame, x, rep);
  if (report) {
    report->unknown_levels += rep.unknown_levels;
    report->unknown_regions += rep.unknown_regions;
  }
  Design d{std::move(x), Eigen::VectorXd(), Eigen::VectorXd()};
  return term_contribution(enc, term, d, beta);
}

std::vector<PenaltyBlock> penalty_blocks(const Encoding& enc) {
  std::vector<PenaltyBlock> out;
  for (std::size_t t = 0; t < enc.terms.size(); ++t) {
    const auto& te = enc.terms[t];
    if (!te.penalized()) continue;
    PenaltyBlock b;
    b.term = static_cast<int>(t);
    b.col_start = te.col_start;
    if (te.spec.kind == TermKind::kRandomIntercept) {
      b.s = Eigen::MatrixXd::Identity(te.ncols, te.ncols);
      b.rank = te.ncols;
      b.log_det_plus = 0.0;
    } else {
      b.s = te.penalty_diag.asDiagonal();
      b.rank = te.basis->k() - 2;
      for (int j = 0; j < b.rank; ++j) b.log_det_plus += std::log(te.penalty_diag(j));
    }
    out.push_back(std::move(b));
  }
  return out;
}

Eigen::VectorXd linear_predictor(const Design& d, const Eigen::VectorXd& beta) {
  const Eigen::Index n = d.x.rows(), p = d.x.cols();
  Eigen::VectorXd eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) s += d.x(i, j) * beta(j);
    eta(i) = s + d.offset(i);
  }
  return eta;
}

Eigen::VectorXd term_contribution(const Encoding& enc, int term, const Design& d,
                                  const Eigen::VectorXd& beta) {
  const auto& te = enc.terms.at(static_cast<std::size_t>(term));
  const Eigen::Index n = d.x.rows();
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = te.col_start; j < te.col_start + te.ncols; ++j) s += d.x(i, j) * beta(j);
    c(i) = s;
  }
  return c;
}

}  // namespace pluvial
