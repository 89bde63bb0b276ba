#include "pluvial/gam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pluvial/errors.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

namespace {

struct ObsDerivs {
  Eigen::VectorXd g, w, w_eta;
  double loglik = 0.0;
};

ObsDerivs obs_derivs(const Design& d, const Family& fam, const Eigen::VectorXd& eta) {
  const Eigen::Index n = eta.size();
  ObsDerivs o{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), 0.0};
  std::vector<double> l(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto dv = fam.derivs(d.y(i), eta(i));
    l[static_cast<std::size_t>(i)] = dv.l;
    o.g(i) = dv.g;
    o.w(i) = dv.w;
    o.w_eta(i) = dv.w_eta;
  }
  o.loglik = compensated_sum(l);
  return o;
}

Eigen::MatrixXd weighted_crossprod(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd xw = x.array().colwise() * w.array().sqrt();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  return out.selfadjointView<Eigen::Lower>();
}

double initial_intercept(const Design& d, const Family& fam) {
  const Eigen::Index n = d.y.size();
  if (fam.kind == FamilyKind::kGaussian) return (d.y - d.offset).mean();
  std::vector<double> exp_off(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) exp_off[static_cast<std::size_t>(i)] = std::exp(d.offset(i));
  const double ys = d.y.sum();
  const double es = compensated_sum(exp_off);
  return std::log(std::max(ys, 0.1) / es);
}

double quad_form(const Eigen::MatrixXd& s, const Eigen::VectorXd& b) { return b.dot(s * b); }

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

}  // namespace

Eigen::MatrixXd total_penalty(int ncoef, const std::vector<PenaltyBlock>& blocks,
                              const std::vector<double>& lambda, double ridge) {
  if (lambda.size() != blocks.size()) throw ValidationError("one smoothing parameter per penalty block expected");
  Eigen::MatrixXd s = ridge * Eigen::MatrixXd::Identity(ncoef, ncoef);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& b = blocks[j];
    const auto m = b.s.rows();
    s.block(b.col_start, b.col_start, m, m) += lambda[j] * b.s;
  }
  return s;
}

double penalized_loglik(const Design& d, const Family& fam, const Eigen::MatrixXd& s,
                        const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = d.x * beta + d.offset;
  std::vector<double> l(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) l[static_cast<std::size_t>(i)] = fam.loglik(d.y(i), eta(i));
  return compensated_sum(l) - 0.5 * quad_form(s, beta);
}

Eigen::VectorXd penalized_gradient(const Design& d, const Family& fam, const Eigen::MatrixXd& s,
                                   const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = d.x * beta + d.offset;
  const auto o = obs_derivs(d, fam, eta);
  return d.x.transpose() * o.g - s * beta;
}

PirlsResult pirls_fit(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
                      const std::vector<double>& lambda, const FitOptions& opt,
                      const Eigen::VectorXd* beta_start) {
  const auto p = d.x.cols();
  for (double l : lambda)
    if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("smoothing parameters must be positive and finite");
  const Eigen::MatrixXd s = total_penalty(static_cast<int>(p), blocks, lambda, opt.ridge);

  PirlsResult r;
  if (beta_start) {
    r.beta = *beta_start;
  } else {
    r.beta = Eigen::VectorXd::Zero(p);
    r.beta(0) = initial_intercept(d, fam);
  }
  r.eta = d.x * r.beta + d.offset;
  auto o = obs_derivs(d, fam, r.eta);
  double q = o.loglik - 0.5 * quad_form(s, r.beta);
  if (!std::isfinite(q)) {
    r.beta = Eigen::VectorXd::Zero(p);
    r.beta(0) = initial_intercept(d, fam);
    r.eta = d.x * r.beta + d.offset;
    o = obs_derivs(d, fam, r.eta);
    q = o.loglik - 0.5 * quad_form(s, r.beta);
  }
  double last_rel_change = std::numeric_limits<double>::infinity();
  double prev_grad = std::numeric_limits<double>::infinity();
  int flat_steps = 0;

  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = d.x.transpose() * o.g - s * r.beta;
    r.grad_norm = g.lpNorm<Eigen::Infinity>();
    r.iterations = it;
    if (r.grad_norm < opt.pirls_tol) break;
    // Precision floor (e.g. huge smoothing parameters): the objective no
    // longer moves and the gradient no longer shrinks.
    flat_steps = (last_rel_change < 1e-8 && r.grad_norm > 0.5 * prev_grad) ? flat_steps + 1 : 0;
    prev_grad = r.grad_norm;
    if (flat_steps >= 3) {
      r.stalled = true;
      break;
    }
    if (it >= opt.max_pirls_iter)
      throw ComputationError("PIRLS did not converge in " + std::to_string(opt.max_pirls_iter) +
                             " iterations (penalized gradient norm " + fmt(r.grad_norm) + ")");
    const Eigen::MatrixXd h = weighted_crossprod(d.x, o.w) + s;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) throw ComputationError("penalized Hessian is not positive definite");
    const Eigen::VectorXd delta = llt.solve(g);

    const double noise = 1e-13 * (1.0 + std::abs(q));
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, alpha *= 0.5) {
      const Eigen::VectorXd b_new = r.beta + alpha * delta;
      const Eigen::VectorXd eta_new = d.x * b_new + d.offset;
      auto o_new = obs_derivs(d, fam, eta_new);
      const double q_new = o_new.loglik - 0.5 * quad_form(s, b_new);
      if (std::isfinite(q_new) && q_new >= q - noise) {
        last_rel_change = std::abs(q_new - q) / (1.0 + std::abs(q));
        r.beta = b_new;
        r.eta = eta_new;
        o = std::move(o_new);
        q = q_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (last_rel_change < 1e-8) {
        r.stalled = true;
        break;
      }
      throw ComputationError("PIRLS step halving failed (penalized gradient norm " + fmt(r.grad_norm) + ")");
    }
  }
  r.penalized_loglik = q;
  r.loglik = o.loglik;
  return r;
}

LamlResult laml_eval(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
                     const std::vector<double>& lambda, const FitOptions& opt, bool theta_gradient,
                     const Eigen::VectorXd* beta_start) {
  LamlResult res;
  res.pirls = pirls_fit(d, fam, blocks, lambda, opt, beta_start);
  const auto p = d.x.cols();
  const Eigen::Index n = d.x.rows();
  const Eigen::MatrixXd s = total_penalty(static_cast<int>(p), blocks, lambda, opt.ridge);
  const Eigen::VectorXd& beta = res.pirls.beta;
  const auto o = obs_derivs(d, fam, res.pirls.eta);
  const Eigen::MatrixXd h = weighted_crossprod(d.x, o.w) + s;
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success)
    throw ComputationError("penalized Hessian is indefinite at the mode");
  res.h_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  double log_det_h = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) log_det_h += 2.0 * std::log(llt.matrixL()(i, i));

  double log_det_s = 0.0;
  int total_rank = 0;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    log_det_s += blocks[j].rank * std::log(lambda[j]) + blocks[j].log_det_plus;
    total_rank += blocks[j].rank;
  }
  const int null_dim = static_cast<int>(p) - total_rank;
  res.laml = o.loglik - 0.5 * quad_form(s, beta) + 0.5 * log_det_s - 0.5 * log_det_h +
             0.5 * null_dim * std::log(2.0 * std::numbers::pi);

  const std::size_t m = blocks.size() + (theta_gradient ? 1 : 0);
  res.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  // d_i = x_i' H^-1 x_i
  const Eigen::MatrixXd xh = d.x * res.h_inv;
  const Eigen::VectorXd diag = (xh.array() * d.x.array()).rowwise().sum();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& b = blocks[j];
    const auto k = b.s.rows();
    const Eigen::VectorXd sb = lambda[j] * (b.s * beta.segment(b.col_start, k));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    rhs.segment(b.col_start, k) = sb;
    const Eigen::VectorXd dbeta = -(res.h_inv * rhs);
    const Eigen::VectorXd deta = d.x * dbeta;
    const double trace = lambda[j] * (res.h_inv.block(b.col_start, b.col_start, k, k).cwiseProduct(b.s)).sum();
    const double third = (o.w_eta.array() * deta.array() * diag.array()).sum();
    res.grad(static_cast<Eigen::Index>(j)) =
        0.5 * beta.segment(b.col_start, k).dot(sb) - 0.5 * b.rank + 0.5 * trace + 0.5 * third;
  }
  if (theta_gradient) {
    Eigen::VectorXd l_th(n), g_th(n), w_th(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t = fam.theta_derivs(d.y(i), res.pirls.eta(i));
      l_th(i) = t.l;
      g_th(i) = t.g;
      w_th(i) = t.w;
    }
    const Eigen::VectorXd dbeta = res.h_inv * (d.x.transpose() * g_th);
    const Eigen::VectorXd deta = d.x * dbeta;
    std::vector<double> lt(l_th.data(), l_th.data() + n);
    const double dh = ((w_th.array() + o.w_eta.array() * deta.array()) * diag.array()).sum();
    res.grad(static_cast<Eigen::Index>(m - 1)) = -compensated_sum(lt) + 0.5 * dh;
  }
  return res;
}

double laml(const Design& d, const Family& fam, const std::vector<PenaltyBlock>& blocks,
            const std::vector<double>& log_lambda, const FitOptions& opt) {
  std::vector<double> lambda(log_lambda.size());
  for (std::size_t j = 0; j < lambda.size(); ++j) lambda[j] = std::exp(log_lambda[j]);
  return laml_eval(d, fam, blocks, lambda, opt, false).laml;
}

namespace {

constexpr double kRhoLo = -12.0;
constexpr double kRhoHi = 20.0;
constexpr double kLogThetaLo = -7.0;
constexpr double kLogThetaHi = 14.0;

class OuterProblem {
 public:
  OuterProblem(const Design& d, const ModelSpec& spec, std::vector<PenaltyBlock> blocks)
      : d_(d), spec_(spec), blocks_(std::move(blocks)) {
    estimate_theta_ = spec.family == FamilyKind::kNegBinomial && !spec.fixed_theta;
    family_ = spec.family == FamilyKind::kNegBinomial ? Family::negbin(spec.fixed_theta.value_or(1.0))
                                                       : Family{spec.family, 1.0};
  }

  std::size_t dim() const { return blocks_.size() + (estimate_theta_ ? 1 : 0); }
  bool estimate_theta() const { return estimate_theta_; }

  double lo(std::size_t j) const { return j < blocks_.size() ? kRhoLo : kLogThetaLo; }
  double hi(std::size_t j) const { return j < blocks_.size() ? kRhoHi : kLogThetaHi; }

  void init_scales() {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d_.x.cols());
    beta(0) = initial_intercept(d_, family_);
    const Eigen::VectorXd eta = d_.x * beta + d_.offset;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) w(i) = Family::poisson().derivs(d_.y(i), eta(i)).w;
    if (family_.kind == FamilyKind::kGaussian) w.setOnes();
    scale_.clear();
    for (const auto& b : blocks_) {
      const auto& te = spec_.terms.at(static_cast<std::size_t>(b.term));
      if (te.kind == TermKind::kRandomIntercept) {
        scale_.push_back(1.0);
        continue;
      }
      const auto k = b.s.rows();
      const Eigen::MatrixXd xb = d_.x.middleCols(b.col_start, k);
      const double info = (xb.array().square().colwise() * w.array()).sum();
      const double tr = b.s.trace();
      scale_.push_back(tr > 0.0 && info > 0.0 ? info / tr : 1.0);
    }
  }

  Eigen::VectorXd initial_point() {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    if (estimate_theta_) {
      // Moment estimate from a Poisson fit at the starting smoothing parameters.
      const auto pr = pirls_fit(d_, Family::poisson(), blocks_, lambdas(z), spec_.options);
      double num = 0.0, den = 0.0;
      for (Eigen::Index i = 0; i < pr.eta.size(); ++i) {
        const double mu = std::exp(pr.eta(i));
        num += mu * mu;
        den += (d_.y(i) - mu) * (d_.y(i) - mu) - mu;
      }
      const double theta0 = den > 0.0 ? num / den : std::exp(10.0);
      z(z.size() - 1) = std::clamp(std::log(theta0), kLogThetaLo + 1.0, kLogThetaHi - 1.0);
    }
    return z;
  }

  std::vector<double> lambdas(const Eigen::VectorXd& z) const {
    std::vector<double> l(blocks_.size());
    for (std::size_t j = 0; j < l.size(); ++j) l[j] = scale_[j] * std::exp(z(static_cast<Eigen::Index>(j)));
    return l;
  }

  Family family_at(const Eigen::VectorXd& z) const {
    Family f = family_;
    if (estimate_theta_) f.theta = std::exp(z(z.size() - 1));
    return f;
  }

  /// V = -LAML and its gradient at z.
  LamlResult eval(const Eigen::VectorXd& z) {
    const Eigen::VectorXd* start = warm_.size() ? &warm_ : nullptr;
    LamlResult r = laml_eval(d_, family_at(z), blocks_, lambdas(z), spec_.options, estimate_theta_, start);
    warm_ = r.pirls.beta;
    r.laml = -r.laml;  // V
    return r;
  }

  const std::vector<PenaltyBlock>& blocks() const { return blocks_; }

 private:
  const Design& d_;
  const ModelSpec& spec_;
  std::vector<PenaltyBlock> blocks_;
  Family family_;
  bool estimate_theta_ = false;
  std::vector<double> scale_;
  Eigen::VectorXd warm_;
};

Eigen::VectorXd projected(const Eigen::VectorXd& g, const Eigen::VectorXd& z, const OuterProblem& prob) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (z(j) <= prob.lo(ju) && g(j) > 0.0) pg(j) = 0.0;
    if (z(j) >= prob.hi(ju) && g(j) < 0.0) pg(j) = 0.0;
  }
  return pg;
}

Eigen::VectorXd clamp_to_box(Eigen::VectorXd z, const OuterProblem& prob) {
  for (Eigen::Index j = 0; j < z.size(); ++j)
    z(j) = std::clamp(z(j), prob.lo(static_cast<std::size_t>(j)), prob.hi(static_cast<std::size_t>(j)));
  return z;
}

}  // namespace

FittedModel fit_gam(const ModelFrame& train, const ModelSpec& spec) {
  FittedModel m;
  m.spec = spec;
  m.encoding = Encoding::build(train, spec);
  const Design d = encode(m.encoding, train);
  OuterProblem prob(d, spec, penalty_blocks(m.encoding));
  const FitOptions& opt = spec.options;

  std::vector<std::string> trace;
  Eigen::VectorXd z;
  LamlResult cur;
  int outer_it = 0;
  double pg_norm = 0.0;

  if (prob.dim() == 0) {
    Family fam = prob.family_at(Eigen::VectorXd());
    cur = laml_eval(d, fam, {}, {}, opt, false);
    cur.laml = -cur.laml;
    z = Eigen::VectorXd();
  } else {
    prob.init_scales();
    z = prob.initial_point();
    cur = prob.eval(z);
    for (;; ++outer_it) {
      const Eigen::VectorXd pg = projected(cur.grad, z, prob);
      pg_norm = pg.lpNorm<Eigen::Infinity>();
      {
        std::ostringstream ss;
        ss << "outer " << outer_it << ": V=" << fmt(cur.laml) << " |pg|=" << fmt(pg_norm) << " z=[";
        for (Eigen::Index j = 0; j < z.size(); ++j) ss << (j ? "," : "") << fmt(z(j));
        ss << "]";
        trace.push_back(ss.str());
      }
      if (pg_norm < opt.outer_tol) break;
      if (outer_it >= opt.max_outer_iter) {
        std::string msg = "smoothing parameter optimization did not converge in " +
                          std::to_string(opt.max_outer_iter) + " iterations; trace:";
        for (std::size_t i = trace.size() > 10 ? trace.size() - 10 : 0; i < trace.size(); ++i)
          msg += "\n  " + trace[i];
        throw ComputationError(msg);
      }

      // Free coordinates: not held at a bound by the gradient.
      std::vector<Eigen::Index> free;
      for (Eigen::Index j = 0; j < z.size(); ++j)
        if (pg(j) != 0.0) free.push_back(j);
      const auto nf = static_cast<Eigen::Index>(free.size());

      // Finite-difference Hessian of the analytic gradient on the free set.
      Eigen::MatrixXd hess(nf, nf);
      const Eigen::VectorXd warm = cur.pirls.beta;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index j = free[static_cast<std::size_t>(a)];
        double h = 1e-4;
        if (z(j) + h > prob.hi(static_cast<std::size_t>(j))) h = -h;
        Eigen::VectorXd zh = z;
        zh(j) += h;
        const auto gh = prob.eval(zh).grad;
        for (Eigen::Index b = 0; b < nf; ++b) hess(b, a) = (gh(free[static_cast<std::size_t>(b)]) - cur.grad(free[static_cast<std::size_t>(b)])) / h;
      }
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
      Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
      const double floor = std::max(1e-6 * ev.maxCoeff(), 1e-8);
      for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) gf(a) = cur.grad(free[static_cast<std::size_t>(a)]);
      Eigen::VectorXd step_f =
          -(es.eigenvectors() * (es.eigenvectors().transpose() * gf).cwiseQuotient(ev));
      const double max_step = step_f.lpNorm<Eigen::Infinity>();
      if (max_step > 5.0) step_f *= 5.0 / max_step;
      Eigen::VectorXd step = Eigen::VectorXd::Zero(z.size());
      for (Eigen::Index a = 0; a < nf; ++a) step(free[static_cast<std::size_t>(a)]) = step_f(a);

      auto try_direction = [&](const Eigen::VectorXd& dir) {
        double alpha = 1.0;
        for (int half = 0; half < 30; ++half, alpha *= 0.5) {
          const Eigen::VectorXd zn = clamp_to_box(z + alpha * dir, prob);
          if ((zn - z).lpNorm<Eigen::Infinity>() == 0.0) return false;
          LamlResult cand = prob.eval(zn);
          const double slope = cur.grad.dot(zn - z);
          const double noise = 1e-11 * (1.0 + std::abs(cur.laml));
          const bool armijo = cand.laml <= cur.laml + 1e-4 * std::min(slope, 0.0);
          const bool flat = std::abs(cand.laml - cur.laml) <= noise &&
                            projected(cand.grad, zn, prob).lpNorm<Eigen::Infinity>() < pg_norm;
          if (std::isfinite(cand.laml) && (armijo || flat)) {
            z = zn;
            cur = std::move(cand);
            return true;
          }
        }
        return false;
      };
      if (!try_direction(step) && !try_direction(-pg)) {
        std::string msg = "smoothing parameter line search failed (projected gradient " + fmt(pg_norm) +
                          "); trace:";
        for (std::size_t i = trace.size() > 10 ? trace.size() - 10 : 0; i < trace.size(); ++i)
          msg += "\n  " + trace[i];
        throw ComputationError(msg);
      }
    }
  }

  m.family = prob.family_at(z);
  m.lambda = prob.lambdas(z);
  m.beta = cur.pirls.beta;
  m.covariance = cur.h_inv;
  m.diagnostics.outer_iterations = outer_it;
  m.diagnostics.outer_grad_norm = pg_norm;
  m.diagnostics.pirls_iterations = cur.pirls.iterations;
  m.diagnostics.pirls_grad_norm = cur.pirls.grad_norm;
  m.diagnostics.laml = -cur.laml;
  m.diagnostics.n_obs = train.size();
  m.diagnostics.trace = std::move(trace);

  const auto& blocks = prob.blocks();
  const Eigen::MatrixXd s = total_penalty(m.encoding.ncoef, blocks, m.lambda, opt.ridge);
  const Eigen::MatrixXd hs = cur.h_inv * s;
  m.edf.assign(m.encoding.terms.size(), 0.0);
  for (std::size_t t = 0; t < m.encoding.terms.size(); ++t) {
    const auto& te = m.encoding.terms[t];
    for (int c = te.col_start; c < te.col_start + te.ncols; ++c) m.edf[t] += 1.0 - hs(c, c);
  }
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (m.encoding.terms[static_cast<std::size_t>(blocks[j].term)].spec.kind == TermKind::kRandomIntercept) {
      m.sigma_u = 1.0 / std::sqrt(m.lambda[j]);
      break;
    }
  }
  m.fitted_eta = linear_predictor(d, m.beta);
  return m;
}

int FittedModel::lambda_index(int term) const {
  int idx = 0;
  for (int t = 0; t < static_cast<int>(encoding.terms.size()); ++t) {
    if (!encoding.terms[static_cast<std::size_t>(t)].penalized()) continue;
    if (t == term) return idx;
    ++idx;
  }
  return -1;
}

Eigen::VectorXd FittedModel::predict_eta(const ModelFrame& frame, EncodeReport* report) const {
  return linear_predictor(design(frame, report), beta);
}

Eigen::VectorXd FittedModel::predict_mu(const ModelFrame& frame, EncodeReport* report) const {
  Eigen::VectorXd eta = predict_eta(frame, report);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = family.mean(eta(i));
  return eta;
}

ModelFrame training_frame(const std::vector<ContractRecord>& records, const ModelSpec& spec) {
  if (spec.temporal == Temporal::kQuarterly) return quarterly_frame(records, split_quarterly(records));
  return annual_frame(records);
}

std::vector<std::pair<double, double>> random_effect_qq(const FittedModel& m) {
  for (const auto& te : m.encoding.terms) {
    if (te.spec.kind != TermKind::kRandomIntercept) continue;
    std::vector<double> u(m.beta.data() + te.col_start, m.beta.data() + te.col_start + te.ncols);
    std::sort(u.begin(), u.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      out.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / n), u[i]);
    return out;
  }
  return {};
}

}  // namespace pluvial
