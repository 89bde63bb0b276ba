#include "pluvial/risk.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pluvial/errors.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

std::vector<int> group_terms(const FittedModel& m, const std::string& group) {
  std::vector<int> out;
  for (std::size_t t = 0; t < m.encoding.terms.size(); ++t)
    if (m.encoding.terms[t].spec.group == group) out.push_back(static_cast<int>(t));
  return out;
}

std::vector<std::string> model_groups(const FittedModel& m) {
  std::vector<std::string> out;
  for (const char* g : kGroups)
    if (!group_terms(m, g).empty()) out.emplace_back(g);
  return out;
}

std::vector<double> partial_risk(const FittedModel& m, const ModelFrame& frame, const std::vector<int>& terms) {
  Eigen::VectorXd log_r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(frame.size()));
  for (int t : terms) {
    if (t < 0 || t >= static_cast<int>(m.encoding.terms.size()))
      throw ValidationError("partial risk: term index " + std::to_string(t) + " is not in the model");
    log_r += term_eta(m.encoding, t, frame, m.beta);
  }
  std::vector<double> out(frame.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_r(static_cast<Eigen::Index>(i)));
  return out;
}

Reference reference_where(const ModelFrame& frame, const std::string& column, const std::string& value) {
  Reference ref;
  ref.label = column + "=" + value;
  const auto& col = frame.categorical_column(column);
  for (std::size_t i = 0; i < col.size(); ++i)
    if (col[i] == value) ref.rows.push_back(i);
  if (ref.rows.empty()) throw ValidationError("reference set " + ref.label + " is empty");
  return ref;
}

double reference_mean(const std::vector<double>& r_tilde, const Reference& ref) {
  if (r_tilde.empty()) throw ValidationError("empty reference set");
  if (ref.rows.empty()) return mean(r_tilde);
  std::vector<double> sel;
  sel.reserve(ref.rows.size());
  for (auto i : ref.rows) sel.push_back(r_tilde.at(i));
  return mean(sel);
}

std::vector<double> normalize(const std::vector<double>& r_tilde, const Reference& ref) {
  const double c = reference_mean(r_tilde, ref);
  std::vector<double> out(r_tilde.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r_tilde[i] / c;
  return out;
}

ModelFrame decomposition_frame(const std::vector<ContractRecord>& records, const FittedModel& m) {
  return m.spec.temporal == Temporal::kQuarterly ? seasonal_frame(records) : annual_frame(records);
}

RiskDecomposition decompose(const FittedModel& m, const ModelFrame& frame, const Reference& ref) {
  if (frame.size() == 0) throw ValidationError("decomposition needs at least one contract");
  RiskDecomposition d;
  d.groups = model_groups(m);
  d.id = frame.id;
  d.quarter = frame.quarter;
  d.reference_label = ref.label;
  d.reference_size = ref.rows.empty() ? frame.size() : ref.rows.size();
  const Eigen::VectorXd mu = m.predict_mu(frame);
  d.risk.resize(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i)
    d.risk[i] = mu(static_cast<Eigen::Index>(i)) / (frame.exposure[i] * frame.value[i]);
  for (const auto& g : d.groups) {
    const auto r_tilde = partial_risk(m, frame, group_terms(m, g));
    d.normalizer.push_back(reference_mean(r_tilde, ref));
    d.factors.push_back(normalize(r_tilde, ref));
  }
  auto baseline = [&](std::size_t i) {
    double prod = 1.0;
    for (const auto& f : d.factors) prod *= f[i];
    return d.risk[i] / prod;
  };
  d.r0 = baseline(0);
  for (std::size_t i = 1; i < frame.size(); ++i) {
    const double r0i = baseline(i);
    if (!(std::abs(r0i - d.r0) <= 1e-10 * std::abs(d.r0)))
      throw ComputationError("risk decomposition product identity violated at " + frame.id[i] + " (r0 " +
                             std::to_string(r0i) + " vs " + std::to_string(d.r0) + ")");
  }
  return d;
}

std::vector<std::string> term_covariates(const FittedModel& m, const std::vector<int>& terms) {
  std::set<std::string> out;
  for (int t : terms) {
    const auto& te = m.encoding.terms.at(static_cast<std::size_t>(t));
    if (te.spec.kind == TermKind::kCategorical || te.spec.kind == TermKind::kRandomIntercept)
      throw ValidationError("term '" + te.spec.label + "' is categorical and cannot be mapped from grids");
    out.insert(te.spec.covariate);
  }
  return {out.begin(), out.end()};
}

namespace {

// Grids backing a frame covariate: temp/precip come from the seasonal grids.
std::vector<std::string> grid_names(const std::string& covariate) {
  if (covariate == kTemperature || covariate == kPrecipitation) {
    std::vector<std::string> out;
    for (int q = 1; q <= 4; ++q) out.push_back(seasonal_column(covariate, q));
    return out;
  }
  return {covariate};
}

}  // namespace

ModelFrame cell_frame(const CovariateGrids& grids, const Grid& target, const std::vector<std::string>& covariates,
                      Temporal temporal, std::vector<std::size_t>& cells) {
  std::vector<std::string> needed;
  for (const auto& c : covariates)
    for (const auto& g : grid_names(c)) {
      if (!grids.count(g)) throw ValidationError("risk map: missing covariate grid '" + g + "'");
      needed.push_back(g);
    }
  cells.clear();
  ModelFrame f;
  std::map<std::string, double> v;
  for (std::size_t r = 0; r < target.nrows(); ++r) {
    for (std::size_t c = 0; c < target.ncols(); ++c) {
      const double x = target.center_x(c), y = target.center_y(r);
      bool ok = true;
      for (const auto& g : needed) {
        double val = 0.0;
        if (try_sample(grids.at(g), x, y, val) != SampleStatus::kOk) {
          ok = false;
          break;
        }
        v[g] = val;
      }
      if (!ok) continue;
      const int nq = temporal == Temporal::kQuarterly ? 4 : 1;
      for (int qi = 0; qi < nq; ++qi) {
        const int q = temporal == Temporal::kQuarterly ? qi + 1 : 0;
        cells.push_back(target.index(r, c));
        f.id.push_back("cell" + std::to_string(target.index(r, c)));
        f.contract.push_back(target.index(r, c));
        f.quarter.push_back(q);
        f.y.push_back(0.0);
        f.exposure.push_back(1.0);
        f.value.push_back(1.0);
        for (const auto& cov : covariates) {
          double val = 0.0;
          if (cov == kTemperature || cov == kPrecipitation) {
            if (q == 0) {
              for (int s = 1; s <= 4; ++s) val += v.at(seasonal_column(cov, s));
              val /= 4.0;
            } else {
              val = v.at(seasonal_column(cov, q));
            }
          } else {
            val = v.at(cov);
          }
          f.numeric[cov].push_back(val);
        }
      }
    }
  }
  return f;
}

RiskMap risk_map(const FittedModel& m, const CovariateGrids& grids, const Grid& target, const std::string& group,
                 const RiskDecomposition& decomposition) {
  const auto it = std::find(decomposition.groups.begin(), decomposition.groups.end(), group);
  if (it == decomposition.groups.end()) throw ValidationError("model has no terms in group '" + group + "'");
  const auto gi = static_cast<std::size_t>(it - decomposition.groups.begin());
  const auto terms = group_terms(m, group);
  std::vector<std::size_t> cells;
  const ModelFrame f = cell_frame(grids, target, term_covariates(m, terms), m.spec.temporal, cells);
  const auto r_tilde = partial_risk(m, f, terms);

  RiskMap out{Grid::like(target, target.nodata()), group, decomposition.reference_label,
              decomposition.reference_size, decomposition.normalizer[gi]};
  const std::size_t per_cell = m.spec.temporal == Temporal::kQuarterly ? 4 : 1;
  for (std::size_t row = 0; row < cells.size(); row += per_cell) {
    double s = 0.0;
    for (std::size_t q = 0; q < per_cell; ++q) s += r_tilde[row + q];
    out.grid[cells[row]] = s / static_cast<double>(per_cell) / out.normalizer;
  }
  return out;
}

RiskMap combine_maps(const RiskMap& a, const RiskMap& b) {
  require_aligned(a.grid, b.grid, "combine_maps");
  RiskMap out = a;
  out.group = a.group + "*" + b.group;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    if (a.grid.is_nodata(i) || b.grid.is_nodata(i))
      out.grid[i] = out.grid.nodata();
    else
      out.grid[i] = a.grid[i] * b.grid[i];
  }
  out.normalizer = a.normalizer * b.normalizer;
  return out;
}

}  // namespace pluvial
