#include "pluvial/climate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "pluvial/errors.hpp"
#include "pluvial/model_io.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

namespace {

constexpr const char* kVariables[] = {"temp", "precip"};

std::array<Grid, 4>& variable(ClimateNormals& n, const std::string& v) { return v == "temp" ? n.temp : n.precip; }
const std::array<Grid, 4>& variable(const ClimateNormals& n, const std::string& v) {
  return v == "temp" ? n.temp : n.precip;
}

ClimateNormals read_member_normals(const nlohmann::json& j, const std::filesystem::path& base,
                                   const std::string& where) {
  reject_unknown_keys(j, {"temp", "precip"}, where);
  ClimateNormals n;
  for (const char* v : kVariables) {
    if (!j.contains(v) || !j.at(v).is_array() || j.at(v).size() != 4)
      throw ValidationError(where + ": '" + v + "' must list four grid paths (Q1..Q4)");
    for (std::size_t q = 0; q < 4; ++q) {
      const std::filesystem::path p = j.at(v).at(q).get<std::string>();
      variable(n, v)[q] = read_grid(p.is_absolute() ? p : base / p);
    }
  }
  n.validate();
  return n;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '-';
  return s;
}

bool is_climate_covariate(const std::string& c) { return c == kTemperature || c == kPrecipitation; }

std::vector<int> climate_terms(const FittedModel& m) {
  auto terms = group_terms(m, "clim");
  if (terms.empty()) throw ValidationError("model has no climate terms");
  for (int t : terms) {
    const auto& te = m.encoding.terms[static_cast<std::size_t>(t)];
    if (!is_climate_covariate(te.spec.covariate))
      throw ValidationError("climate term '" + te.spec.label + "' must use temp or precip, not '" +
                            te.spec.covariate + "'");
  }
  return terms;
}

// Per-cell sum over the frame rows of partial risk; quarterly rows of a cell
// are adjacent.
std::map<std::size_t, double> cell_sums(const FittedModel& m, const ClimateNormals& n, const std::vector<int>& terms) {
  std::vector<std::size_t> cells;
  const ModelFrame f = cell_frame(n.covariates(), n.geometry(), term_covariates(m, terms), m.spec.temporal, cells);
  const auto r = partial_risk(m, f, terms);
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i < cells.size(); ++i) out[cells[i]] += r[i];
  return out;
}

// Values of a smooth's knot-value parameterization.
Eigen::VectorXd knot_values(const FittedModel& m, const TermEncoding& te) {
  const Eigen::VectorXd b = m.beta.segment(te.col_start, te.ncols);
  return te.basis->constraint_basis() * (te.rotation * b);
}

}  // namespace

void ClimateNormals::validate() const {
  for (const char* v : kVariables)
    for (std::size_t q = 0; q < 4; ++q) {
      const Grid& g = variable(*this, v)[q];
      g.validate();
      require_aligned(temp[0], g, "climate normals");
    }
  for (const auto& g : precip)
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g.is_nodata(i) && g[i] < 0.0) throw ValidationError("negative precipitation in climate normals");
}

CovariateGrids ClimateNormals::covariates() const {
  CovariateGrids out;
  for (const char* v : kVariables)
    for (int q = 1; q <= 4; ++q) out.emplace(seasonal_column(v, q), variable(*this, v)[q - 1]);
  return out;
}

ClimateNormals read_normals(const std::filesystem::path& dir) {
  ClimateNormals n;
  for (const char* v : kVariables)
    for (int q = 1; q <= 4; ++q) variable(n, v)[q - 1] = read_grid(dir / (seasonal_column(v, q) + ".asc"));
  n.validate();
  return n;
}

void write_normals(const ClimateNormals& n, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const char* v : kVariables)
    for (int q = 1; q <= 4; ++q) write_grid(variable(n, v)[q - 1], dir / (seasonal_column(v, q) + ".asc"));
}

std::string EnsembleMember::id() const { return sanitize(gcm + "_" + rcm + "_" + bias_correction); }

Ensemble load_ensemble(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ValidationError("cannot open ensemble manifest: " + manifest.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest.string(), 0, e.what());
  }
  reject_unknown_keys(j, {"members"}, "ensemble manifest");
  if (!j.contains("members") || !j.at("members").is_array() || j.at("members").empty())
    throw ValidationError("ensemble manifest lists no members");
  const auto base = manifest.parent_path();
  Ensemble e;
  std::map<std::string, int> per_scenario;
  for (std::size_t i = 0; i < j.at("members").size(); ++i) {
    const auto& mj = j.at("members")[i];
    const std::string where = "ensemble member " + std::to_string(i);
    reject_unknown_keys(mj, {"gcm", "rcm", "bias_correction", "rcp", "period", "hist", "future"}, where);
    EnsembleMember m;
    try {
      m.gcm = mj.at("gcm").get<std::string>();
      m.rcm = mj.at("rcm").get<std::string>();
      m.bias_correction = mj.at("bias_correction").get<std::string>();
      m.rcp = mj.at("rcp").get<std::string>();
      m.period = mj.at("period").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(where + ": " + ex.what());
    }
    if (!mj.contains("hist") || !mj.contains("future"))
      throw ValidationError(where + ": needs 'hist' and 'future' grids");
    m.hist = read_member_normals(mj.at("hist"), base, where + " hist");
    m.future = read_member_normals(mj.at("future"), base, where + " future");
    require_aligned(m.hist.geometry(), m.future.geometry(), "ensemble member hist/future");
    for (const auto& other : e.members)
      if (other.id() == m.id() && other.scenario() == m.scenario())
        throw ValidationError(where + ": duplicate member " + m.id() + " for " + m.scenario());
    ++per_scenario[m.scenario()];
    e.members.push_back(std::move(m));
  }
  for (const auto& [scenario, count] : per_scenario)
    if (count != 12)
      e.warnings.push_back("scenario " + scenario + " has " + std::to_string(count) + " members (12 expected)");
  return e;
}

ClimateNormals delta_apply(const ClimateNormals& normals, const EnsembleMember& member) {
  normals.validate();
  const Grid& fine = normals.geometry();
  const Grid& coarse = member.hist.geometry();
  require_aligned(coarse, member.future.geometry(), "ensemble member hist/future");
  // Coarse cell of every fine cell, resolved once.
  std::vector<std::size_t> coarse_of(fine.size());
  for (std::size_t r = 0; r < fine.nrows(); ++r)
    for (std::size_t c = 0; c < fine.ncols(); ++c) {
      std::size_t cr = 0, cc = 0;
      if (!locate_cell(coarse, fine.center_x(c), fine.center_y(r), cr, cc))
        throw ValidationError("fine cell (row " + std::to_string(r) + ", col " + std::to_string(c) +
                              ") is outside the coverage of member " + member.id());
      coarse_of[fine.index(r, c)] = coarse.index(cr, cc);
    }
  ClimateNormals out = normals;
  for (const char* v : kVariables) {
    const bool precip = std::string(v) == kPrecipitation;
    for (std::size_t q = 0; q < 4; ++q) {
      const Grid& hist = variable(member.hist, v)[q];
      const Grid& fut = variable(member.future, v)[q];
      Grid& g = variable(out, v)[q];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.is_nodata(i)) continue;
        const std::size_t k = coarse_of[i];
        if (hist.is_nodata(k) || fut.is_nodata(k)) {
          g[i] = g.nodata();
          continue;
        }
        double value = g[i] + (fut[k] - hist[k]);
        if (precip) value = std::max(value, 0.0);
        g[i] = value;
      }
    }
  }
  return out;
}

Grid clim_risk_ratio(const FittedModel& m, const ClimateNormals& present, const ClimateNormals& future) {
  const auto terms = climate_terms(m);
  for (int t : terms) {
    const auto& te = m.encoding.terms[static_cast<std::size_t>(t)];
    if (te.spec.kind == TermKind::kSmooth && !(te.basis->clamp_lo() && te.basis->clamp_hi()))
      throw ValidationError("climate smooth '" + te.spec.label + "' has no clamp metadata");
  }
  require_aligned(present.geometry(), future.geometry(), "present/future normals");
  const auto p = cell_sums(m, present, terms);
  const auto f = cell_sums(m, future, terms);
  Grid out = Grid::like(present.geometry(), present.geometry().nodata());
  for (const auto& [cell, sp] : p) {
    const auto it = f.find(cell);
    if (it != f.end()) out[cell] = it->second / sp;
  }
  return out;
}

std::vector<Grid> ensemble_percentiles(const std::vector<Grid>& members, const std::vector<double>& probs) {
  if (members.empty()) throw ValidationError("ensemble percentiles need at least one member");
  for (const auto& g : members) require_aligned(members.front(), g, "ensemble members");
  std::vector<Grid> out;
  for (std::size_t p = 0; p < probs.size(); ++p) out.push_back(Grid::like(members.front(), members.front().nodata()));
  std::vector<double> v(members.size());
  for (std::size_t i = 0; i < members.front().size(); ++i) {
    bool missing = false;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (members[m].is_nodata(i)) {
        missing = true;
        break;
      }
      v[m] = members[m][i];
    }
    if (missing) continue;
    std::sort(v.begin(), v.end());
    for (std::size_t p = 0; p < probs.size(); ++p) out[p][i] = quantile_sorted(v, probs[p]);
  }
  return out;
}

std::vector<ContractRecord> with_climate(const std::vector<ContractRecord>& records, const ClimateNormals& normals) {
  std::vector<ContractRecord> out = records;
  for (auto& r : out)
    for (const char* v : kVariables)
      for (int q = 1; q <= 4; ++q) {
        try {
          r.numeric[seasonal_column(v, q)] = sample_nearest(variable(normals, v)[q - 1], r.x, r.y);
        } catch (const ValidationError& e) {
          throw ValidationError("contract " + r.id + ": " + e.what());
        }
      }
  return out;
}

std::vector<RegionRatio> region_claim_ratio(const FittedModel& m, const std::vector<ContractRecord>& records,
                                            const ClimateNormals& present, const ClimateNormals& future) {
  const auto fp = decomposition_frame(with_climate(records, present), m);
  const auto ff = decomposition_frame(with_climate(records, future), m);
  const Eigen::VectorXd mp = m.predict_mu(fp);
  const Eigen::VectorXd mf = m.predict_mu(ff);
  std::map<std::string, RegionRatio> by_region;
  std::map<std::string, std::vector<double>> sp, sf;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const auto& rec = records[fp.contract[i]];
    auto& rr = by_region[rec.region_id];
    rr.region = rec.region_id;
    sp[rec.region_id].push_back(mp(static_cast<Eigen::Index>(i)));
    sf[rec.region_id].push_back(mf(static_cast<Eigen::Index>(i)));
  }
  std::vector<RegionRatio> out;
  for (auto& [region, rr] : by_region) {
    rr.present = compensated_sum(sp[region]);
    rr.future = compensated_sum(sf[region]);
    rr.n_contracts = m.spec.temporal == Temporal::kQuarterly ? sp[region].size() / 4 : sp[region].size();
    rr.ratio = rr.future / rr.present;
    out.push_back(rr);
  }
  return out;
}

std::vector<ModelSpec> extrapolation_variants(const ModelSpec& base, ClampPercentiles clamp) {
  auto clim_smooth = [&](const std::string& cov) {
    return std::any_of(base.terms.begin(), base.terms.end(), [&](const TermSpec& t) {
      return t.group == "clim" && t.covariate == cov && t.kind == TermKind::kSmooth;
    });
  };
  if (!clim_smooth(kTemperature) || !clim_smooth(kPrecipitation))
    throw ValidationError("extrapolation variants need temp and precip climate smooths in '" + base.label + "'");
  auto variant = [&](const std::string& name, TermKind kind, bool clamped, bool drop_temp) {
    ModelSpec s = base;
    s.label = name;
    s.terms.clear();
    for (TermSpec t : base.terms) {
      if (t.group == "clim" && is_climate_covariate(t.covariate)) {
        if (drop_temp && t.covariate == kTemperature) continue;
        t.kind = kind;
        if (clamped)
          t.clamp = t.clamp.value_or(clamp);
        else
          t.clamp.reset();
      }
      s.terms.push_back(t);
    }
    return s;
  };
  return {variant("spline", TermKind::kSmooth, true, false), variant("linear", TermKind::kLinear, false, false),
          variant("trunc", TermKind::kLinear, true, false), variant("no_st", TermKind::kSmooth, true, true)};
}

std::pair<double, double> term_range(const FittedModel& m, int term) {
  const auto& te = m.encoding.terms.at(static_cast<std::size_t>(term));
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (te.spec.kind == TermKind::kLinear) {
    const double b = m.beta(te.col_start);
    if (b == 0.0) return {0.0, 0.0};
    if (!te.clamp_lo || !te.clamp_hi) return {-kInf, kInf};
    const double a = b * (*te.clamp_lo - te.center), c = b * (*te.clamp_hi - te.center);
    return {std::min(a, c), std::max(a, c)};
  }
  if (te.spec.kind != TermKind::kSmooth) throw ValidationError("term range needs a smooth or linear term");
  const SplineBasis& basis = *te.basis;
  if (!basis.clamp_lo() || !basis.clamp_hi()) return {-kInf, kInf};
  const Eigen::VectorXd kv = knot_values(m, te);
  const double lo = *basis.clamp_lo(), hi = *basis.clamp_hi();
  auto f = [&](double v) { return basis.eval_row(v).dot(kv); };
  auto df = [&](double v) { return basis.derivative_row(v).dot(kv); };
  std::vector<double> pts{lo, hi};
  for (double k : basis.knots())
    if (k > lo && k < hi) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  std::vector<double> candidates = pts;
  // The derivative is quadratic on each piece; its roots are the interior extrema.
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1], mid = 0.5 * (a + b), h = 0.5 * (b - a);
    if (!(h > 0.0)) continue;
    const double d0 = df(a + 1e-12 * h), d1 = df(mid), d2 = df(b - 1e-12 * h);
    // d(t) = c0 + c1 t + c2 t^2 with t in [-1, 1].
    const double c0 = d1, c1 = 0.5 * (d2 - d0), c2 = 0.5 * (d2 + d0) - d1;
    std::vector<double> roots;
    if (std::abs(c2) > 1e-14 * (std::abs(c1) + std::abs(c0))) {
      const double disc = c1 * c1 - 4.0 * c2 * c0;
      if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        roots = {(-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2)};
      }
    } else if (c1 != 0.0) {
      roots = {-c0 / c1};
    }
    for (double t : roots)
      if (t > -1.0 && t < 1.0) candidates.push_back(mid + t * h);
  }
  double mn = kInf, mx = -kInf;
  for (double v : candidates) {
    const double y = f(v);
    mn = std::min(mn, y);
    mx = std::max(mx, y);
  }
  return {mn, mx};
}

double frozen_ratio_bound(const FittedModel& m) {
  double spread = 0.0;
  for (int t : climate_terms(m)) {
    const auto [lo, hi] = term_range(m, t);
    spread += hi - lo;
  }
  return std::exp(spread);
}

}  // namespace pluvial
