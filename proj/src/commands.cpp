#include "pluvial/commands.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pluvial/attach.hpp"
#include "pluvial/climate.hpp"
#include "pluvial/errors.hpp"
#include "pluvial/evaluation.hpp"
#include "pluvial/model_io.hpp"
#include "pluvial/risk.hpp"
#include "pluvial/stats.hpp"
#include "pluvial/terrain.hpp"

namespace pluvial {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kAttached = "attached_contracts.csv";

class Outputs {
 public:
  explicit Outputs(const RunConfig& c) : dir_(c.output_dir) { fs::create_directories(dir_); }

  fs::path path(const fs::path& rel) const { return dir_ / rel; }

  void text(const fs::path& rel, const std::string& s) {
    fs::create_directories(path(rel).parent_path());
    write_text(path(rel), s);
    result.outputs.push_back(rel);
  }
  void grid(const fs::path& rel, const Grid& g) {
    fs::create_directories(path(rel).parent_path());
    write_grid(g, path(rel));
    result.outputs.push_back(rel);
  }
  void json_file(const fs::path& rel, const json& j) { text(rel, j.dump(2) + "\n"); }

  CommandResult result;

 private:
  fs::path dir_;
};

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CommandResult finish(const RunConfig& c, const std::string& name, Outputs& out) {
  json files = json::array();
  for (const auto& rel : out.result.outputs)
    files.push_back({{"path", rel.generic_string()}, {"fnv1a", fnv1a_hex(read_bytes(out.path(rel)))}});
  const json manifest = {
      {"command", name},
      {"config_hash", c.hash},
      {"seed", c.seed},
      {"versions",
       {{"pluvial", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION}}},
      {"outputs", files},
      {"warnings", out.result.warnings}};
  write_text(out.path(name + "_manifest.json"), manifest.dump(2) + "\n");
  return out.result;
}

const fs::path& require_path(const std::optional<fs::path>& p, const char* key) {
  if (!p) throw ValidationError(std::string("config: paths.") + key + " is required for this command");
  return *p;
}

std::string safe_name(std::string s) {
  for (char& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  return s;
}

fs::path model_path(const RunConfig& c, const std::string& label) {
  return c.output_dir / "models" / (safe_name(label) + ".json");
}

FittedModel load_primary(const RunConfig& c) {
  const auto p = model_path(c, c.primary().label);
  if (!fs::exists(p)) throw ValidationError("model file " + p.string() + " not found (run fit first)");
  return load_model(p);
}

std::vector<ContractRecord> load_attached(const RunConfig& c) {
  const auto p = c.output_dir / kAttached;
  if (!fs::exists(p)) throw ValidationError(p.string() + " not found (run attach first)");
  auto table = read_contracts(p);
  if (!table.issues.empty())
    throw ValidationError(p.string() + ":" + std::to_string(table.issues.front().line) + ": " +
                          table.issues.front().message);
  if (table.records.empty()) throw ValidationError("no attached contracts");
  return std::move(table.records);
}

CovariateGrids load_terrain(const RunConfig& c) {
  CovariateGrids g;
  for (const auto& n : terrain_columns()) {
    const auto p = c.output_dir / "terrain" / (n + ".asc");
    if (!fs::exists(p)) throw ValidationError(p.string() + " not found (run terrain first)");
    g.emplace(n, read_grid(p));
  }
  return g;
}

json grid_summary(const Grid& g) {
  std::vector<double> v;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.is_nodata(i)) v.push_back(g[i]);
  if (v.empty()) return {{"valid", 0}};
  return {{"valid", v.size()},
          {"min", *std::min_element(v.begin(), v.end())},
          {"max", *std::max_element(v.begin(), v.end())},
          {"mean", mean(v)}};
}

std::string csv_row(std::initializer_list<std::string> fields) {
  std::string s;
  for (const auto& f : fields) s += (s.empty() ? "" : ",") + f;
  return s + "\n";
}

std::string num(double v) { return format_number(v); }

}  // namespace

std::string percentile_name(double p) { return "p" + format_number(std::round(p * 1e6) / 1e4); }

CommandResult cmd_terrain(const RunConfig& c) {
  Grid dem = read_grid(require_path(c.dem, "dem"));
  std::optional<DrainageMask> mask;
  if (c.drainage_mask) mask = DrainageMask{read_grid(*c.drainage_mask)};
  if (c.aggregate) {
    dem = aggregate_2x2(dem);
    if (mask) mask->mask = aggregate_2x2(mask->mask);
  }
  TerrainReport report;
  const TerrainIndices t = compute_terrain(dem, c.terrain, mask, &report);
  Outputs out(c);
  out.grid("terrain/slope.asc", t.slope_deg);
  out.grid("terrain/twi.asc", t.twi);
  out.grid("terrain/hand.asc", t.hand);
  out.grid("terrain/upslope_area.asc", t.upslope_area);
  if (report.hand_unreachable > 0)
    out.result.warnings.push_back(std::to_string(report.hand_unreachable) +
                                  " cells never reach a drainage cell (HAND nodata)");
  out.json_file("terrain/terrain_summary.json",
                {{"nrows", dem.nrows()},
                 {"ncols", dem.ncols()},
                 {"cellsize", dem.cellsize()},
                 {"valid_cells", report.valid_cells},
                 {"drainage_cells", report.drainage_cells},
                 {"hand_unreachable", report.hand_unreachable},
                 {"slope", grid_summary(t.slope_deg)},
                 {"twi", grid_summary(t.twi)},
                 {"hand", grid_summary(t.hand)},
                 {"upslope_area", grid_summary(t.upslope_area)}});
  return finish(c, "terrain", out);
}

CommandResult cmd_attach(const RunConfig& c) {
  const auto& contracts_path = require_path(c.contracts, "contracts");
  const ClimateNormals normals = read_normals(require_path(c.normals, "normals"));
  CovariateGrids grids = load_terrain(c);
  for (auto& [name, g] : normals.covariates()) grids.emplace(name, g);

  auto table = read_contracts(contracts_path);
  std::vector<std::string> added = terrain_columns();
  for (const auto& col : climate_columns()) added.push_back(col);
  std::vector<std::string> columns = table.extra_columns;
  for (const auto& a : added)
    if (std::find(columns.begin(), columns.end(), a) == columns.end()) columns.push_back(a);

  AttachmentReport report;
  report.malformed = table.issues.size();
  report.input = table.issues.size();
  const auto kept = attach_covariates(std::move(table.records), grids, added, report);

  json malformed = json::array();
  for (const auto& i : table.issues) malformed.push_back({{"line", i.line}, {"message", i.message}});
  json dropped = json::array();
  for (const auto& [id, reason] : report.dropped) dropped.push_back({{"id", id}, {"reason", reason}});

  Outputs out(c);
  write_contracts(kept, columns, out.path(kAttached));
  out.result.outputs.push_back(kAttached);
  out.json_file("attach_report.json", {{"input", report.input},
                                       {"attached", report.attached},
                                       {"dropped", report.dropped_count()},
                                       {"reasons",
                                        {{"malformed row", report.malformed},
                                         {"out of extent", report.out_of_extent},
                                         {"nodata covariate", report.nodata}}},
                                       {"malformed_rows", malformed},
                                       {"dropped_contracts", dropped}});
  if (!table.issues.empty())
    out.result.warnings.push_back(std::to_string(table.issues.size()) + " malformed rows skipped");
  return finish(c, "attach", out);
}

CommandResult cmd_fit(const RunConfig& c) {
  if (c.models.empty()) throw ValidationError("config lists no models");
  const auto records = load_attached(c);
  Outputs out(c);
  for (const auto& spec : c.models) {
    FittedModel m;
    ModelFrame f;
    try {
      f = training_frame(records, spec);
      m = fit_gam(f, spec);
    } catch (const ValidationError& e) {
      throw ValidationError("model '" + spec.label + "': " + e.what());
    } catch (const ComputationError& e) {
      throw ComputationError("model '" + spec.label + "': " + e.what());
    }
    const std::string base = "models/" + safe_name(spec.label);
    fs::create_directories(out.path("models"));
    save_model(m, out.path(base + ".json"));
    out.result.outputs.push_back(base + ".json");
    std::string csv = "id,quarter,y,exposure,eta,mu\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double eta = m.fitted_eta(static_cast<Eigen::Index>(i));
      csv += csv_row({f.id[i], std::to_string(f.quarter[i]), num(f.y[i]), num(f.exposure[i]), num(eta),
                      num(m.family.mean(eta))});
    }
    out.text(base + "_fitted.csv", csv);
    const auto qq = random_effect_qq(m);
    if (!qq.empty()) {
      std::string q = "normal_quantile,estimate\n";
      for (const auto& [a, b] : qq) q += csv_row({num(a), num(b)});
      out.text(base + "_re_qq.csv", q);
    }
  }
  return finish(c, "fit", out);
}

CommandResult cmd_predict(const RunConfig& c) {
  const FittedModel m = load_primary(c);
  const auto records = load_attached(c);
  const ModelFrame f = m.spec.temporal == Temporal::kQuarterly ? quarterly_frame(records, exposure_split(records))
                                                                 : annual_frame(records);
  EncodeReport rep;
  const Eigen::VectorXd eta = m.predict_eta(f, &rep);
  Outputs out(c);
  std::string csv = "id,quarter,exposure,eta,mu\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = eta(static_cast<Eigen::Index>(i));
    csv += csv_row({f.id[i], std::to_string(f.quarter[i]), num(f.exposure[i]), num(e), num(m.family.mean(e))});
  }
  out.text("predictions.csv", csv);
  const auto pred = predict_contracts(m, records);
  std::string cp = "id,exposure,rate,p\n";
  for (std::size_t i = 0; i < records.size(); ++i)
    cp += csv_row({records[i].id, num(records[i].exposure()), num(pred.rate[i]), num(pred.p[i])});
  out.text("contract_predictions.csv", cp);
  if (rep.unknown_levels) out.result.warnings.push_back(std::to_string(rep.unknown_levels) + " rows with unseen levels");
  if (rep.unknown_regions) out.result.warnings.push_back(std::to_string(rep.unknown_regions) + " rows with unseen regions");
  return finish(c, "predict", out);
}

CommandResult cmd_decompose(const RunConfig& c) {
  const FittedModel m = load_primary(c);
  const auto records = load_attached(c);
  const ModelFrame f = decomposition_frame(records, m);
  const Reference ref = c.reference ? reference_where(f, c.reference->first, c.reference->second) : Reference{};
  const RiskDecomposition d = decompose(m, f, ref);

  Outputs out(c);
  std::string header = "id,quarter,risk,r0";
  for (const auto& g : d.groups) header += ",factor_" + g;
  std::string csv = header + "\n";
  for (std::size_t i = 0; i < d.id.size(); ++i) {
    csv += d.id[i] + "," + std::to_string(d.quarter[i]) + "," + num(d.risk[i]) + "," + num(d.r0);
    for (const auto& fac : d.factors) csv += "," + num(fac[i]);
    csv += "\n";
  }
  out.text("decomposition.csv", csv);
  json norm = json::object();
  for (std::size_t g = 0; g < d.groups.size(); ++g) norm[d.groups[g]] = d.normalizer[g];
  out.json_file("decomposition.json", {{"model", m.spec.label},
                                       {"r0", d.r0},
                                       {"groups", d.groups},
                                       {"normalizer", norm},
                                       {"reference", d.reference_label},
                                       {"reference_size", d.reference_size}});

  CovariateGrids grids = load_terrain(c);
  if (c.normals)
    for (auto& [name, g] : read_normals(*c.normals).covariates()) grids.emplace(name, g);
  const Grid& target = grids.at("slope");
  std::map<std::string, RiskMap> maps;
  for (const char* g : {"topo", "clim"}) {
    if (std::find(d.groups.begin(), d.groups.end(), g) == d.groups.end()) continue;
    maps.emplace(g, risk_map(m, grids, target, g, d));
    out.grid(fs::path("maps") / (std::string(g) + ".asc"), maps.at(g).grid);
  }
  if (maps.size() == 2) out.grid("maps/topo_clim.asc", combine_maps(maps.at("topo"), maps.at("clim")).grid);
  return finish(c, "decompose", out);
}

CommandResult cmd_evaluate(const RunConfig& c) {
  const auto records = load_attached(c);
  Outputs out(c);
  std::string csv = "model,score,value\n";
  for (const auto& spec : c.models) {
    const auto p = model_path(c, spec.label);
    if (!fs::exists(p)) throw ValidationError("model file " + p.string() + " not found (run fit first)");
    const FittedModel m = load_model(p);
    const Scores s = score_contracts(records, predict_contracts(m, records));
    csv += csv_row({spec.label, "mse", num(s.mse)});
    csv += csv_row({spec.label, "brier", num(s.brier)});
  }
  out.text("scores.csv", csv);
  return finish(c, "evaluate", out);
}

CommandResult cmd_cv(const RunConfig& c) {
  if (c.models.empty()) throw ValidationError("config lists no models");
  const auto records = load_attached(c);
  const auto reports = kfold_cv(records, c.models, c.folds, c.seed, c.threads);
  Outputs out(c);
  std::string header = "model,score,mean";
  for (int f = 1; f <= c.folds; ++f) header += ",fold_" + std::to_string(f);
  std::string csv = header + "\n";
  for (const auto& r : reports) {
    for (const char* score : {"mse", "brier"}) {
      const bool is_mse = std::string(score) == "mse";
      csv += r.label + "," + score + "," + num(is_mse ? r.mse : r.brier);
      for (std::size_t f = 0; f < r.fold_size.size(); ++f)
        csv += "," + (r.fold_error[f].empty() ? num(is_mse ? r.fold_mse[f] : r.fold_brier[f]) : std::string("NA"));
      csv += "\n";
    }
    for (std::size_t f = 0; f < r.fold_error.size(); ++f)
      if (!r.fold_error[f].empty())
        out.result.warnings.push_back(r.label + " fold " + std::to_string(f + 1) + ": " + r.fold_error[f]);
  }
  out.text("cv_scores.csv", csv);

  std::ostringstream txt;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %14s %14s %8s %8s\n", "model", "mse", "brier", "folds", "failed");
  txt << c.folds << "-fold cross-validation, " << records.size() << " contracts, seed " << c.seed << "\n" << line;
  for (const auto& r : reports) {
    const auto failed = std::count_if(r.fold_error.begin(), r.fold_error.end(), [](const auto& e) { return !e.empty(); });
    std::snprintf(line, sizeof line, "%-24s %14.8f %14.8f %8zu %8td\n", r.label.c_str(), r.mse, r.brier,
                  r.fold_size.size(), failed);
    txt << line;
  }
  out.text("cv_scores.txt", txt.str());
  return finish(c, "cv", out);
}

namespace {

struct MemberProjection {
  ClimateNormals future;
  Grid ratio;
  std::vector<RegionRatio> regions;
  std::vector<Grid> variant_ratio;
};

}  // namespace

CommandResult cmd_project(const RunConfig& c) {
  const FittedModel m = load_primary(c);
  const ClimateNormals normals = read_normals(require_path(c.normals, "normals"));
  const Ensemble ens = load_ensemble(require_path(c.ensemble, "ensemble"));
  const auto records = load_attached(c);

  std::vector<FittedModel> variants;
  std::vector<std::string> variant_names;
  if (c.variants) {
    for (const auto& spec : extrapolation_variants(m.spec, c.variant_clamp)) {
      variant_names.push_back(spec.label);
      variants.push_back(fit_gam(training_frame(records, spec), spec));
    }
  }

  std::vector<MemberProjection> proj(ens.members.size());
  parallel_for(ens.members.size(), c.threads, [&](std::size_t i) {
    auto& p = proj[i];
    p.future = delta_apply(normals, ens.members[i]);
    p.ratio = clim_risk_ratio(m, normals, p.future);
    p.regions = region_claim_ratio(m, records, normals, p.future);
    for (const auto& v : variants) p.variant_ratio.push_back(clim_risk_ratio(v, normals, p.future));
  });

  // Scenario -> member indices sorted by member id.
  std::map<std::string, std::vector<std::size_t>> scenarios;
  for (std::size_t i = 0; i < ens.members.size(); ++i) scenarios[ens.members[i].scenario()].push_back(i);
  for (auto& [_, idx] : scenarios)
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return ens.members[a].id() < ens.members[b].id(); });

  Outputs out(c);
  out.result.warnings = ens.warnings;
  const double bound = frozen_ratio_bound(m);
  std::string regions_csv = "scenario,member,region,n_contracts,present,future,ratio\n";
  std::string region_pct = "scenario,region";
  for (double q : c.percentiles) region_pct += "," + percentile_name(q);
  region_pct += "\n";
  std::string variants_csv = "scenario,variant,percentile,mean_ratio,min_ratio,max_ratio\n";
  json summary = json::object();
  for (const auto& [scenario, idx] : scenarios) {
    const fs::path dir = fs::path("projection") / safe_name(scenario);
    std::vector<Grid> ratios;
    std::map<std::string, std::vector<double>> by_region;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : idx) {
      const auto& member = ens.members[i];
      const fs::path mdir = dir / "members" / member.id();
      for (const char* v : {"temp", "precip"})
        for (int q = 1; q <= 4; ++q) {
          const auto& arr = std::string(v) == "temp" ? proj[i].future.temp : proj[i].future.precip;
          out.grid(mdir / (seasonal_column(v, q) + ".asc"), arr[static_cast<std::size_t>(q - 1)]);
        }
      out.grid(mdir / "ratio.asc", proj[i].ratio);
      ratios.push_back(proj[i].ratio);
      for (std::size_t k = 0; k < proj[i].ratio.size(); ++k)
        if (!proj[i].ratio.is_nodata(k)) {
          lo = std::min(lo, proj[i].ratio[k]);
          hi = std::max(hi, proj[i].ratio[k]);
        }
      for (const auto& r : proj[i].regions) {
        regions_csv += csv_row({scenario, member.id(), r.region, std::to_string(r.n_contracts), num(r.present),
                                num(r.future), num(r.ratio)});
        by_region[r.region].push_back(r.ratio);
      }
    }
    const auto pct = ensemble_percentiles(ratios, c.percentiles);
    for (std::size_t q = 0; q < pct.size(); ++q)
      out.grid(dir / (percentile_name(c.percentiles[q]) + ".asc"), pct[q]);
    for (auto& [region, v] : by_region) {
      std::sort(v.begin(), v.end());
      region_pct += scenario + "," + region;
      for (double q : c.percentiles) region_pct += "," + num(quantile_sorted(v, q));
      region_pct += "\n";
    }
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      std::vector<Grid> vr;
      for (std::size_t i : idx) vr.push_back(proj[i].variant_ratio[vi]);
      const auto vp = ensemble_percentiles(vr, c.percentiles);
      for (std::size_t q = 0; q < vp.size(); ++q) {
        out.grid(dir / "variants" / (variant_names[vi] + "_" + percentile_name(c.percentiles[q]) + ".asc"), vp[q]);
        std::vector<double> cells;
        for (std::size_t k = 0; k < vp[q].size(); ++k)
          if (!vp[q].is_nodata(k)) cells.push_back(vp[q][k]);
        if (cells.empty()) continue;
        variants_csv += csv_row({scenario, variant_names[vi], percentile_name(c.percentiles[q]), num(mean(cells)),
                                 num(*std::min_element(cells.begin(), cells.end())),
                                 num(*std::max_element(cells.begin(), cells.end()))});
      }
    }
    summary[scenario] = {{"members", idx.size()},
                         {"min_ratio", std::isfinite(lo) ? json(lo) : json(nullptr)},
                         {"max_ratio", std::isfinite(hi) ? json(hi) : json(nullptr)}};
  }
  out.text("projection/region_ratios.csv", regions_csv);
  out.text("projection/region_percentiles.csv", region_pct);
  if (!variants.empty()) out.text("projection/variants.csv", variants_csv);
  out.json_file("projection/projection_summary.json",
                {{"model", m.spec.label},
                 {"frozen_ratio_bound", std::isfinite(bound) ? json(bound) : json(nullptr)},
                 {"scenarios", summary}});
  return finish(c, "project", out);
}

CommandResult run_command(const std::string& name, const RunConfig& c) {
  if (name == "terrain") return cmd_terrain(c);
  if (name == "attach") return cmd_attach(c);
  if (name == "fit") return cmd_fit(c);
  if (name == "predict") return cmd_predict(c);
  if (name == "decompose") return cmd_decompose(c);
  if (name == "evaluate") return cmd_evaluate(c);
  if (name == "cv") return cmd_cv(c);
  if (name == "project") return cmd_project(c);
  throw ValidationError("unknown command '" + name + "'");
}

}  // namespace pluvial
