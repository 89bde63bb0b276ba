// Generates the end-to-end fixture: DEM, climate normals, a toy ensemble, a
// zero-delta ensemble, a contract portfolio with simulated claims and a config.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pluvial/attach.hpp"
#include "pluvial/model_io.hpp"
#include "pluvial/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pluvial;

namespace {

Grid block_mean(const Grid& fine, double cellsize) {
  const auto nr = static_cast<std::size_t>(std::ceil(fine.nrows() * fine.cellsize() / cellsize));
  const auto nc = static_cast<std::size_t>(std::ceil(fine.ncols() * fine.cellsize() / cellsize));
  Grid g(nr, nc, cellsize, fine.origin_x(), fine.origin_y());
  std::vector<double> sum(g.size(), 0.0), n(g.size(), 0.0);
  for (std::size_t r = 0; r < fine.nrows(); ++r)
    for (std::size_t c = 0; c < fine.ncols(); ++c) {
      std::size_t cr = 0, cc = 0;
      locate_cell(g, fine.center_x(c), fine.center_y(r), cr, cc);
      sum[g.index(cr, cc)] += fine(r, c);
      n[g.index(cr, cc)] += 1.0;
    }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::round(sum[i] / n[i] * 1000.0) / 1000.0;
  return g;
}

json member_paths(const std::string& dir) {
  json j;
  for (const char* v : {"temp", "precip"}) {
    j[v] = json::array();
    for (int q = 1; q <= 4; ++q) j[v].push_back(dir + "/" + seasonal_column(v, q) + ".asc");
  }
  return j;
}

json term(const char* kind, const char* cov, const char* group, int k = 0, bool clamp = false,
          const char* transform = nullptr) {
  json t = {{"kind", kind}, {"covariate", cov}, {"group", group}};
  if (k) t["k"] = k;
  if (clamp) t["clamp"] = {0.01, 0.99};
  if (transform) t["transform"] = transform;
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the end-to-end fixture"};
  std::string out = "fixture";
  std::uint64_t seed = 20240601;
  std::size_t n_contracts = 500;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--contracts", n_contracts, "number of contracts");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path dir = out;
    fs::create_directories(dir / "normals");
    LandscapeOptions lo;
    lo.nodata_corner = 6;
    const Landscape land = synthetic_landscape(lo, seed);
    write_grid(land.dem, dir / "dem.asc");
    write_normals(land.normals, dir / "normals");

    // Two members of one scenario on a 250 m grid, plus the same members with
    // future = hist for the zero-delta run.
    const double coarse = 250.0;
    struct Delta {
      const char *gcm, *rcm, *bc;
      double temp, precip, spread;
    };
    const Delta members[] = {{"ICHEC-EC-EARTH", "SMHI-RCA4", "EQM", 2.1, 0.25, 0.3},
                             {"MPI-M-MPI-ESM-LR", "CLMcom-CCLM", "DBS", 3.2, 0.6, 0.5}};
    json manifest = {{"members", json::array()}};
    json zero = {{"members", json::array()}};
    Sampler s(seed + 7);
    for (const auto& m : members) {
      const std::string id = std::string(m.gcm) + "_" + m.rcm + "_" + m.bc;
      const std::string base = "members/" + id;
      fs::create_directories(dir / "ensemble" / base / "hist");
      fs::create_directories(dir / "ensemble" / base / "future");
      for (int q = 0; q < 4; ++q) {
        Grid ht = block_mean(land.normals.temp[q], coarse), hp = block_mean(land.normals.precip[q], coarse);
        Grid ft = ht, fp = hp;
        for (std::size_t i = 0; i < ht.size(); ++i) {
          ht[i] = std::round((ht[i] + s.normal(0.0, 0.5)) * 1000.0) / 1000.0;
          hp[i] = std::round(std::max(0.0, hp[i] + s.normal(0.0, 0.3)) * 1000.0) / 1000.0;
          ft[i] = std::round((ht[i] + m.temp + s.normal(0.0, m.spread)) * 1000.0) / 1000.0;
          fp[i] = std::round(std::max(0.0, hp[i] + m.precip + s.normal(0.0, m.spread)) * 1000.0) / 1000.0;
        }
        const auto name = [&](const char* v) { return seasonal_column(v, q + 1) + ".asc"; };
        write_grid(ht, dir / "ensemble" / base / "hist" / name("temp"));
        write_grid(hp, dir / "ensemble" / base / "hist" / name("precip"));
        write_grid(ft, dir / "ensemble" / base / "future" / name("temp"));
        write_grid(fp, dir / "ensemble" / base / "future" / name("precip"));
      }
      json entry = {{"gcm", m.gcm}, {"rcm", m.rcm}, {"bias_correction", m.bc}, {"rcp", "RCP4.5"},
                    {"period", "2071-2100"}, {"hist", member_paths(base + "/hist")},
                    {"future", member_paths(base + "/future")}};
      manifest["members"].push_back(entry);
      entry["future"] = entry["hist"];
      zero["members"].push_back(entry);
    }
    write_text(dir / "ensemble" / "manifest.json", manifest.dump(2) + "\n");
    write_text(dir / "ensemble" / "zero_delta.json", zero.dump(2) + "\n");

    PortfolioOptions po;
    po.n_contracts = n_contracts;
    po.extent = extent(land.dem);
    po.n_regions = 8;
    po.n_superregions = 2;
    auto records = synthetic_contracts(po, seed + 11);
    AttachmentReport rep;
    std::vector<std::string> columns = terrain_columns();
    for (const auto& c : climate_columns()) columns.push_back(c);
    auto attached = attach_covariates(records, land.covariates(), columns, rep);
    ClaimModel cm;
    cm.log_base = -2.6;
    cm.region_effect = draw_region_effects(records, 0.3, seed + 13);
    simulate_claims(attached, [&](const ContractRecord& r, int q) { return cm.log_rate(r, q); }, 2.0, seed + 17);
    std::map<std::string, const ContractRecord*> by_id;
    for (const auto& r : attached) by_id[r.id] = &r;
    for (auto& r : records) {
      if (auto it = by_id.find(r.id); it != by_id.end()) {
        r.n_claims = it->second->n_claims;
        r.claim_dates = it->second->claim_dates;
      }
    }
    write_contracts(records, {}, dir / "contracts.csv");
    {
      std::ofstream f(dir / "contracts.csv", std::ios::app | std::ios::binary);
      f << "C999999,100,100,R1,S1,2015-02-30,2016-01-01,2.5,detached,no,flat,no,120,1990,0,\n";
    }

    const json building = json::array({term("categorical", "building_type", "building"),
                                       term("categorical", "has_basement", "building"),
                                       term("categorical", "roof_type", "building"),
                                       term("categorical", "rental", "building"),
                                       term("linear", "size_m2", "building", 0, false, "log"),
                                       term("smooth", "value", "building", 5, false, "log"),
                                       term("random_intercept", "region_id", "region")});
    json full = building;
    full.push_back(term("smooth", "hand", "topo", 6));
    full.push_back(term("smooth", "twi", "topo", 6));
    full.push_back(term("smooth", "temp", "clim", 6, true));
    full.push_back(term("smooth", "precip", "clim", 6, true));
    const json config = {
        {"seed", 7},
        {"output_dir", "out"},
        {"paths",
         {{"dem", "dem.asc"}, {"normals", "normals"}, {"ensemble", "ensemble/manifest.json"},
          {"contracts", "contracts.csv"}}},
        {"terrain", {{"drainage_threshold_m2", 2e4}, {"tan_beta_min", 1e-3}, {"fill_epsilon", 1e-6}}},
        {"models",
         {{{"label", "baseline"}, {"family", "negbin"}, {"temporal", "annual"}, {"terms", building}},
          {{"label", "topo_clim"}, {"family", "negbin"}, {"temporal", "annual"}, {"terms", full}}}},
        {"primary_model", "topo_clim"},
        {"evaluation", {{"folds", 5}}},
        {"projection", {{"percentiles", {0.1, 0.5, 0.9}}, {"variants", true}}}};
    write_text(dir / "config.json", config.dump(2) + "\n");
    std::cout << "fixture written to " << dir.string() << " (" << attached.size() << " attachable contracts)\n";
  } catch (const std::exception& e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
