#include "pluvial/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "pluvial/errors.hpp"

namespace pluvial {

double Sampler::uniform(double a, double b) {
  return boost::random::uniform_real_distribution<double>(a, b)(engine_);
}

double Sampler::normal(double mean, double sd) {
  return boost::random::normal_distribution<double>(mean, sd)(engine_);
}

int Sampler::poisson(double mu) {
  if (!(mu > 0.0)) return 0;
  return boost::random::poisson_distribution<int, double>(mu)(engine_);
}

int Sampler::negbin(double mu, double theta) {
  if (!(mu > 0.0)) return 0;
  const double lambda = boost::random::gamma_distribution<double>(theta, mu / theta)(engine_);
  return poisson(lambda);
}

std::size_t Sampler::index(std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Grid synthetic_dem(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
                   double origin_y, std::uint64_t seed) {
  Sampler s(seed);
  const double w = static_cast<double>(ncols) * cellsize;
  const double h = static_cast<double>(nrows) * cellsize;
  struct Bump {
    double x, y, r, a;
  };
  std::vector<Bump> bumps;
  const int n_bumps = 12;
  for (int i = 0; i < n_bumps; ++i)
    bumps.push_back({s.uniform(0.0, w), s.uniform(0.0, h), s.uniform(0.08, 0.25) * std::min(w, h),
                     s.uniform(-25.0, 60.0)});
  const double tilt_x = s.uniform(0.01, 0.04);
  const double tilt_y = s.uniform(0.005, 0.02);
  Grid g(nrows, ncols, cellsize, origin_x, origin_y);
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * cellsize;
      const double y = (static_cast<double>(nrows - 1 - r) + 0.5) * cellsize;
      double z = 50.0 + tilt_x * x + tilt_y * y + 4.0 * std::sin(x / w * 5.0) * std::cos(y / h * 3.0);
      for (const auto& b : bumps) {
        const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (b.r * b.r);
        z += b.a * std::exp(-d2);
      }
      g(r, c) = std::round(z * 1000.0) / 1000.0;
    }
  }
  return g;
}

ClimateNormals synthetic_normals(const Grid& geometry, std::uint64_t seed) {
  Sampler s(seed);
  ClimateNormals out;
  const double w = static_cast<double>(geometry.ncols()) * geometry.cellsize();
  const double h = static_cast<double>(geometry.nrows()) * geometry.cellsize();
  const double phase_t = s.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_p = s.uniform(0.0, 2.0 * std::numbers::pi);
  constexpr std::array<double, 4> kSeasonTemp = {-3.0, 6.0, 14.0, 6.5};
  constexpr std::array<double, 4> kSeasonPrecip = {3.2, 2.2, 3.0, 4.4};
  for (int q = 0; q < 4; ++q) {
    Grid t = Grid::like(geometry, 0.0);
    Grid p = Grid::like(geometry, 0.0);
    for (std::size_t r = 0; r < geometry.nrows(); ++r) {
      for (std::size_t c = 0; c < geometry.ncols(); ++c) {
        const double u = (static_cast<double>(c) + 0.5) * geometry.cellsize() / w;
        const double v = (static_cast<double>(geometry.nrows() - 1 - r) + 0.5) * geometry.cellsize() / h;
        const double tv = kSeasonTemp[static_cast<std::size_t>(q)] - 3.0 * v +
                          1.5 * std::sin(2.0 * std::numbers::pi * u + phase_t);
        const double pv = kSeasonPrecip[static_cast<std::size_t>(q)] *
                          (1.0 + 0.35 * std::sin(2.0 * std::numbers::pi * (u + 0.5 * v) + phase_p) + 0.2 * u);
        t(r, c) = std::round(tv * 1000.0) / 1000.0;
        p(r, c) = std::round(std::max(pv, 0.0) * 1000.0) / 1000.0;
      }
    }
    out.temp[static_cast<std::size_t>(q)] = std::move(t);
    out.precip[static_cast<std::size_t>(q)] = std::move(p);
  }
  return out;
}

std::vector<ContractRecord> synthetic_contracts(const PortfolioOptions& opt, std::uint64_t seed) {
  using namespace std::chrono;
  opt.extent.validate();
  if (opt.n_regions < 1 || opt.n_superregions < 1 || opt.n_superregions > opt.n_regions)
    throw ValidationError("synthetic portfolio needs 1 <= superregions <= regions");
  Sampler s(seed);
  static const std::array<const char*, 3> kBuilding = {"apartment", "detached", "semi"};
  static const std::array<const char*, 2> kYesNo = {"no", "yes"};
  static const std::array<const char*, 2> kRoof = {"flat", "pitched"};
  const auto span_days = (opt.last_start - opt.first_start).count();
  std::vector<ContractRecord> out;
  out.reserve(opt.n_contracts);
  const double width = opt.extent.max_x - opt.extent.min_x;
  for (std::size_t i = 0; i < opt.n_contracts; ++i) {
    ContractRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "C%06zu", i + 1);
    r.id = id;
    r.x = s.uniform(opt.extent.min_x, opt.extent.max_x);
    r.y = s.uniform(opt.extent.min_y, opt.extent.max_y);
    const int region =
        std::min(opt.n_regions - 1, static_cast<int>((r.x - opt.extent.min_x) / width * opt.n_regions));
    r.region_id = "R" + std::to_string(region + 1);
    r.superregion_id = "S" + std::to_string(region * opt.n_superregions / opt.n_regions + 1);
    r.start = opt.first_start + days{static_cast<int>(s.index(static_cast<std::size_t>(span_days) + 1))};
    if (s.uniform(0.0, 1.0) < opt.p_full_year) {
      year_month_day ymd{r.start};
      year_month_day next{ymd.year() + years{1}, ymd.month(), ymd.day()};
      r.end = next.ok() ? sys_days{next} : sys_days{year_month_day{next.year(), March, day{1}}};
    } else {
      r.end = r.start + days{30 + static_cast<int>(s.index(971))};
    }
    r.value = std::round(std::exp(s.normal(std::log(2.5), 0.4)) * 1000.0) / 1000.0;
    r.categorical["building_type"] = kBuilding[s.index(kBuilding.size())];
    r.categorical["has_basement"] = kYesNo[s.index(2)];
    r.categorical["roof_type"] = kRoof[s.index(2)];
    r.categorical["rental"] = s.uniform(0.0, 1.0) < 0.2 ? "yes" : "no";
    r.numeric["size_m2"] = std::round(s.uniform(50.0, 300.0));
    r.numeric["build_year"] = std::round(s.uniform(1900.0, 2015.0));
    r.n_claims = 0;
    r.has_claim_dates = true;
    out.push_back(std::move(r));
  }
  return out;
}

void simulate_claims(std::vector<ContractRecord>& records, const LogRate& log_rate, double theta,
                     std::uint64_t seed) {
  Sampler s(seed);
  for (auto& r : records) {
    r.claim_dates.clear();
    Date cur = r.start;
    while (cur < r.end) {
      const auto [q_begin, q_end] = quarter_bounds(cur);
      const Date piece_end = std::min(q_end, r.end);
      const double exposure = ticks_to_years(exposure_ticks(cur, piece_end));
      const double mu = std::exp(log_rate(r, quarter_of(cur))) * exposure * r.value;
      const int n = theta > 0.0 ? s.negbin(mu, theta) : s.poisson(mu);
      const auto ndays = static_cast<std::size_t>((piece_end - cur).count());
      for (int k = 0; k < n; ++k) r.claim_dates.push_back(cur + std::chrono::days{static_cast<int>(s.index(ndays))});
      cur = piece_end;
    }
    std::sort(r.claim_dates.begin(), r.claim_dates.end());
    r.n_claims = static_cast<int>(r.claim_dates.size());
    r.has_claim_dates = true;
  }
}

CovariateGrids Landscape::covariates() const {
  CovariateGrids g = normals.covariates();
  g.emplace("slope", terrain.slope_deg);
  g.emplace("twi", terrain.twi);
  g.emplace("hand", terrain.hand);
  g.emplace("upslope_area", terrain.upslope_area);
  return g;
}

Landscape synthetic_landscape(const LandscapeOptions& opt, std::uint64_t seed) {
  Landscape l;
  l.dem = synthetic_dem(opt.nrows, opt.ncols, opt.cellsize, 0.0, 0.0, seed);
  for (std::size_t r = 0; r < opt.nodata_corner; ++r)
    for (std::size_t c = 0; c + r < opt.nodata_corner; ++c) l.dem(opt.nrows - 1 - r, c) = l.dem.nodata();
  l.terrain = compute_terrain(l.dem, opt.terrain, std::nullopt);
  const double w = static_cast<double>(opt.ncols) * opt.cellsize;
  const double h = static_cast<double>(opt.nrows) * opt.cellsize;
  const auto nr = static_cast<std::size_t>(std::ceil(h / opt.normals_cellsize));
  const auto nc = static_cast<std::size_t>(std::ceil(w / opt.normals_cellsize));
  l.normals = synthetic_normals(Grid(nr, nc, opt.normals_cellsize, 0.0, 0.0), seed + 1);
  return l;
}

double ClaimModel::topo_effect(const ContractRecord& r) const {
  const double hand = r.numeric.at("hand");
  const double twi = r.numeric.at("twi");
  return topo * (0.9 * std::exp(-hand / 3.0) - 0.3 + 0.15 * (twi - 7.0));
}

double ClaimModel::clim_effect(const ContractRecord& r, int quarter) const {
  double t = 0.0, p = 0.0;
  if (seasonal) {
    t = r.numeric.at(seasonal_column("temp", quarter));
    p = r.numeric.at(seasonal_column("precip", quarter));
  } else {
    for (int q = 1; q <= 4; ++q) {
      t += r.numeric.at(seasonal_column("temp", q)) / 4.0;
      p += r.numeric.at(seasonal_column("precip", q)) / 4.0;
    }
  }
  return clim * (0.6 * (p - 3.2) + 0.04 * (t - 5.0));
}

double ClaimModel::building_effect(const ContractRecord& r) const {
  double e = 0.0;
  const auto& bt = r.categorical.at("building_type");
  if (bt == "detached") e += 0.4;
  if (bt == "semi") e += 0.2;
  if (r.categorical.at("has_basement") == "yes") e += 0.35;
  if (r.categorical.at("rental") == "yes") e -= 0.1;
  e += 0.3 * std::log(r.numeric.at("size_m2") / 150.0);
  return e;
}

double ClaimModel::log_rate(const ContractRecord& r, int quarter) const {
  double e = log_base + building_effect(r) + clim_effect(r, quarter) + topo_effect(r);
  if (auto it = region_effect.find(r.region_id); it != region_effect.end()) e += it->second;
  return e;
}

std::map<std::string, double> draw_region_effects(const std::vector<ContractRecord>& records, double sd,
                                                  std::uint64_t seed) {
  std::map<std::string, double> out;
  for (const auto& r : records) out.emplace(r.region_id, 0.0);
  Sampler s(seed);
  for (auto& [_, v] : out) v = s.normal(0.0, sd);
  return out;
}

}  // namespace pluvial
