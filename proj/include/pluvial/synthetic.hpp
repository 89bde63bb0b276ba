#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pluvial/climate.hpp"
#include "pluvial/contracts.hpp"
#include "pluvial/raster.hpp"
#include "pluvial/risk.hpp"
#include "pluvial/terrain.hpp"

namespace pluvial {

/// Seeded sampler for simulation studies and fixtures. Distributions come
/// from Boost.Random, whose algorithms are fixed across platforms.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform(double a, double b);
  double normal(double mean, double sd);
  int poisson(double mu);
  /// Gamma-Poisson mixture with mean mu and size theta.
  int negbin(double mu, double theta);
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Smooth hilly terrain with a few valleys and enclosed depressions.
Grid synthetic_dem(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
                   double origin_y, std::uint64_t seed);

/// Seasonal normals on a grid: temperature (deg C) and precipitation (mm/day)
/// varying smoothly in space, with a south-north and seasonal gradient.
ClimateNormals synthetic_normals(const Grid& geometry, std::uint64_t seed);

struct PortfolioOptions {
  std::size_t n_contracts = 500;
  RegionRect extent;
  int n_regions = 10;
  int n_superregions = 3;
  Date first_start = parse_date("2011-01-01");
  Date last_start = parse_date("2019-01-01");
  /// Probability of a full one-year contract; otherwise a random 30..1000 days.
  double p_full_year = 0.6;
};

/// Contracts with random location, dates, value and building attributes;
/// no claims yet. Regions are vertical strips of the extent.
std::vector<ContractRecord> synthetic_contracts(const PortfolioOptions& opt, std::uint64_t seed);

/// Log claim rate per insured year and unit value for a contract in a quarter.
using LogRate = std::function<double(const ContractRecord&, int quarter)>;

/// Draws claims per calendar-quarter piece of each contract from a negative
/// binomial (theta > 0) or Poisson (theta = 0) with mean
/// exp(log_rate) * piece exposure * value, with claim dates uniform in the piece.
void simulate_claims(std::vector<ContractRecord>& records, const LogRate& log_rate, double theta,
                     std::uint64_t seed);

/// DEM, its terrain indices and climate normals over one extent.
struct Landscape {
  Grid dem;
  TerrainIndices terrain;
  ClimateNormals normals;

  /// Terrain grids keyed by terrain_columns() plus the seasonal climate grids.
  CovariateGrids covariates() const;
};

struct LandscapeOptions {
  std::size_t nrows = 50;
  std::size_t ncols = 50;
  double cellsize = 20.0;
  double normals_cellsize = 50.0;
  TerrainParams terrain{1e-6, 1e-3, 2e4};
  /// Cells in the south-west corner set to nodata (a coastline).
  std::size_t nodata_corner = 0;
};

Landscape synthetic_landscape(const LandscapeOptions& opt, std::uint64_t seed);

/// Claim-generating model for simulation studies: building, terrain and
/// climate effects on the log rate plus a regional random intercept.
struct ClaimModel {
  double log_base = -3.0;
  /// Scales of the terrain and climate effects (0 removes them).
  double topo = 1.0;
  double clim = 1.0;
  /// Use each quarter's climate instead of the annual mean.
  bool seasonal = false;
  std::map<std::string, double> region_effect;

  double topo_effect(const ContractRecord& r) const;
  double clim_effect(const ContractRecord& r, int quarter) const;
  double building_effect(const ContractRecord& r) const;
  double log_rate(const ContractRecord& r, int quarter) const;
};

/// Independent N(0, sd) effects for the regions of a portfolio, drawn in
/// ascending region order.
std::map<std::string, double> draw_region_effects(const std::vector<ContractRecord>& records, double sd,
                                                  std::uint64_t seed);

}  // namespace pluvial
