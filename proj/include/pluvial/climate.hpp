#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pluvial/gam.hpp"
#include "pluvial/raster.hpp"
#include "pluvial/risk.hpp"

namespace pluvial {

/// Seasonal (Q1..Q4) means of daily temperature (deg C) and precipitation
/// (mm/day) on one grid geometry.
struct ClimateNormals {
  std::array<Grid, 4> temp;
  std::array<Grid, 4> precip;

  /// Aligned grids, precipitation >= 0.
  void validate() const;
  const Grid& geometry() const { return temp[0]; }
  /// Grids keyed temp_q1..temp_q4, precip_q1..precip_q4.
  CovariateGrids covariates() const;
};

/// Reads temp_q{1..4}.asc and precip_q{1..4}.asc from a directory.
ClimateNormals read_normals(const std::filesystem::path& dir);
void write_normals(const ClimateNormals& n, const std::filesystem::path& dir);

struct EnsembleMember {
  std::string gcm;
  std::string rcm;
  std::string bias_correction;
  std::string rcp;
  std::string period;
  ClimateNormals hist;
  ClimateNormals future;

  /// gcm_rcm_biascorrection, filesystem-safe.
  std::string id() const;
  std::string scenario() const { return rcp + "_" + period; }
};

struct Ensemble {
  std::vector<EnsembleMember> members;
  std::vector<std::string> warnings;
};

/// Reads a JSON manifest listing members with 16 grid paths each (relative to
/// the manifest's directory).
Ensemble load_ensemble(const std::filesystem::path& manifest);

/// Future normals: historical fine-grid values plus the member's coarse-cell
/// change (future - hist) of the coarse cell containing each fine-cell center.
/// Precipitation is floored at zero. Throws when a fine cell is not covered.
ClimateNormals delta_apply(const ClimateNormals& normals, const EnsembleMember& member);

/// Per-cell ratio of future to present climatological partial risk on the
/// normals' grid. Quarterly models average the four seasonal partial risks
/// before the ratio. Throws when a climate smooth has no clamps.
Grid clim_risk_ratio(const FittedModel& m, const ClimateNormals& present, const ClimateNormals& future);

/// Cellwise type-7 quantiles over members; nodata where any member is nodata.
std::vector<Grid> ensemble_percentiles(const std::vector<Grid>& members,
                                       const std::vector<double>& probs = {0.10, 0.50, 0.90});

struct RegionRatio {
  std::string region;
  std::size_t n_contracts = 0;
  double present = 0.0;
  double future = 0.0;
  double ratio = 1.0;
};

/// Sum of expected claims under future climate over the sum under present
/// climate, per region, on a fixed portfolio. Climate columns of both
/// scenarios are sampled at each contract's location; everything else is
/// held fixed. Regions in ascending id order.
std::vector<RegionRatio> region_claim_ratio(const FittedModel& m, const std::vector<ContractRecord>& records,
                                            const ClimateNormals& present, const ClimateNormals& future);

/// Copy of the records with seasonal climate columns sampled from `normals`.
std::vector<ContractRecord> with_climate(const std::vector<ContractRecord>& records, const ClimateNormals& normals);

/// The four extrapolation variants of a spec: spline (climate smooths
/// clamped), linear (climate terms linear, unbounded), trunc (linear with the
/// covariate truncated at the clamp percentiles), no_st (spline without the
/// temperature term). Throws unless both climate covariates enter as smooths.
std::vector<ModelSpec> extrapolation_variants(const ModelSpec& base, ClampPercentiles clamp = {});

/// Minimum and maximum of a smooth or linear term over its clamp range.
std::pair<double, double> term_range(const FittedModel& m, int term);

/// Upper bound on any cell's climate ratio: exp(sum over climate terms of
/// (max - min) over the clamp range). Infinite when a climate term is unbounded.
double frozen_ratio_bound(const FittedModel& m);

}  // namespace pluvial
