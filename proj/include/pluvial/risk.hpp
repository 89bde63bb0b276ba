#pragma once

#include <map>
#include <string>
#include <vector>

#include "pluvial/gam.hpp"
#include "pluvial/raster.hpp"

namespace pluvial {

/// Indices of the model terms in a decomposition group.
std::vector<int> group_terms(const FittedModel& m, const std::string& group);

/// Groups that own at least one term, in canonical order.
std::vector<std::string> model_groups(const FittedModel& m);

/// Unnormalized partial risk exp(sum of the listed terms' contributions);
/// intercept and offset excluded. An empty list gives 1 everywhere.
std::vector<double> partial_risk(const FittedModel& m, const ModelFrame& frame, const std::vector<int>& terms);

/// Contracts (frame rows) over which factors are normalized to mean one.
struct Reference {
  std::string label = "all";
  /// Empty selects every row.
  std::vector<std::size_t> rows;
};

/// Rows whose categorical `column` equals `value`.
Reference reference_where(const ModelFrame& frame, const std::string& column, const std::string& value);

/// Mean of r_tilde over the reference rows. Throws on an empty reference.
double reference_mean(const std::vector<double>& r_tilde, const Reference& ref);

/// r_tilde divided by its reference mean.
std::vector<double> normalize(const std::vector<double>& r_tilde, const Reference& ref);

struct RiskDecomposition {
  std::vector<std::string> groups;
  double r0 = 0.0;
  std::vector<std::string> id;
  std::vector<int> quarter;
  /// mu / (exposure * value).
  std::vector<double> risk;
  /// factors[g][row] for groups[g].
  std::vector<std::vector<double>> factors;
  /// Reference mean of the unnormalized partial risk, per group.
  std::vector<double> normalizer;
  std::string reference_label;
  std::size_t reference_size = 0;
};

/// Frame on which a model's risk is decomposed: annual contracts, or four
/// seasonal rows per contract for quarterly models.
ModelFrame decomposition_frame(const std::vector<ContractRecord>& records, const FittedModel& m);

/// r_i = r0 * prod_g r_i^g with every factor mean one over the reference.
/// Throws ComputationError when the product identity fails to 1e-10.
RiskDecomposition decompose(const FittedModel& m, const ModelFrame& frame, const Reference& ref = {});

/// Covariate grids by column name (slope, twi, hand, upslope_area,
/// temp_q1..temp_q4, precip_q1..precip_q4).
using CovariateGrids = std::map<std::string, Grid>;

struct RiskMap {
  Grid grid;
  std::string group;
  std::string reference_label;
  std::size_t reference_size = 0;
  double normalizer = 1.0;
};

/// Normalized partial risk of `group` evaluated on the cells of `target`,
/// sampling each covariate grid at the cell centers. Quarterly models average
/// the four seasonal partial risks. Cells with an undefined covariate are nodata.
RiskMap risk_map(const FittedModel& m, const CovariateGrids& grids, const Grid& target, const std::string& group,
                 const RiskDecomposition& decomposition);

/// Elementwise product of two aligned maps.
RiskMap combine_maps(const RiskMap& a, const RiskMap& b);

/// Rows of the cells of `target` whose covariates are all defined: annual
/// rows, or four seasonal rows per cell. `cells` receives the cell index of
/// each row. Only the listed numeric covariates are sampled.
ModelFrame cell_frame(const CovariateGrids& grids, const Grid& target, const std::vector<std::string>& covariates,
                      Temporal temporal, std::vector<std::size_t>& cells);

/// Numeric covariates read by the listed terms.
std::vector<std::string> term_covariates(const FittedModel& m, const std::vector<int>& terms);

}  // namespace pluvial
