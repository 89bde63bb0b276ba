#pragma once

#include <string>
#include <vector>

#include "pluvial/contracts.hpp"
#include "pluvial/risk.hpp"

namespace pluvial {

/// Terrain index columns attached to contracts.
inline const std::vector<std::string>& terrain_columns() {
  static const std::vector<std::string> names{"slope", "twi", "hand", "upslope_area"};
  return names;
}

/// temp_q1..temp_q4, precip_q1..precip_q4.
std::vector<std::string> climate_columns();

struct AttachmentReport {
  std::size_t input = 0;
  std::size_t attached = 0;
  std::size_t out_of_extent = 0;
  std::size_t nodata = 0;
  std::size_t malformed = 0;
  /// Dropped contract ids with their reason, in input order.
  std::vector<std::pair<std::string, std::string>> dropped;

  std::size_t dropped_count() const { return out_of_extent + nodata + malformed; }
};

/// Samples each named grid at the contracts' locations into their numeric
/// columns. Contracts outside a grid or on a nodata cell are dropped and counted.
std::vector<ContractRecord> attach_covariates(std::vector<ContractRecord> records, const CovariateGrids& grids,
                                              const std::vector<std::string>& columns, AttachmentReport& report);

}  // namespace pluvial
