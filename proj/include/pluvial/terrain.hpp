#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pluvial/raster.hpp"

namespace pluvial {

/// D8 neighbor codes in tie-breaking order: E, SE, S, SW, W, NW, N, NE.
/// Row offsets grow southward (row 0 is north).
inline constexpr std::array<int, 8> kD8RowOffset = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr std::array<int, 8> kD8ColOffset = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr std::int8_t kSink = -1;

/// Steepest-descent routing over a grid. Nodata cells are sinks with valid == 0.
struct FlowField {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  double cellsize = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<std::int8_t> direction;
  std::vector<double> drop;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return direction.size(); }
  /// Index of the downstream neighbor, or -1 for sinks.
  std::ptrdiff_t downstream(std::size_t i) const;
  /// Empty grid with this field's geometry.
  Grid make_grid(double fill, double nodata = Grid::kDefaultNodata) const;
};

/// Boolean waterway mask; cells with value != 0 are drainage.
struct DrainageMask {
  Grid mask;
  bool is_drainage(std::size_t i) const { return !mask.is_nodata(i) && mask[i] != 0.0; }
  std::size_t count() const;
};

struct TerrainIndices {
  Grid slope_deg;
  Grid twi;
  Grid hand;
  Grid upslope_area;
};

struct TerrainParams {
  double fill_epsilon = 1e-6;
  double tan_beta_min = 1e-3;
  double drainage_threshold_m2 = 1e5;
};

/// Priority-flood depression filling: every cell ends with a strictly
/// descending path (by at least `epsilon` per step) toward the grid edge or a
/// nodata cell.
Grid resolve_pits(const Grid& dem, double epsilon = 1e-6);

/// D8 directions maximizing drop / distance; ties go to the earliest code.
FlowField flow_directions(const Grid& dem);

/// Topological ordering of valid cells, upstream cells first.
/// Throws ComputationError if the flow graph has a cycle.
std::vector<std::size_t> topological_order(const FlowField& ff);

/// Upslope contributing area including the cell itself.
Grid flow_accumulation(const FlowField& ff, double cell_area);

/// Angle of descent along the flow direction, degrees. Sinks get 0.
Grid slope_deg(const FlowField& ff);

/// ln(a / tan(beta)) with tan(beta) floored at `tan_beta_min`.
Grid twi(const Grid& upslope_area, const Grid& slope_deg, double tan_beta_min = 1e-3);

DrainageMask derive_drainage(const Grid& upslope_area, double threshold_m2);

struct HandResult {
  Grid hand;
  /// Valid cells whose flow path never reaches a drainage cell (left as nodata).
  std::size_t unreachable = 0;
};

/// Height above the first drainage cell on each cell's flow path, clamped at 0.
HandResult hand(const Grid& dem, const FlowField& ff, const DrainageMask& drainage);

struct TerrainReport {
  std::size_t valid_cells = 0;
  std::size_t drainage_cells = 0;
  std::size_t hand_unreachable = 0;
};

/// Fill, route, accumulate and derive slope, TWI and HAND. Without a supplied
/// mask, drainage is derived from the accumulation threshold.
TerrainIndices compute_terrain(const Grid& dem, const TerrainParams& params,
                               const std::optional<DrainageMask>& drainage,
                               TerrainReport* report = nullptr);

}  // namespace pluvial
