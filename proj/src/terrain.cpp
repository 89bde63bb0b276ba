#include "pluvial/terrain.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

namespace pluvial {

namespace {

bool neighbor(std::size_t nrows, std::size_t ncols, std::size_t i, int k, std::size_t& out) {
  const auto r = static_cast<std::ptrdiff_t>(i / ncols) + kD8RowOffset[k];
  const auto c = static_cast<std::ptrdiff_t>(i % ncols) + kD8ColOffset[k];
  if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(nrows) ||
      c >= static_cast<std::ptrdiff_t>(ncols))
    return false;
  out = static_cast<std::size_t>(r) * ncols + static_cast<std::size_t>(c);
  return true;
}

double step_length(int k, double cellsize) {
  return (k % 2 == 1) ? cellsize * std::numbers::sqrt2 : cellsize;
}

}  // namespace

std::ptrdiff_t FlowField::downstream(std::size_t i) const {
  const int k = direction[i];
  if (k == kSink) return -1;
  std::size_t j;
  if (!neighbor(nrows, ncols, i, k, j)) return -1;
  return static_cast<std::ptrdiff_t>(j);
}

Grid FlowField::make_grid(double fill, double nodata) const {
  return Grid(nrows, ncols, cellsize, origin_x, origin_y, nodata,
              std::vector<double>(nrows * ncols, fill));
}

std::size_t DrainageMask::count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) n += is_drainage(i) ? 1 : 0;
  return n;
}

Grid resolve_pits(const Grid& dem, double epsilon) {
  if (!(epsilon >= 0.0)) throw ValidationError("fill epsilon must be non-negative");
  Grid out = dem;
  const std::size_t nr = dem.nrows(), nc = dem.ncols(), n = dem.size();
  std::vector<std::uint8_t> closed(n, 0);

  // (elevation, index) ordering keeps the flood deterministic on ties.
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;

  for (std::size_t i = 0; i < n; ++i) {
    if (dem.is_nodata(i)) continue;
    const std::size_t r = i / nc, c = i % nc;
    bool seed = (r == 0 || c == 0 || r + 1 == nr || c + 1 == nc);
    for (int k = 0; k < 8 && !seed; ++k) {
      std::size_t j;
      if (neighbor(nr, nc, i, k, j) && dem.is_nodata(j)) seed = true;
    }
    if (seed) {
      closed[i] = 1;
      open.emplace(out[i], i);
    }
  }

  while (!open.empty()) {
    const auto [z, i] = open.top();
    open.pop();
    for (int k = 0; k < 8; ++k) {
      std::size_t j;
      if (!neighbor(nr, nc, i, k, j) || closed[j] || dem.is_nodata(j)) continue;
      closed[j] = 1;
      if (out[j] <= z) out[j] = z + epsilon;
      open.emplace(out[j], j);
    }
  }
  return out;
}

FlowField flow_directions(const Grid& dem) {
  FlowField ff;
  ff.nrows = dem.nrows();
  ff.ncols = dem.ncols();
  ff.cellsize = dem.cellsize();
  ff.origin_x = dem.origin_x();
  ff.origin_y = dem.origin_y();
  const std::size_t n = dem.size();
  ff.direction.assign(n, kSink);
  ff.drop.assign(n, 0.0);
  ff.valid.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    if (dem.is_nodata(i)) continue;
    ff.valid[i] = 1;
    double best = 0.0;
    for (int k = 0; k < 8; ++k) {
      std::size_t j;
      if (!neighbor(ff.nrows, ff.ncols, i, k, j) || dem.is_nodata(j)) continue;
      const double drop = dem[i] - dem[j];
      if (!(drop > 0.0)) continue;
      const double gradient = drop / step_length(k, ff.cellsize);
      if (gradient > best) {
        best = gradient;
        ff.direction[i] = static_cast<std::int8_t>(k);
        ff.drop[i] = drop;
      }
    }
  }
  return ff;
}

std::vector<std::size_t> topological_order(const FlowField& ff) {
  const std::size_t n = ff.size();
  std::vector<std::uint8_t> indegree(n, 0);
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ff.valid[i]) continue;
    ++n_valid;
    const auto j = ff.downstream(i);
    if (j >= 0) ++indegree[static_cast<std::size_t>(j)];
  }
  std::vector<std::size_t> order;
  order.reserve(n_valid);
  for (std::size_t i = 0; i < n; ++i)
    if (ff.valid[i] && indegree[i] == 0) order.push_back(i);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto j = ff.downstream(order[head]);
    if (j >= 0 && --indegree[static_cast<std::size_t>(j)] == 0)
      order.push_back(static_cast<std::size_t>(j));
  }
  if (order.size() != n_valid) {
    for (std::size_t i = 0; i < n; ++i) {
      if (ff.valid[i] && indegree[i] != 0) {
        throw ComputationError("flow graph contains a cycle through cell (row " +
                               std::to_string(i / ff.ncols) + ", col " +
                               std::to_string(i % ff.ncols) + ")");
      }
    }
    throw ComputationError("flow graph contains a cycle");
  }
  return order;
}

Grid flow_accumulation(const FlowField& ff, double cell_area) {
  const auto order = topological_order(ff);
  std::vector<std::uint64_t> count(ff.size(), 0);
  for (std::size_t i : order) {
    count[i] += 1;
    const auto j = ff.downstream(i);
    if (j >= 0) count[static_cast<std::size_t>(j)] += count[i];
  }
  Grid area = ff.make_grid(Grid::kDefaultNodata);
  for (std::size_t i : order) area[i] = static_cast<double>(count[i]) * cell_area;
  return area;
}

Grid slope_deg(const FlowField& ff) {
  Grid out = ff.make_grid(Grid::kDefaultNodata);
  for (std::size_t i = 0; i < ff.size(); ++i) {
    if (!ff.valid[i]) continue;
    const int k = ff.direction[i];
    if (k == kSink) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::atan(ff.drop[i] / step_length(k, ff.cellsize)) * 180.0 / std::numbers::pi;
  }
  return out;
}

Grid twi(const Grid& upslope_area, const Grid& slope, double tan_beta_min) {
  require_aligned(upslope_area, slope, "twi");
  if (!(tan_beta_min > 0.0)) throw ValidationError("tan(beta) floor must be positive");
  Grid out = Grid::like(upslope_area, upslope_area.nodata());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (upslope_area.is_nodata(i) || slope.is_nodata(i)) continue;
    const double tan_beta = std::max(std::tan(slope[i] * std::numbers::pi / 180.0), tan_beta_min);
    out[i] = std::log(upslope_area[i] / tan_beta);
  }
  return out;
}

DrainageMask derive_drainage(const Grid& upslope_area, double threshold_m2) {
  DrainageMask m{Grid::like(upslope_area, 0.0)};
  for (std::size_t i = 0; i < m.mask.size(); ++i) {
    if (upslope_area.is_nodata(i))
      m.mask[i] = m.mask.nodata();
    else
      m.mask[i] = upslope_area[i] >= threshold_m2 ? 1.0 : 0.0;
  }
  return m;
}

HandResult hand(const Grid& dem, const FlowField& ff, const DrainageMask& drainage) {
  if (dem.nrows() != ff.nrows || dem.ncols() != ff.ncols)
    throw ValidationError("hand: DEM and flow field shapes differ");
  require_aligned(dem, drainage.mask, "hand");
  const auto order = topological_order(ff);
  constexpr std::ptrdiff_t kNone = -1;
  std::vector<std::ptrdiff_t> outlet(ff.size(), kNone);
  // Downstream cells first, so each cell inherits its receiver's drainage cell.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t i = *it;
    if (drainage.is_drainage(i)) {
      outlet[i] = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto j = ff.downstream(i);
    if (j >= 0) outlet[i] = outlet[static_cast<std::size_t>(j)];
  }
  HandResult res{Grid::like(dem, dem.nodata()), 0};
  for (std::size_t i : order) {
    if (dem.is_nodata(i)) continue;
    if (outlet[i] == kNone) {
      ++res.unreachable;
      continue;
    }
    res.hand[i] = std::max(0.0, dem[i] - dem[static_cast<std::size_t>(outlet[i])]);
  }
  return res;
}

TerrainIndices compute_terrain(const Grid& dem, const TerrainParams& params,
                               const std::optional<DrainageMask>& drainage,
                               TerrainReport* report) {
  const Grid filled = resolve_pits(dem, params.fill_epsilon);
  const FlowField ff = flow_directions(filled);
  TerrainIndices out;
  out.upslope_area = flow_accumulation(ff, dem.cell_area());
  out.slope_deg = slope_deg(ff);
  out.twi = twi(out.upslope_area, out.slope_deg, params.tan_beta_min);
  const DrainageMask mask =
      drainage ? *drainage : derive_drainage(out.upslope_area, params.drainage_threshold_m2);
  auto h = hand(dem, ff, mask);
  out.hand = std::move(h.hand);
  if (report) {
    report->valid_cells = 0;
    for (auto v : ff.valid) report->valid_cells += v;
    report->drainage_cells = mask.count();
    report->hand_unreachable = h.unreachable;
  }
  return out;
}

}  // namespace pluvial
