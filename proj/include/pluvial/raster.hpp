#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "pluvial/errors.hpp"

namespace pluvial {

/// Georeferenced raster of one scalar field.
///
/// Row 0 is the northernmost row; values are row-major. The origin is the
/// lower-left corner of the lower-left cell in projected planar coordinates.
/// A cell covers x in [left, right) and y in [bottom, top).
class Grid {
 public:
  static constexpr double kDefaultNodata = -9999.0;

  Grid() = default;
  Grid(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
       double origin_y, double nodata = kDefaultNodata);
  Grid(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
       double origin_y, double nodata, std::vector<double> values);

  /// Same geometry as `like`, every cell set to `fill`.
  static Grid like(const Grid& like, double fill);

  std::size_t nrows() const { return nrows_; }
  std::size_t ncols() const { return ncols_; }
  std::size_t size() const { return values_.size(); }
  double cellsize() const { return cellsize_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  double nodata() const { return nodata_; }
  double cell_area() const { return cellsize_ * cellsize_; }

  double top() const { return origin_y_ + static_cast<double>(nrows_) * cellsize_; }
  double right() const { return origin_x_ + static_cast<double>(ncols_) * cellsize_; }

  std::size_t index(std::size_t r, std::size_t c) const { return r * ncols_ + c; }
  double operator()(std::size_t r, std::size_t c) const { return values_[index(r, c)]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[index(r, c)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool is_nodata(std::size_t i) const { return values_[i] == nodata_; }
  bool is_nodata(std::size_t r, std::size_t c) const { return is_nodata(index(r, c)); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Cell-center coordinates.
  double center_x(std::size_t c) const;
  double center_y(std::size_t r) const;

  /// Identical cellsize, origin and shape.
  bool aligned_with(const Grid& other) const;

  /// Throws ValidationError when the structural invariants do not hold.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  double cellsize_ = 0.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double nodata_ = kDefaultNodata;
  std::vector<double> values_;
};

struct RegionRect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  void validate() const;
  bool contains(double x, double y) const {
    return x >= min_x && x < max_x && y >= min_y && y < max_y;
  }
};

/// Extent of a grid as a rectangle.
RegionRect extent(const Grid& g);

/// Sub-grid covering the cells whose centers lie in `rect`.
Grid crop(const Grid& g, const RegionRect& rect);

void require_aligned(const Grid& a, const Grid& b, const char* what);

/// Reads an ESRI-style ASCII grid. Parse errors carry the offending line.
Grid read_grid(const std::filesystem::path& path);

/// Writes an ESRI-style ASCII grid with round-trip (17 significant digit) precision.
void write_grid(const Grid& g, const std::filesystem::path& path);

/// Halves the resolution by averaging 2x2 blocks. A block with any nodata
/// child becomes nodata.
Grid aggregate_2x2(const Grid& g);

enum class SampleStatus { kOk, kOutOfExtent, kNodata };

/// Locates the cell containing (x, y). Returns false when outside the extent.
bool locate_cell(const Grid& g, double x, double y, std::size_t& row, std::size_t& col);

/// Non-throwing lookup used by bulk attachment.
SampleStatus try_sample(const Grid& g, double x, double y, double& out);

class OutOfExtentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NodataCellError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Value of the cell containing (x, y).
/// Throws OutOfExtentError or NodataCellError.
double sample_nearest(const Grid& g, double x, double y);

}  // namespace pluvial
