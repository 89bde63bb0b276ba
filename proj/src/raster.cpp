#include "pluvial/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace pluvial {

Grid::Grid(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
           double origin_y, double nodata)
    : Grid(nrows, ncols, cellsize, origin_x, origin_y, nodata,
           std::vector<double>(nrows * ncols, 0.0)) {}

Grid::Grid(std::size_t nrows, std::size_t ncols, double cellsize, double origin_x,
           double origin_y, double nodata, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      cellsize_(cellsize),
      origin_x_(origin_x),
      origin_y_(origin_y),
      nodata_(nodata),
      values_(std::move(values)) {
  validate();
}

Grid Grid::like(const Grid& like, double fill) {
  return Grid(like.nrows_, like.ncols_, like.cellsize_, like.origin_x_, like.origin_y_,
              like.nodata_, std::vector<double>(like.size(), fill));
}

double Grid::center_x(std::size_t c) const {
  return origin_x_ + (static_cast<double>(c) + 0.5) * cellsize_;
}

double Grid::center_y(std::size_t r) const {
  return origin_y_ + (static_cast<double>(nrows_ - r) - 0.5) * cellsize_;
}

bool Grid::aligned_with(const Grid& other) const {
  return nrows_ == other.nrows_ && ncols_ == other.ncols_ && cellsize_ == other.cellsize_ &&
         origin_x_ == other.origin_x_ && origin_y_ == other.origin_y_;
}

void Grid::validate() const {
  if (nrows_ < 1 || ncols_ < 1) throw ValidationError("grid must have at least one row and column");
  if (!(cellsize_ > 0.0) || !std::isfinite(cellsize_))
    throw ValidationError("grid cellsize must be positive");
  if (!std::isfinite(origin_x_) || !std::isfinite(origin_y_))
    throw ValidationError("grid origin must be finite");
  if (values_.size() != nrows_ * ncols_)
    throw ValidationError("grid value count does not match nrows*ncols");
  for (double v : values_) {
    if (v != nodata_ && !std::isfinite(v)) throw ValidationError("grid holds a non-finite value");
  }
}

void RegionRect::validate() const {
  if (!(max_x > min_x) || !(max_y > min_y)) throw ValidationError("degenerate region rectangle");
}

RegionRect extent(const Grid& g) { return {g.origin_x(), g.origin_y(), g.right(), g.top()}; }

Grid crop(const Grid& g, const RegionRect& rect) {
  rect.validate();
  std::size_t r0 = g.nrows(), r1 = 0, c0 = g.ncols(), c1 = 0;
  for (std::size_t r = 0; r < g.nrows(); ++r) {
    for (std::size_t c = 0; c < g.ncols(); ++c) {
      if (!rect.contains(g.center_x(c), g.center_y(r))) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r + 1);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c + 1);
    }
  }
  if (r0 >= r1 || c0 >= c1) throw ValidationError("crop rectangle contains no cell centers");
  std::vector<double> v;
  v.reserve((r1 - r0) * (c1 - c0));
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c) v.push_back(g(r, c));
  double ox = g.origin_x() + static_cast<double>(c0) * g.cellsize();
  double oy = g.origin_y() + static_cast<double>(g.nrows() - r1) * g.cellsize();
  return Grid(r1 - r0, c1 - c0, g.cellsize(), ox, oy, g.nodata(), std::move(v));
}

void require_aligned(const Grid& a, const Grid& b, const char* what) {
  if (!a.aligned_with(b)) throw ValidationError(std::string(what) + ": grids are not aligned");
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

}  // namespace

Grid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file: " + path.string());
  const std::string file = path.string();

  static constexpr const char* kKeys[] = {"ncols", "nrows", "xllcorner",
                                          "yllcorner", "cellsize", "nodata_value"};
  double header[6];
  std::string line;
  std::size_t lineno = 0;
  for (int h = 0; h < 6; ++h) {
    if (!std::getline(in, line)) throw ParseError(file, lineno + 1, "truncated header");
    ++lineno;
    auto toks = split_ws(line);
    if (toks.size() != 2 || lower(toks[0]) != kKeys[h])
      throw ParseError(file, lineno, std::string("malformed header, expected '") + kKeys[h] + "'");
    if (!parse_double(toks[1], header[h]))
      throw ParseError(file, lineno, "non-numeric header value '" + std::string(toks[1]) + "'");
  }
  auto as_count = [&](double v, std::size_t at) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ParseError(file, at, "row/column count must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  const std::size_t ncols = as_count(header[0], 1);
  const std::size_t nrows = as_count(header[1], 2);
  if (!(header[4] > 0.0)) throw ParseError(file, 5, "cellsize must be positive");
  const double nodata = header[5];

  std::vector<double> values;
  values.reserve(nrows * ncols);
  std::size_t row = 0;
  while (row < nrows && std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != ncols)
      throw ParseError(file, lineno,
                       "row has " + std::to_string(toks.size()) + " values, expected " +
                           std::to_string(ncols));
    for (auto tok : toks) {
      double v;
      if (!parse_double(tok, v)) throw ParseError(file, lineno, "non-numeric token '" + std::string(tok) + "'");
      if (v != nodata && !std::isfinite(v)) throw ParseError(file, lineno, "non-finite value");
      values.push_back(v);
    }
    ++row;
  }
  if (row != nrows)
    throw ParseError(file, lineno + 1,
                     "expected " + std::to_string(nrows) + " rows, found " + std::to_string(row));
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_ws(line).empty()) throw ParseError(file, lineno, "trailing data after last row");
  }
  return Grid(nrows, ncols, header[4], header[2], header[3], nodata, std::move(values));
}

namespace {

void append_number(std::string& out, double v) {
  // Shortest representation that round-trips exactly.
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void write_grid(const Grid& g, const std::filesystem::path& path) {
  g.validate();
  std::string out;
  out.reserve(g.size() * 12 + 128);
  auto header = [&](const char* key, double v) {
    out += key;
    out += ' ';
    append_number(out, v);
    out += '\n';
  };
  header("ncols", static_cast<double>(g.ncols()));
  header("nrows", static_cast<double>(g.nrows()));
  header("xllcorner", g.origin_x());
  header("yllcorner", g.origin_y());
  header("cellsize", g.cellsize());
  header("NODATA_value", g.nodata());
  for (std::size_t r = 0; r < g.nrows(); ++r) {
    for (std::size_t c = 0; c < g.ncols(); ++c) {
      if (c) out += ' ';
      append_number(out, g(r, c));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open grid file for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed writing grid file: " + path.string());
}

Grid aggregate_2x2(const Grid& g) {
  if (g.nrows() % 2 != 0 || g.ncols() % 2 != 0)
    throw ValidationError("aggregate_2x2 requires even row and column counts");
  Grid out(g.nrows() / 2, g.ncols() / 2, 2.0 * g.cellsize(), g.origin_x(), g.origin_y(), g.nodata());
  for (std::size_t r = 0; r < out.nrows(); ++r) {
    for (std::size_t c = 0; c < out.ncols(); ++c) {
      const std::size_t rr = 2 * r, cc = 2 * c;
      if (g.is_nodata(rr, cc) || g.is_nodata(rr, cc + 1) || g.is_nodata(rr + 1, cc) ||
          g.is_nodata(rr + 1, cc + 1)) {
        out(r, c) = g.nodata();
        continue;
      }
      out(r, c) = 0.25 * ((g(rr, cc) + g(rr, cc + 1)) + (g(rr + 1, cc) + g(rr + 1, cc + 1)));
    }
  }
  return out;
}

bool locate_cell(const Grid& g, double x, double y, std::size_t& row, std::size_t& col) {
  if (!std::isfinite(x) || !std::isfinite(y)) return false;
  const double fx = std::floor((x - g.origin_x()) / g.cellsize());
  const double fy = std::floor((y - g.origin_y()) / g.cellsize());
  if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(g.ncols()) ||
      fy >= static_cast<double>(g.nrows()))
    return false;
  col = static_cast<std::size_t>(fx);
  row = g.nrows() - 1 - static_cast<std::size_t>(fy);
  return true;
}

SampleStatus try_sample(const Grid& g, double x, double y, double& out) {
  std::size_t r, c;
  if (!locate_cell(g, x, y, r, c)) return SampleStatus::kOutOfExtent;
  if (g.is_nodata(r, c)) return SampleStatus::kNodata;
  out = g(r, c);
  return SampleStatus::kOk;
}

double sample_nearest(const Grid& g, double x, double y) {
  double v = 0.0;
  switch (try_sample(g, x, y, v)) {
    case SampleStatus::kOk:
      return v;
    case SampleStatus::kOutOfExtent: {
      std::ostringstream msg;
      msg << "point (" << x << ", " << y << ") lies outside the grid extent";
      throw OutOfExtentError(msg.str());
    }
    case SampleStatus::kNodata:
      break;
  }
  std::ostringstream msg;
  msg << "point (" << x << ", " << y << ") falls in a nodata cell";
  throw NodataCellError(msg.str());
}

}  // namespace pluvial
