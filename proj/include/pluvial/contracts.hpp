#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pluvial {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Calendar quarter 1..4 of a date.
int quarter_of(Date d);

/// First day of the calendar quarter containing d, and first day of the next.
std::pair<Date, Date> quarter_bounds(Date d);

/// Exposure is measured in "quarter-uniform" years: every calendar quarter is
/// exactly 0.25 years and days within a quarter are equally weighted. Time is
/// kept in integer ticks so quarter splits conserve exposure exactly.
/// kTicksPerQuarter is divisible by every quarter length (90, 91, 92 days).
inline constexpr std::int64_t kTicksPerQuarter = 376740;
inline constexpr std::int64_t kTicksPerYear = 4 * kTicksPerQuarter;

inline double ticks_to_years(std::int64_t ticks) {
  return static_cast<double>(ticks) / static_cast<double>(kTicksPerYear);
}

/// Exposure ticks of [start, end) falling into each calendar quarter
/// (index 0..3 for Q1..Q4), summed over years.
std::array<std::int64_t, 4> quarter_ticks(Date start, Date end);

/// Exposure ticks of [start, end).
std::int64_t exposure_ticks(Date start, Date end);

/// Column names of the documented contracts CSV, in order.
inline constexpr std::array<std::string_view, 16> kContractColumns = {
    "id",           "x",         "y",        "region_id",     "superregion_id", "start_date",
    "end_date",     "value",     "building_type", "has_basement", "roof_type",   "rental",
    "size_m2",      "build_year", "n_claims", "claim_dates"};

/// Categorical covariates carried by every contract.
inline constexpr std::array<std::string_view, 4> kContractCategoricals = {
    "building_type", "has_basement", "roof_type", "rental"};

/// One insurance contract.
struct ContractRecord {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::string region_id;
  std::string superregion_id;
  Date start{};
  Date end{};
  double value = 0.0;
  std::map<std::string, std::string> categorical;
  /// size_m2, build_year, plus attached terrain and climate values.
  std::map<std::string, double> numeric;
  int n_claims = 0;
  std::vector<Date> claim_dates;
  /// False when the CSV carried a positive count without dates.
  bool has_claim_dates = true;

  std::int64_t exposure_ticks() const { return pluvial::exposure_ticks(start, end); }
  double exposure() const { return ticks_to_years(exposure_ticks()); }

  /// Throws ValidationError when a record invariant fails.
  void validate() const;
};

struct RowIssue {
  std::size_t line = 0;
  std::string message;
};

struct ContractTable {
  std::vector<ContractRecord> records;
  /// Extra numeric columns after the documented schema, in file order.
  std::vector<std::string> extra_columns;
  /// Malformed rows, skipped.
  std::vector<RowIssue> issues;
};

/// Reads the contracts CSV. Malformed rows are skipped and reported; a missing
/// or malformed header throws.
ContractTable read_contracts(const std::filesystem::path& path);

/// Writes the documented columns followed by `extra_columns` taken from each
/// record's numeric map.
void write_contracts(const std::vector<ContractRecord>& records,
                     const std::vector<std::string>& extra_columns,
                     const std::filesystem::path& path);

/// Shortest round-trip decimal text of a double.
std::string format_number(double v);

}  // namespace pluvial
