#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pluvial/contracts.hpp"

namespace pluvial {

/// Covariate names derived from the seasonal climate columns.
inline constexpr const char* kTemperature = "temp";
inline constexpr const char* kPrecipitation = "precip";
inline constexpr const char* kQuarter = "quarter";

/// Name of the seasonal column of `base` for quarter q (1..4), e.g. temp_q3.
std::string seasonal_column(const std::string& base, int quarter);

/// One subcontract: the part of a contract falling into one calendar quarter
/// of the year, summed over the years the contract spans.
struct SubContract {
  std::size_t contract = 0;
  int quarter = 0;
  std::int64_t ticks = 0;
  int n_claims = 0;
};

struct QuarterSplit {
  std::vector<SubContract> subs;
};

/// Splits every contract into at most four quarter-of-year subcontracts with
/// claims assigned by claim-date quarter. Throws ValidationError when a
/// contract lacks claim dates or a claim date falls outside [start, end).
QuarterSplit split_quarterly(const std::vector<ContractRecord>& records);

/// Column-oriented modeling table. Each row is a contract (annual) or a
/// contract-quarter (quarterly, seasonal).
struct ModelFrame {
  std::vector<std::string> id;
  std::vector<std::size_t> contract;
  /// 0 for annual rows, 1..4 for quarter rows.
  std::vector<int> quarter;
  std::vector<double> y;
  std::vector<double> exposure;
  std::vector<double> value;
  std::map<std::string, std::vector<double>> numeric;
  std::map<std::string, std::vector<std::string>> categorical;

  std::size_t size() const { return y.size(); }
  const std::vector<double>& numeric_column(const std::string& name) const;
  const std::vector<std::string>& categorical_column(const std::string& name) const;
  /// Rows selected by index, in the given order.
  ModelFrame subset(const std::vector<std::size_t>& rows) const;
};

/// One row per contract. temp/precip are means of the four seasonal columns
/// when those are present.
ModelFrame annual_frame(const std::vector<ContractRecord>& records);

/// One row per subcontract; temp/precip taken from the subcontract's quarter.
ModelFrame quarterly_frame(const std::vector<ContractRecord>& records, const QuarterSplit& split);

/// Four rows per contract, one per quarter, each with a quarter of the
/// contract's exposure. Used to evaluate quarterly models on whole contracts.
ModelFrame seasonal_frame(const std::vector<ContractRecord>& records);

}  // namespace pluvial
