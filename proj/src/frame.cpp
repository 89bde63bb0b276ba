#include "pluvial/frame.hpp"

#include <algorithm>

#include "pluvial/errors.hpp"

namespace pluvial {

namespace {

void add_common(ModelFrame& f, const ContractRecord& r, std::size_t index, int quarter, double y,
                double exposure) {
  f.id.push_back(r.id);
  f.contract.push_back(index);
  f.quarter.push_back(quarter);
  f.y.push_back(y);
  f.exposure.push_back(exposure);
  f.value.push_back(r.value);
  f.categorical["region_id"].push_back(r.region_id);
  f.categorical["superregion_id"].push_back(r.superregion_id);
  for (const auto& [k, v] : r.categorical) f.categorical[k].push_back(v);
  for (const auto& [k, v] : r.numeric) f.numeric[k].push_back(v);
  f.numeric["value"].push_back(r.value);
}

bool has_seasonal(const ContractRecord& r, const std::string& base) {
  for (int q = 1; q <= 4; ++q)
    if (!r.numeric.count(seasonal_column(base, q))) return false;
  return true;
}

void add_climate(ModelFrame& f, const ContractRecord& r, int quarter) {
  for (const std::string base : {kTemperature, kPrecipitation}) {
    if (!has_seasonal(r, base)) continue;
    double v = 0.0;
    if (quarter == 0) {
      for (int q = 1; q <= 4; ++q) v += r.numeric.at(seasonal_column(base, q));
      v /= 4.0;
    } else {
      v = r.numeric.at(seasonal_column(base, quarter));
    }
    f.numeric[base].push_back(v);
  }
  if (quarter != 0) f.categorical[kQuarter].push_back("Q" + std::to_string(quarter));
}

void check_columns(const ModelFrame& f) {
  for (const auto& [k, v] : f.numeric)
    if (v.size() != f.size()) throw ValidationError("numeric column '" + k + "' is not present on every contract");
  for (const auto& [k, v] : f.categorical)
    if (v.size() != f.size())
      throw ValidationError("categorical column '" + k + "' is not present on every contract");
}

}  // namespace

std::string seasonal_column(const std::string& base, int quarter) {
  return base + "_q" + std::to_string(quarter);
}

QuarterSplit split_quarterly(const std::vector<ContractRecord>& records) {
  QuarterSplit out;
  out.subs.reserve(records.size() * 2);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.has_claim_dates)
      throw ValidationError("contract " + r.id + " has claims without dates; quarterly split impossible");
    std::array<int, 4> claims{0, 0, 0, 0};
    for (const Date d : r.claim_dates) {
      if (d < r.start || !(d < r.end))
        throw ValidationError("contract " + r.id + ": claim date " + format_date(d) +
                              " outside the contract period");
      ++claims[static_cast<std::size_t>(quarter_of(d) - 1)];
    }
    const auto ticks = quarter_ticks(r.start, r.end);
    for (int q = 0; q < 4; ++q) {
      const auto qi = static_cast<std::size_t>(q);
      if (ticks[qi] == 0) continue;
      out.subs.push_back({i, q + 1, ticks[qi], claims[qi]});
    }
  }
  return out;
}

const std::vector<double>& ModelFrame::numeric_column(const std::string& name) const {
  auto it = numeric.find(name);
  if (it == numeric.end()) throw ValidationError("covariate '" + name + "' is missing from the data");
  return it->second;
}

const std::vector<std::string>& ModelFrame::categorical_column(const std::string& name) const {
  auto it = categorical.find(name);
  if (it == categorical.end())
    throw ValidationError("categorical covariate '" + name + "' is missing from the data");
  return it->second;
}

ModelFrame ModelFrame::subset(const std::vector<std::size_t>& rows) const {
  ModelFrame f;
  auto pick = [&](const auto& src, auto& dst) {
    dst.reserve(rows.size());
    for (auto r : rows) dst.push_back(src[r]);
  };
  pick(id, f.id);
  pick(contract, f.contract);
  pick(quarter, f.quarter);
  pick(y, f.y);
  pick(exposure, f.exposure);
  pick(value, f.value);
  for (const auto& [k, v] : numeric) pick(v, f.numeric[k]);
  for (const auto& [k, v] : categorical) pick(v, f.categorical[k]);
  return f;
}

ModelFrame annual_frame(const std::vector<ContractRecord>& records) {
  ModelFrame f;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    add_common(f, r, i, 0, r.n_claims, r.exposure());
    add_climate(f, r, 0);
  }
  check_columns(f);
  return f;
}

ModelFrame quarterly_frame(const std::vector<ContractRecord>& records, const QuarterSplit& split) {
  ModelFrame f;
  for (const auto& s : split.subs) {
    const auto& r = records.at(s.contract);
    add_common(f, r, s.contract, s.quarter, s.n_claims, ticks_to_years(s.ticks));
    add_climate(f, r, s.quarter);
  }
  check_columns(f);
  return f;
}

ModelFrame seasonal_frame(const std::vector<ContractRecord>& records) {
  ModelFrame f;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double l = r.exposure() / 4.0;
    for (int q = 1; q <= 4; ++q) {
      add_common(f, r, i, q, 0.0, l);
      add_climate(f, r, q);
    }
  }
  check_columns(f);
  return f;
}

}  // namespace pluvial
