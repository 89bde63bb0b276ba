#include "pluvial/attach.hpp"

#include "pluvial/errors.hpp"
#include "pluvial/frame.hpp"

namespace pluvial {

std::vector<std::string> climate_columns() {
  std::vector<std::string> out;
  for (const char* v : {kTemperature, kPrecipitation})
    for (int q = 1; q <= 4; ++q) out.push_back(seasonal_column(v, q));
  return out;
}

std::vector<ContractRecord> attach_covariates(std::vector<ContractRecord> records, const CovariateGrids& grids,
                                              const std::vector<std::string>& columns, AttachmentReport& report) {
  for (const auto& c : columns)
    if (!grids.count(c)) throw ValidationError("no grid for covariate '" + c + "'");
  std::vector<ContractRecord> kept;
  kept.reserve(records.size());
  report.input += records.size();
  for (auto& r : records) {
    const char* reason = nullptr;
    for (const auto& c : columns) {
      double v = 0.0;
      const SampleStatus s = try_sample(grids.at(c), r.x, r.y, v);
      if (s == SampleStatus::kOutOfExtent) {
        reason = "out of extent";
        ++report.out_of_extent;
        break;
      }
      if (s == SampleStatus::kNodata) {
        reason = "nodata covariate";
        ++report.nodata;
        break;
      }
      r.numeric[c] = v;
    }
    if (reason) {
      report.dropped.emplace_back(r.id, reason);
    } else {
      kept.push_back(std::move(r));
    }
  }
  report.attached += kept.size();
  return kept;
}

}  // namespace pluvial
