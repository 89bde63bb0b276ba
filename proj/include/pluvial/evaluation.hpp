#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pluvial/gam.hpp"

namespace pluvial {

/// (1/N) sum_i (N_i - t_i mu_i)^2 / t_i with mu_i a per-year rate.
double mse_scaled(const std::vector<double>& n_claims, const std::vector<double>& exposure,
                  const std::vector<double>& rate);

/// (1/N) sum_i (1{N_i >= 1} - p_i)^2. Throws when a p_i lies outside [0, 1].
double brier(const std::vector<double>& n_claims, const std::vector<double>& p);

/// Per-contract annual predictions: per-year rate and P(at least one claim).
struct ContractPredictions {
  std::vector<double> rate;
  std::vector<double> p;
};

/// Exposure-weighted mean of subcontract rates and 1 - prod(1 - p_ij) per
/// contract. `sub_rate` and `sub_p` are indexed like `split.subs`. Throws when
/// a contract has no subcontract.
ContractPredictions recombine_annual(const QuarterSplit& split, std::size_t n_contracts,
                                     const std::vector<double>& sub_rate, const std::vector<double>& sub_p);

/// Quarter split by exposure only (claims ignored), for prediction.
QuarterSplit exposure_split(const std::vector<ContractRecord>& records);

/// Annual predictions of a model for whole contracts; quarterly models are
/// evaluated per subcontract and recombined.
ContractPredictions predict_contracts(const FittedModel& m, const std::vector<ContractRecord>& records);

struct Scores {
  double mse = 0.0;
  double brier = 0.0;
};

Scores score_contracts(const std::vector<ContractRecord>& records, const ContractPredictions& pred);

struct ScoreReport {
  std::string label;
  double mse = 0.0;
  double brier = 0.0;
  std::vector<double> fold_mse;
  std::vector<double> fold_brier;
  std::vector<std::size_t> fold_size;
  /// Empty when the fold succeeded.
  std::vector<std::string> fold_error;
  std::size_t n_contracts = 0;
  std::size_t n_claims = 0;
};

/// Fold of each contract: a seeded permutation dealt round-robin into k folds.
std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed);

/// k-fold cross-validation of each spec on the same contract partition.
/// Folds run on up to `threads` workers (0: hardware concurrency); results do
/// not depend on the thread count.
std::vector<ScoreReport> kfold_cv(const std::vector<ContractRecord>& records, const std::vector<ModelSpec>& specs,
                                  int k, std::uint64_t seed, unsigned threads = 0);

/// Runs task(i) for i in [0, n) on a pool of worker threads.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace pluvial
