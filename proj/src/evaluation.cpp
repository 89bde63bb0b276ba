#include "pluvial/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "pluvial/errors.hpp"
#include "pluvial/stats.hpp"

namespace pluvial {

double mse_scaled(const std::vector<double>& n_claims, const std::vector<double>& exposure,
                  const std::vector<double>& rate) {
  if (n_claims.size() != exposure.size() || n_claims.size() != rate.size())
    throw ValidationError("mse_scaled: input lengths differ");
  if (n_claims.empty()) throw ValidationError("mse_scaled: no contracts");
  std::vector<double> terms(n_claims.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!(exposure[i] > 0.0)) throw ValidationError("mse_scaled: exposure must be positive");
    const double r = n_claims[i] - exposure[i] * rate[i];
    terms[i] = r * r / exposure[i];
  }
  return mean(terms);
}

double brier(const std::vector<double>& n_claims, const std::vector<double>& p) {
  if (n_claims.size() != p.size()) throw ValidationError("brier: input lengths differ");
  if (n_claims.empty()) throw ValidationError("brier: no contracts");
  std::vector<double> terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw ValidationError("brier: probability outside [0, 1]");
    const double e = (n_claims[i] >= 1.0 ? 1.0 : 0.0) - p[i];
    terms[i] = e * e;
  }
  return mean(terms);
}

ContractPredictions recombine_annual(const QuarterSplit& split, std::size_t n_contracts,
                                     const std::vector<double>& sub_rate, const std::vector<double>& sub_p) {
  if (sub_rate.size() != split.subs.size() || sub_p.size() != split.subs.size())
    throw ValidationError("recombine: one prediction per subcontract expected");
  std::vector<double> weighted(n_contracts, 0.0), ticks(n_contracts, 0.0), none(n_contracts, 1.0);
  std::vector<int> count(n_contracts, 0);
  for (std::size_t j = 0; j < split.subs.size(); ++j) {
    const auto& s = split.subs[j];
    if (s.contract >= n_contracts) throw ValidationError("recombine: subcontract of unknown contract");
    const double t = static_cast<double>(s.ticks);
    weighted[s.contract] += t * sub_rate[j];
    ticks[s.contract] += t;
    none[s.contract] *= 1.0 - sub_p[j];
    ++count[s.contract];
  }
  ContractPredictions out;
  out.rate.resize(n_contracts);
  out.p.resize(n_contracts);
  for (std::size_t i = 0; i < n_contracts; ++i) {
    if (count[i] == 0) throw ValidationError("recombine: contract " + std::to_string(i) + " has no subprediction");
    out.rate[i] = weighted[i] / ticks[i];
    out.p[i] = 1.0 - none[i];
  }
  return out;
}

QuarterSplit exposure_split(const std::vector<ContractRecord>& records) {
  QuarterSplit out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto ticks = quarter_ticks(records[i].start, records[i].end);
    for (int q = 0; q < 4; ++q)
      if (ticks[static_cast<std::size_t>(q)] > 0) out.subs.push_back({i, q + 1, ticks[static_cast<std::size_t>(q)], 0});
  }
  return out;
}

ContractPredictions predict_contracts(const FittedModel& m, const std::vector<ContractRecord>& records) {
  if (m.spec.temporal == Temporal::kAnnual) {
    const ModelFrame f = annual_frame(records);
    const Eigen::VectorXd mu = m.predict_mu(f);
    ContractPredictions out;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double mi = mu(static_cast<Eigen::Index>(i));
      out.rate.push_back(mi / f.exposure[i]);
      out.p.push_back(m.prob_at_least_one(mi));
    }
    return out;
  }
  const QuarterSplit split = exposure_split(records);
  const ModelFrame f = quarterly_frame(records, split);
  const Eigen::VectorXd mu = m.predict_mu(f);
  std::vector<double> rate(split.subs.size()), p(split.subs.size());
  for (std::size_t j = 0; j < split.subs.size(); ++j) {
    const double mj = mu(static_cast<Eigen::Index>(j));
    rate[j] = mj / f.exposure[j];
    p[j] = m.prob_at_least_one(mj);
  }
  return recombine_annual(split, records.size(), rate, p);
}

Scores score_contracts(const std::vector<ContractRecord>& records, const ContractPredictions& pred) {
  std::vector<double> n, t;
  for (const auto& r : records) {
    n.push_back(r.n_claims);
    t.push_back(r.exposure());
  }
  return {mse_scaled(n, t, pred.rate), brier(n, pred.p)};
}

std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cross-validation needs k >= 2 folds");
  if (n < static_cast<std::size_t>(k)) throw ValidationError("cross-validation needs at least k contracts");
  const auto perm = seeded_permutation(n, seed);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return fold;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<ScoreReport> kfold_cv(const std::vector<ContractRecord>& records, const std::vector<ModelSpec>& specs,
                                  int k, std::uint64_t seed, unsigned threads) {
  const auto fold = assign_folds(records.size(), k, seed);
  const auto uk = static_cast<std::size_t>(k);
  std::vector<std::vector<ContractRecord>> train(uk), test(uk);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < uk; ++f) {
      if (fold[i] == static_cast<int>(f))
        test[f].push_back(records[i]);
      else
        train[f].push_back(records[i]);
    }
  }
  std::vector<ScoreReport> reports(specs.size());
  std::size_t n_claims = 0;
  for (const auto& r : records) n_claims += static_cast<std::size_t>(r.n_claims);
  for (std::size_t s = 0; s < specs.size(); ++s) {
    auto& rep = reports[s];
    rep.label = specs[s].label;
    rep.fold_mse.assign(uk, std::nan(""));
    rep.fold_brier.assign(uk, std::nan(""));
    rep.fold_size.assign(uk, 0);
    rep.fold_error.assign(uk, "");
    rep.n_contracts = records.size();
    rep.n_claims = n_claims;
    for (std::size_t f = 0; f < uk; ++f) rep.fold_size[f] = test[f].size();
  }

  parallel_for(specs.size() * uk, threads, [&](std::size_t task) {
    const std::size_t s = task / uk, f = task % uk;
    try {
      const FittedModel m = fit_gam(training_frame(train[f], specs[s]), specs[s]);
      const Scores sc = score_contracts(test[f], predict_contracts(m, test[f]));
      reports[s].fold_mse[f] = sc.mse;
      reports[s].fold_brier[f] = sc.brier;
    } catch (const Error& e) {
      reports[s].fold_error[f] = e.what();
    }
  });

  for (auto& rep : reports) {
    double w = 0.0, mse = 0.0, bs = 0.0;
    for (std::size_t f = 0; f < uk; ++f) {
      if (!rep.fold_error[f].empty()) continue;
      const double n = static_cast<double>(rep.fold_size[f]);
      w += n;
      mse += n * rep.fold_mse[f];
      bs += n * rep.fold_brier[f];
    }
    rep.mse = w > 0.0 ? mse / w : std::nan("");
    rep.brier = w > 0.0 ? bs / w : std::nan("");
  }
  return reports;
}

}  // namespace pluvial
