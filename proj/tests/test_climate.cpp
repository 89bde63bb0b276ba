#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "pluvial/climate.hpp"
#include "pluvial/errors.hpp"
#include "pluvial/gam.hpp"
#include "pluvial/stats.hpp"
#include "test_util.hpp"

namespace pluvial {
namespace {

using testing::categorical;
using testing::random_intercept;
using testing::smooth;

ModelSpec clim_spec(bool clamp = true, Temporal temporal = Temporal::kAnnual) {
  auto t = smooth("temp", "clim", 6);
  auto p = smooth("precip", "clim", 6);
  if (clamp) t.clamp = p.clamp = ClampPercentiles{0.01, 0.99};
  auto spec = testing::make_spec(FamilyKind::kNegBinomial, {categorical("building_type", "building"),
                                                            smooth("hand", "topo", 5), t, p, random_intercept()});
  spec.label = "topo_clim";
  spec.temporal = temporal;
  return spec;
}

struct Fitted {
  testing::Portfolio p;
  FittedModel m;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    ClaimModel truth;
    truth.clim = 1.5;
    auto p = testing::make_portfolio(800, 61, truth);
    const auto spec = clim_spec();
    auto m = fit_gam(training_frame(p.records, spec), spec);
    return Fitted{std::move(p), std::move(m)};
  }();
  return f;
}

// Member on a coarse grid covering the normals, with the given per-cell
// change function for each variable and quarter.
EnsembleMember make_member(const ClimateNormals& normals, double coarse_cellsize, double offset,
                           const std::function<double(std::size_t cell, int q)>& dtemp,
                           const std::function<double(std::size_t cell, int q)>& dprecip) {
  const Grid& fine = normals.geometry();
  const auto nr = static_cast<std::size_t>(std::ceil((fine.nrows() * fine.cellsize() + offset) / coarse_cellsize));
  const auto nc = static_cast<std::size_t>(std::ceil((fine.ncols() * fine.cellsize() + offset) / coarse_cellsize));
  EnsembleMember m{"G", "R", "BC", "RCP8.5", "2071-2100", {}, {}};
  Sampler s(99);
  for (int q = 0; q < 4; ++q) {
    Grid ht(nr, nc, coarse_cellsize, fine.origin_x() - offset, fine.origin_y() - offset);
    Grid hp = ht;
    for (std::size_t i = 0; i < ht.size(); ++i) {
      ht[i] = s.uniform(0.0, 15.0);
      hp[i] = s.uniform(1.0, 5.0);
    }
    Grid ft = ht, fp = hp;
    for (std::size_t i = 0; i < ht.size(); ++i) {
      ft[i] = ht[i] + dtemp(i, q);
      fp[i] = hp[i] + dprecip(i, q);
    }
    m.hist.temp[q] = ht;
    m.hist.precip[q] = hp;
    m.future.temp[q] = ft;
    m.future.precip[q] = fp;
  }
  return m;
}

TEST(Delta, ZeroDeltaIsIdentityAndRatioIsOne) {
  const auto& [p, m] = fitted();
  const auto zero = [](std::size_t, int) { return 0.0; };
  const auto member = make_member(p.land.normals, 250.0, 30.0, zero, zero);
  const auto fut = delta_apply(p.land.normals, member);
  for (int q = 0; q < 4; ++q) {
    EXPECT_EQ(fut.temp[q], p.land.normals.temp[q]);
    EXPECT_EQ(fut.precip[q], p.land.normals.precip[q]);
  }
  const auto ratio = clim_risk_ratio(m, p.land.normals, fut);
  for (std::size_t i = 0; i < ratio.size(); ++i) EXPECT_EQ(ratio[i], 1.0);
  for (const auto& rr : region_claim_ratio(m, p.records, p.land.normals, fut)) EXPECT_NEAR(rr.ratio, 1.0, 1e-14);
}

TEST(Delta, UniformShift) {
  const auto& n = fitted().p.land.normals;
  const auto member = make_member(n, 200.0, 0.0, [](std::size_t, int) { return 2.0; },
                                  [](std::size_t, int q) { return 0.25 * q; });
  const auto fut = delta_apply(n, member);
  for (int q = 0; q < 4; ++q)
    for (std::size_t i = 0; i < n.temp[q].size(); ++i) {
      EXPECT_NEAR(fut.temp[q][i], n.temp[q][i] + 2.0, 1e-12);
      EXPECT_NEAR(fut.precip[q][i], n.precip[q][i] + 0.25 * q, 1e-12);
    }
}

TEST(Delta, MatchesContainmentScanOracle) {
  const auto& n = fitted().p.land.normals;
  Sampler s(5);
  std::vector<double> dt(400), dp(400);
  for (auto& v : dt) v = s.uniform(-1.0, 4.0);
  for (auto& v : dp) v = s.uniform(-5.0, 2.0);
  const auto member = make_member(n, 130.0, 17.0, [&](std::size_t i, int q) { return dt[(i + q) % 400]; },
                                  [&](std::size_t i, int q) { return dp[(i * 3 + q) % 400]; });
  const auto fut = delta_apply(n, member);
  const Grid& fine = n.geometry();
  const Grid& coarse = member.hist.geometry();
  for (std::size_t r = 0; r < fine.nrows(); ++r)
    for (std::size_t c = 0; c < fine.ncols(); ++c) {
      const double x = fine.origin_x() + (c + 0.5) * fine.cellsize();
      const double y = fine.origin_y() + (fine.nrows() - r - 0.5) * fine.cellsize();
      std::optional<std::size_t> k;
      for (std::size_t cr = 0; cr < coarse.nrows(); ++cr)
        for (std::size_t cc = 0; cc < coarse.ncols(); ++cc) {
          const double left = coarse.origin_x() + cc * coarse.cellsize();
          const double bottom = coarse.origin_y() + (coarse.nrows() - 1 - cr) * coarse.cellsize();
          if (x >= left && x < left + coarse.cellsize() && y >= bottom && y < bottom + coarse.cellsize())
            k = coarse.index(cr, cc);
        }
      ASSERT_TRUE(k.has_value());
      const std::size_t i = fine.index(r, c);
      for (int q = 0; q < 4; ++q) {
        const double et = n.temp[q][i] + (member.future.temp[q][*k] - member.hist.temp[q][*k]);
        const double ep = std::max(0.0, n.precip[q][i] + (member.future.precip[q][*k] - member.hist.precip[q][*k]));
        ASSERT_NEAR(fut.temp[q][i], et, 1e-12);
        ASSERT_NEAR(fut.precip[q][i], ep, 1e-12);
        ASSERT_GE(fut.precip[q][i], 0.0);
      }
    }
}

TEST(Delta, UncoveredFineCellThrows) {
  const auto& n = fitted().p.land.normals;
  auto member = make_member(n, 250.0, 0.0, [](std::size_t, int) { return 0.0; }, [](std::size_t, int) { return 0.0; });
  for (int q = 0; q < 4; ++q) {
    member.hist.temp[q] = crop(member.hist.temp[q], {0, 0, 250, 250});
    member.hist.precip[q] = member.future.temp[q] = member.future.precip[q] = member.hist.temp[q];
  }
  EXPECT_THROW(delta_apply(n, member), ValidationError);
}

TEST(Percentiles, MatchSortOracleAndAreOrdered) {
  Sampler s(7);
  std::vector<Grid> members;
  for (int m = 0; m < 12; ++m) {
    Grid g(6, 5, 10.0, 0.0, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = s.uniform(0.5, 2.0);
    members.push_back(g);
  }
  members[4][7] = members[4].nodata();
  const std::vector<double> probs{0.1, 0.5, 0.9};
  const auto out = ensemble_percentiles(members, probs);
  auto reversed = members;
  std::reverse(reversed.begin(), reversed.end());
  const auto out_rev = ensemble_percentiles(reversed, probs);
  for (std::size_t i = 0; i < members[0].size(); ++i) {
    if (i == 7) {
      for (const auto& g : out) EXPECT_TRUE(g.is_nodata(i));
      continue;
    }
    std::vector<double> v;
    for (const auto& g : members) v.push_back(g[i]);
    for (std::size_t p = 0; p < probs.size(); ++p) {
      EXPECT_NEAR(out[p][i], oracle::quantile7(v, probs[p]), 1e-15);
      EXPECT_EQ(out[p][i], out_rev[p][i]);
    }
    EXPECT_LE(out[0][i], out[1][i]);
    EXPECT_LE(out[1][i], out[2][i]);
  }
  EXPECT_THROW(ensemble_percentiles({}), ValidationError);
}

TEST(Ratio, BeyondClampIsOne) {
  const auto& [p, m] = fitted();
  const auto& te = m.encoding.terms[static_cast<std::size_t>(m.encoding.find("temp"))];
  const auto& pe = m.encoding.terms[static_cast<std::size_t>(m.encoding.find("precip"))];
  ClimateNormals present = p.land.normals;
  for (int q = 0; q < 4; ++q) {
    present.temp[q] = Grid::like(present.temp[q], *te.basis->clamp_hi() + 0.5);
    present.precip[q] = Grid::like(present.precip[q], *pe.basis->clamp_hi() + 0.5);
  }
  ClimateNormals future = present;
  for (int q = 0; q < 4; ++q)
    for (std::size_t i = 0; i < future.temp[q].size(); ++i) {
      future.temp[q][i] += 3.0 + 0.01 * i;
      future.precip[q][i] += 1.0;
    }
  const auto ratio = clim_risk_ratio(m, present, future);
  for (std::size_t i = 0; i < ratio.size(); ++i) EXPECT_EQ(ratio[i], 1.0);
}

TEST(Ratio, BoundedByFrozenRangeOnRandomDeltas) {
  const auto& [p, m] = fitted();
  const double bound = frozen_ratio_bound(m);
  ASSERT_TRUE(std::isfinite(bound));
  ASSERT_GE(bound, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Sampler s(seed);
    std::vector<double> d(800);
    for (auto& v : d) v = s.uniform(-30.0, 30.0);
    const auto member = make_member(p.land.normals, 100.0, 0.0, [&](std::size_t i, int q) { return d[(i + q) % 800]; },
                                    [&](std::size_t i, int q) { return d[(i * 7 + q) % 800] / 3.0; });
    const auto ratio = clim_risk_ratio(m, p.land.normals, delta_apply(p.land.normals, member));
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      if (ratio.is_nodata(i)) continue;
      EXPECT_LE(ratio[i], bound * (1 + 1e-12));
      EXPECT_GE(ratio[i], 1.0 / bound * (1 - 1e-12));
    }
  }
}

TEST(Ratio, TermRangeMatchesDenseScan) {
  const auto& m = fitted().m;
  double log_bound = 0.0;
  for (const char* cov : {"temp", "precip"}) {
    const int t = m.encoding.find(cov);
    const auto& te = m.encoding.terms[static_cast<std::size_t>(t)];
    const auto [lo, hi] = term_range(m, t);
    ModelFrame f = testing::bare_frame(20001);
    const double a = *te.basis->clamp_lo(), b = *te.basis->clamp_hi();
    for (std::size_t i = 0; i < f.size(); ++i) f.numeric[cov].push_back(a + (b - a) * i / 20000.0);
    const Eigen::VectorXd eta = term_eta(m.encoding, t, f, m.beta);
    EXPECT_LE(lo, eta.minCoeff() + 1e-12);
    EXPECT_GE(hi, eta.maxCoeff() - 1e-12);
    EXPECT_NEAR(lo, eta.minCoeff(), 1e-6 * (hi - lo));
    EXPECT_NEAR(hi, eta.maxCoeff(), 1e-6 * (hi - lo));
    log_bound += hi - lo;
  }
  EXPECT_NEAR(frozen_ratio_bound(m), std::exp(log_bound), 1e-12 * std::exp(log_bound));
}

TEST(Ratio, IndependentOfReferenceNormalization) {
  const auto& [p, m] = fitted();
  const auto member = make_member(p.land.normals, 250.0, 0.0, [](std::size_t, int) { return 1.5; },
                                  [](std::size_t i, int) { return 0.1 * (i % 5); });
  const auto fut = delta_apply(p.land.normals, member);
  const auto ratio = clim_risk_ratio(m, p.land.normals, fut);
  const auto frame = decomposition_frame(p.records, m);
  for (const Reference& ref : {Reference{}, reference_where(frame, "building_type", "detached")}) {
    const auto d = decompose(m, frame, ref);
    const auto& target = p.land.normals.geometry();
    const auto now = risk_map(m, p.land.normals.covariates(), target, "clim", d);
    const auto later = risk_map(m, fut.covariates(), target, "clim", d);
    for (std::size_t i = 0; i < target.size(); ++i)
      EXPECT_NEAR(ratio[i], later.grid[i] / now.grid[i], 1e-12 * ratio[i]);
  }
}

TEST(Ratio, WetterFutureRaisesRisk) {
  const auto& [p, m] = fitted();
  const auto member = make_member(p.land.normals, 250.0, 0.0, [](std::size_t, int) { return 0.0; },
                                  [](std::size_t, int) { return 0.4; });
  const auto ratio = clim_risk_ratio(m, p.land.normals, delta_apply(p.land.normals, member));
  double mean = 0.0;
  for (std::size_t i = 0; i < ratio.size(); ++i) mean += ratio[i] / static_cast<double>(ratio.size());
  EXPECT_GT(mean, 1.0);
  for (const auto& rr : region_claim_ratio(m, p.records, p.land.normals, delta_apply(p.land.normals, member)))
    EXPECT_GT(rr.ratio, 1.0) << rr.region;
}

TEST(Ratio, UnclampedClimateSmoothIsRejected) {
  auto p = testing::make_portfolio(300, 62);
  const auto spec = clim_spec(false);
  const auto m = fit_gam(training_frame(p.records, spec), spec);
  EXPECT_THROW(clim_risk_ratio(m, p.land.normals, p.land.normals), ValidationError);
  EXPECT_TRUE(std::isinf(frozen_ratio_bound(m)));
}

TEST(Ratio, QuarterlyModelAveragesSeasons) {
  auto p = testing::make_portfolio(400, 63);
  const auto spec = clim_spec(true, Temporal::kQuarterly);
  const auto m = fit_gam(training_frame(p.records, spec), spec);
  const auto member = make_member(p.land.normals, 250.0, 0.0, [](std::size_t, int q) { return 1.0 + q; },
                                  [](std::size_t, int) { return 0.2; });
  const auto fut = delta_apply(p.land.normals, member);
  const auto ratio = clim_risk_ratio(m, p.land.normals, fut);
  const auto terms = group_terms(m, "clim");
  const Grid& g = p.land.normals.geometry();
  for (std::size_t i = 0; i < g.size(); i += 13) {
    auto sum = [&](const ClimateNormals& n) {
      ModelFrame f = testing::bare_frame(4);
      for (int q = 0; q < 4; ++q) {
        f.quarter[q] = q + 1;
        f.numeric["temp"].push_back(n.temp[q][i]);
        f.numeric["precip"].push_back(n.precip[q][i]);
      }
      double s = 0.0;
      for (double r : partial_risk(m, f, terms)) s += r;
      return s;
    };
    EXPECT_NEAR(ratio[i], sum(fut) / sum(p.land.normals), 1e-12 * ratio[i]);
  }
}

TEST(RegionRatio, MatchesDirectSumsOnFixedPortfolio) {
  const auto& [p, m] = fitted();
  const auto member = make_member(p.land.normals, 250.0, 0.0, [](std::size_t i, int) { return 0.5 * (i % 3); },
                                  [](std::size_t, int q) { return 0.1 * q; });
  const auto fut = delta_apply(p.land.normals, member);
  const auto rr = region_claim_ratio(m, p.records, p.land.normals, fut);
  const auto mp = m.predict_mu(annual_frame(with_climate(p.records, p.land.normals)));
  const auto mf = m.predict_mu(annual_frame(with_climate(p.records, fut)));
  std::map<std::string, std::pair<double, double>> sums;
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    sums[p.records[i].region_id].first += mp(static_cast<Eigen::Index>(i));
    sums[p.records[i].region_id].second += mf(static_cast<Eigen::Index>(i));
    ++counts[p.records[i].region_id];
  }
  ASSERT_EQ(rr.size(), sums.size());
  std::size_t total = 0;
  for (const auto& r : rr) {
    EXPECT_NEAR(r.present, sums[r.region].first, 1e-9 * r.present);
    EXPECT_NEAR(r.ratio, sums[r.region].second / sums[r.region].first, 1e-12);
    EXPECT_EQ(r.n_contracts, counts[r.region]);
    total += r.n_contracts;
  }
  EXPECT_EQ(total, p.records.size());
  // Attached normals and the present climate coincide, so the present sums
  // equal the model's own predictions.
  const auto own = m.predict_mu(annual_frame(p.records));
  EXPECT_NEAR(own.sum(), mp.sum(), 1e-9 * own.sum());
}

TEST(Variants, ShapesOfTheFourSpecs) {
  const auto base = clim_spec();
  const auto v = extrapolation_variants(base);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].label, "spline");
  EXPECT_EQ(v[1].label, "linear");
  EXPECT_EQ(v[2].label, "trunc");
  EXPECT_EQ(v[3].label, "no_st");
  auto find = [](const ModelSpec& s, const std::string& cov) -> const TermSpec* {
    for (const auto& t : s.terms)
      if (t.covariate == cov) return &t;
    return nullptr;
  };
  EXPECT_EQ(find(v[0], "temp")->kind, TermKind::kSmooth);
  EXPECT_TRUE(find(v[0], "temp")->clamp.has_value());
  EXPECT_EQ(find(v[1], "precip")->kind, TermKind::kLinear);
  EXPECT_FALSE(find(v[1], "precip")->clamp.has_value());
  EXPECT_EQ(find(v[2], "temp")->kind, TermKind::kLinear);
  EXPECT_TRUE(find(v[2], "temp")->clamp.has_value());
  EXPECT_EQ(find(v[3], "temp"), nullptr);
  EXPECT_NE(find(v[3], "precip"), nullptr);
  for (const auto& s : v) {
    EXPECT_EQ(find(s, "hand")->kind, TermKind::kSmooth);
    EXPECT_NO_THROW(s.validate());
  }
  auto no_clim = base;
  no_clim.terms.erase(no_clim.terms.begin() + 2);
  EXPECT_THROW(extrapolation_variants(no_clim), ValidationError);
}

TEST(Variants, LinearIsAffineAndTruncFreezes) {
  const auto& p = fitted().p;
  const auto v = extrapolation_variants(clim_spec());
  const auto lin = fit_gam(training_frame(p.records, v[1]), v[1]);
  const auto tr = fit_gam(training_frame(p.records, v[2]), v[2]);
  ModelFrame f = testing::bare_frame(5);
  f.numeric["temp"] = {-20.0, 0.0, 10.0, 40.0, 100.0};
  const int t = lin.encoding.find("temp");
  const Eigen::VectorXd e = term_eta(lin.encoding, t, f, lin.beta);
  const double slope = (e(1) - e(0)) / 20.0;
  for (int i = 2; i < 5; ++i) EXPECT_NEAR(e(i), e(0) + slope * (f.numeric["temp"][i] + 20.0), 1e-9);
  EXPECT_TRUE(std::isinf(term_range(lin, t).second));

  const int tt = tr.encoding.find("temp");
  const Eigen::VectorXd et = term_eta(tr.encoding, tt, f, tr.beta);
  EXPECT_EQ(et(0), et(1));
  EXPECT_EQ(et(3), et(4));
  EXPECT_TRUE(std::isfinite(frozen_ratio_bound(tr)));
}

TEST(Ensemble, LoadsManifestAndWarnsOnMemberCount) {
  const auto dir = testing::temp_dir("ensemble");
  const auto& n = fitted().p.land.normals;
  const auto member = make_member(n, 250.0, 0.0, [](std::size_t, int) { return 1.0; }, [](std::size_t, int) { return 0.0; });
  write_normals(member.hist, dir / "m" / "hist");
  write_normals(member.future, dir / "m" / "future");
  auto paths = [](const std::string& sub) {
    nlohmann::json j;
    for (const char* v : {"temp", "precip"})
      for (int q = 1; q <= 4; ++q) j[v].push_back("m/" + sub + "/" + seasonal_column(v, q) + ".asc");
    return j;
  };
  nlohmann::json entry = {{"gcm", "G/1"}, {"rcm", "R"}, {"bias_correction", "BC"}, {"rcp", "RCP8.5"},
                          {"period", "2071-2100"}, {"hist", paths("hist")}, {"future", paths("future")}};
  std::ofstream(dir / "manifest.json") << nlohmann::json{{"members", {entry}}}.dump();
  const auto e = load_ensemble(dir / "manifest.json");
  ASSERT_EQ(e.members.size(), 1u);
  EXPECT_EQ(e.members[0].scenario(), "RCP8.5_2071-2100");
  EXPECT_EQ(e.members[0].id().find('/'), std::string::npos);
  ASSERT_EQ(e.warnings.size(), 1u);
  EXPECT_NE(e.warnings[0].find("12"), std::string::npos);
  EXPECT_NEAR(e.members[0].future.temp[2][3] - e.members[0].hist.temp[2][3], 1.0, 1e-9);

  std::ofstream(dir / "dup.json") << nlohmann::json{{"members", {entry, entry}}}.dump();
  EXPECT_THROW(load_ensemble(dir / "dup.json"), ValidationError);
  entry["extra"] = 1;
  std::ofstream(dir / "extra.json") << nlohmann::json{{"members", {entry}}}.dump();
  EXPECT_THROW(load_ensemble(dir / "extra.json"), ValidationError);
  std::ofstream(dir / "broken.json") << "{\"members\": [";
  EXPECT_THROW(load_ensemble(dir / "broken.json"), ParseError);
  EXPECT_THROW(load_ensemble(dir / "absent.json"), ValidationError);
}

}  // namespace
}  // namespace pluvial
