// Copyright 2026 The betajudge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "betajudge/fusion.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "betajudge/error.hpp"
#include "oracles.hpp"

namespace betajudge {
namespace {

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("i" + std::to_string(100 + i));
  return ids;
}

JudgeScores judge(std::string name, const std::vector<std::string>& ids,
                  const std::vector<double>& scores) {
  JudgeScores j{std::move(name), {}};
  for (std::size_t i = 0; i < ids.size(); ++i) j.scores[ids[i]] = scores[i];
  return j;
}

std::map<std::string, double> as_map(const std::vector<std::string>& ids,
                                     const std::vector<double>& v) {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < ids.size(); ++i) m[ids[i]] = v[i];
  return m;
}

TEST(AverageJudges, Examples) {
  const auto ids = make_ids(2);
  const std::vector<JudgeScores> two{judge("a", ids, {0.2, 0.9}), judge("b", ids, {0.4, 0.1})};
  const auto avg = average_judges(two, ids);
  EXPECT_NEAR(avg.values.at(ids[0]), 0.3, 1e-15);
  const std::vector<JudgeScores> one{judge("a", ids, {0.2, 0.9})};
  EXPECT_EQ(average_judges(one, ids).values.at(ids[1]), 0.9);

  std::vector<JudgeScores> three{judge("a", ids, {0.2, 0.9}), judge("b", ids, {0.4, 0.1}),
                                 judge("c", ids, {0.6, 0.5})};
  three[2].scores.erase(ids[1]);
  EXPECT_NEAR(average_judges(three, ids).values.at(ids[1]), 0.5, 1e-15);

  const std::vector<std::string> with_missing{ids[0], "nobody"};
  const auto m = average_judges(two, with_missing);
  EXPECT_EQ(m.missing, std::vector<std::string>{"nobody"});
}

TEST(JudgeVariance, UnbiasedAcrossJudges) {
  const auto ids = make_ids(1);
  const std::vector<JudgeScores> js{judge("a", ids, {0.2}), judge("b", ids, {0.4}),
                                    judge("c", ids, {0.9})};
  const double mean = 0.5;
  const double expected =
      ((0.2 - mean) * (0.2 - mean) + (0.4 - mean) * (0.4 - mean) + (0.9 - mean) * (0.9 - mean)) /
      2.0;
  EXPECT_NEAR(judge_variance(js, ids).values.at(ids[0]), expected, 1e-15);
}

TEST(CalibrateJudge, IdentityReversalAndScaling) {
  const auto ids = make_ids(40);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> t(ids.size()), rev(ids.size()), scaled(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t[i] = u(gen);
    rev[i] = 1.0 - t[i];
    scaled[i] = 0.5 * t[i] + 0.2 + noise(gen);
  }
  const auto targets = as_map(ids, t);
  const auto id = calibrate_judge(judge("a", ids, t), targets);
  EXPECT_NEAR(id.map.slope, 1.0, 1e-12);
  EXPECT_NEAR(id.map.intercept, 0.0, 1e-12);
  const auto r = calibrate_judge(judge("a", ids, rev), targets);
  EXPECT_NEAR(r.map.slope, -1.0, 1e-12);
  EXPECT_NEAR(r.map.intercept, 1.0, 1e-12);
  const auto s = calibrate_judge(judge("a", ids, scaled), targets);
  EXPECT_NEAR(s.map.slope, 2.0, 0.05);

  // Closed-form least squares on the same pairs.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    mx += scaled[i];
    my += t[i];
  }
  mx /= ids.size();
  my /= ids.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    sxy += (scaled[i] - mx) * (t[i] - my);
    sxx += (scaled[i] - mx) * (scaled[i] - mx);
  }
  EXPECT_NEAR(s.map.slope, sxy / sxx, 1e-12);
  EXPECT_NEAR(s.map.intercept, my - sxy / sxx * mx, 1e-12);
}

TEST(CalibrateJudge, ConstantScoresWarn) {
  const auto ids = make_ids(3);
  const auto fit =
      calibrate_judge(judge("a", ids, {0.5, 0.5, 0.5}), as_map(ids, {0.1, 0.2, 0.6}));
  EXPECT_EQ(fit.map.slope, 0.0);
  EXPECT_NEAR(fit.map.intercept, 0.3, 1e-15);
  EXPECT_TRUE(fit.warning);
}

TEST(AffineMap, ClipsToUnitInterval) {
  const AffineMap m{2.0, -0.5};
  EXPECT_EQ(m(0.1), 0.0);
  EXPECT_EQ(m(0.9), 1.0);
  EXPECT_DOUBLE_EQ(m(0.5), 0.5);
}

TEST(Nnls, MatchesActiveSetEnumeration) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 12, cols = 1 + static_cast<std::size_t>(t % 5);
    std::vector<double> a(rows * cols), b(rows);
    for (auto& v : a) v = n(gen);
    for (auto& v : b) v = n(gen);
    const auto got = nnls(a, rows, cols, b);
    const auto want = oracle::brute_nnls(a, rows, cols, b);
    for (const double v : got) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(oracle::residual(a, rows, cols, b, got), oracle::residual(a, rows, cols, b, want),
                1e-8);
    for (std::size_t c = 0; c < cols; ++c) EXPECT_NEAR(got[c], want[c], 1e-8) << t;
  }
}

TEST(FitFusionWeights, OracleJudgeDominatesPermutedJudge) {
  const auto ids = make_ids(50);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(ids.size());
  for (auto& v : t) v = u(gen);
  std::vector<double> perm = t;
  std::shuffle(perm.begin(), perm.end(), gen);
  const std::vector<JudgeScores> js{judge("oracle", ids, t), judge("noise", ids, perm)};
  const std::vector<AffineMap> identity(2);
  const auto fit = fit_fusion_weights(js, as_map(ids, t), identity);
  EXPECT_GE(fit.weights[0], 0.9);
  EXPECT_NEAR(fit.weights[0] + fit.weights[1], 1.0, 1e-12);
}

TEST(FitFusionWeights, IdenticalJudgesSplitUniformly) {
  const auto ids = make_ids(10);
  std::vector<double> s(ids.size()), t(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s[i] = 0.1 * i;
    t[i] = 0.08 * i + 0.05;
  }
  const std::vector<JudgeScores> js{judge("a", ids, s), judge("b", ids, s)};
  const std::vector<AffineMap> identity(2);
  const auto fit = fit_fusion_weights(js, as_map(ids, t), identity);
  EXPECT_EQ(fit.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(FitFusionWeights, ComplementaryViewsGetNearUniformWeights) {
  const auto ids = make_ids(60);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.2, 0.8), d(-0.15, 0.15);
  std::vector<double> a(ids.size()), b(ids.size()), t(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t[i] = u(gen);
    const double e = d(gen);
    a[i] = t[i] + e;
    b[i] = t[i] - e;
  }
  const std::vector<JudgeScores> js{judge("a", ids, a), judge("b", ids, b)};
  const auto fit = fit_fusion_weights(js, as_map(ids, t), std::vector<AffineMap>(2));
  EXPECT_NEAR(fit.weights[0], 0.5, 0.02);
  EXPECT_NEAR(fit.weights[1], 0.5, 0.02);
}

TEST(FitFusionWeights, DuplicatingAJudgePreservesItsMass) {
  const auto ids = make_ids(40);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(-0.2, 0.2);
  std::vector<double> t(ids.size()), a(ids.size()), b(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t[i] = u(gen);
    a[i] = std::clamp(t[i] + d(gen), 0.0, 1.0);
    b[i] = std::clamp(t[i] + 2.0 * d(gen), 0.0, 1.0);
  }
  const auto targets = as_map(ids, t);
  const std::vector<JudgeScores> base{judge("a", ids, a), judge("b", ids, b)};
  const std::vector<JudgeScores> dup{judge("a", ids, a), judge("b", ids, b),
                                     judge("a2", ids, a)};
  const auto w = fit_fusion_weights(base, targets, std::vector<AffineMap>(2)).weights;
  const auto wd = fit_fusion_weights(dup, targets, std::vector<AffineMap>(3)).weights;
  EXPECT_NEAR(wd[0] + wd[2], w[0], 1e-6);
  EXPECT_NEAR(wd[1], w[1], 1e-6);
}

TEST(FitFusionWeights, AllZeroSolutionFallsBackToUniform) {
  const auto ids = make_ids(4);
  const std::vector<JudgeScores> js{judge("a", ids, {0.9, 0.1, 0.9, 0.1}),
                                    judge("b", ids, {0.8, 0.2, 0.8, 0.2})};
  const auto fit =
      fit_fusion_weights(js, as_map(ids, {-0.9, -0.1, -0.9, -0.1}), std::vector<AffineMap>(2));
  EXPECT_EQ(fit.weights, (std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(fit.warning);
}

TEST(Fuse, UniformIdentityEqualsAverageExactly) {
  const auto ids = make_ids(30);
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<JudgeScores> js;
  for (const char* name : {"a", "b", "c"}) {
    std::vector<double> s(ids.size());
    for (auto& v : s) v = u(gen);
    js.push_back(judge(name, ids, s));
  }
  js[1].scores.erase(ids[3]);
  FusionModel m{{"a", "b", "c"}, std::vector<AffineMap>(3), {1.0 / 3, 1.0 / 3, 1.0 / 3}, {}};
  const auto fused = fuse(js, m, ids);
  const auto avg = average_judges(js, ids);
  for (const auto& id : ids) EXPECT_EQ(fused.values.at(id), avg.values.at(id)) << id;
}

TEST(Fuse, DegenerateWeightsAndConsensus) {
  const auto ids = make_ids(5);
  const std::vector<JudgeScores> js{judge("a", ids, {0.1, 0.2, 0.3, 0.4, 0.5}),
                                    judge("b", ids, {0.9, 0.9, 0.9, 0.9, 0.9})};
  const FusionModel first{{"a", "b"}, {AffineMap{0.5, 0.1}, AffineMap{}}, {1.0, 0.0}, {}};
  const auto f = fuse(js, first, ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(f.values.at(ids[i]), (AffineMap{0.5, 0.1}(js[0].scores.at(ids[i]))));
  }
  const std::vector<JudgeScores> same{judge("a", ids, {0.1, 0.2, 0.3, 0.4, 0.5}),
                                      judge("b", ids, {0.1, 0.2, 0.3, 0.4, 0.5})};
  const FusionModel mixed{{"a", "b"}, std::vector<AffineMap>(2), {0.3, 0.7}, {}};
  const auto g = fuse(same, mixed, ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_NEAR(g.values.at(ids[i]), same[0].scores.at(ids[i]), 1e-15);
  }
}

TEST(Fuse, FusedErrorNoWorseThanEitherJudge) {
  const auto ids = make_ids(50);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(ids.size());
  for (auto& v : t) v = u(gen);
  std::vector<double> perm = t;
  std::shuffle(perm.begin(), perm.end(), gen);
  const std::vector<JudgeScores> js{judge("oracle", ids, t), judge("noise", ids, perm)};
  const auto targets = as_map(ids, t);
  FusionModel m;
  for (const auto& j : js) {
    m.judges.push_back(j.judge_id);
    m.calibrations.push_back(calibrate_judge(j, targets).map);
  }
  m.weights = fit_fusion_weights(js, targets, m.calibrations).weights;
  const auto fused = fuse(js, m, ids);
  auto err = [&](auto get) {
    double s = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) s += std::abs(get(i) - t[i]);
    return s / ids.size();
  };
  const double fused_mae = err([&](std::size_t i) { return fused.values.at(ids[i]); });
  EXPECT_LE(fused_mae, err([&](std::size_t i) { return t[i]; }) + 1e-12);
  EXPECT_LE(fused_mae, err([&](std::size_t i) { return perm[i]; }));
}

TEST(Fuse, BoundedAndReportsMissing) {
  const auto ids = make_ids(3);
  const std::vector<JudgeScores> js{judge("a", ids, {0.0, 0.5, 1.0}),
                                    judge("b", ids, {1.0, 0.5, 0.0})};
  const FusionModel m{{"a", "b"}, {AffineMap{3.0, -1.0}, AffineMap{-2.0, 1.5}}, {0.4, 0.6}, {}};
  std::vector<std::string> query = ids;
  query.push_back("absent");
  const auto f = fuse(js, m, query);
  for (const auto& [id, v] : f.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(f.missing, std::vector<std::string>{"absent"});
}

TEST(FusionModel, JsonRoundTrip) {
  FusionModel m{{"a", "b"}, {AffineMap{1.5, -0.2}, AffineMap{0.7, 0.1}}, {0.25, 0.75}, {}};
  m.provenance.seed = 4;
  const auto back = FusionModel::from_json(m.to_json());
  EXPECT_EQ(back.judges, m.judges);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.calibrations[0].slope, 1.5);
  EXPECT_EQ(back.provenance, m.provenance);
  EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
}

}  // namespace
}  // namespace betajudge
