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

#include "betajudge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "betajudge/error.hpp"
#include "oracles.hpp"

namespace betajudge {
namespace {

using Cells = std::vector<std::vector<std::optional<double>>>;

ReliabilityMatrix to_matrix(const Cells& cells) {
  ReliabilityMatrix m(cells.size(), cells.front().size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t u = 0; u < cells[r].size(); ++u) {
      if (cells[r][u]) m.set(r, u, *cells[r][u]);
    }
  }
  return m;
}

Cells random_cells(std::mt19937_64& gen, std::size_t raters, std::size_t units,
                   double missing) {
  std::uniform_int_distribution<int> ur(1, 5);
  std::uniform_real_distribution<double> um(0.0, 1.0);
  Cells c(raters, std::vector<std::optional<double>>(units));
  for (auto& row : c) {
    for (auto& cell : row) {
      if (um(gen) >= missing) cell = ur(gen);
    }
  }
  return c;
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman_rho(x, x), 1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(x, rev), -1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5,
              1e-15);
}

TEST(Spearman, ConstantInputIsUndefined) {
  try {
    spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined);
  }
}

TEST(Spearman, MatchesNaiveRankingWithTies) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> u(0, 6);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = u(gen);
    for (auto& v : y) v = u(gen);
    EXPECT_NEAR(spearman_rho(x, y), oracle::naive_spearman(x, y), 1e-12);
  }
}

TEST(Kendall, Examples) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_NEAR(kendall_tau(x, x), 1.0, 1e-15);
  EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}),
              1.0 / 3.0, 1e-15);
  const std::vector<double> a{1, 1, 2}, b{1, 2, 3};
  const double tau = kendall_tau(a, b);
  EXPECT_GT(tau, 0.0);
  EXPECT_NEAR(tau, oracle::brute_kendall({1, 1, 2}, {1, 2, 3}), 1e-15);
}

TEST(Kendall, AllTiedIsUndefined) {
  EXPECT_THROW(kendall_tau(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Kendall, MatchesBruteForceOnShortInputs) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> un(3, 8), uv(0, 4);
  int checked = 0;
  while (checked < 200) {
    const auto n = static_cast<std::size_t>(un(gen));
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = uv(gen);
    for (auto& v : y) v = uv(gen);
    const bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    const bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) continue;
    EXPECT_NEAR(kendall_tau(x, y), oracle::brute_kendall(x, y), 1e-12);
    ++checked;
  }
}

TEST(Kendall, MatchesBruteForceOnLongInputs) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x(300), y(300);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::round(u(gen) * 20.0);
      y[i] = x[i] + std::round(u(gen) * 10.0);
    }
    EXPECT_NEAR(kendall_tau(x, y), oracle::brute_kendall(x, y), 1e-12);
  }
}

TEST(RankCorrelation, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(15), y(15), fx(15), gy(15);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::round(u(gen) * 4.0) / 4.0;
      y[i] = u(gen);
      fx[i] = std::exp(3.0 * x[i]) - 7.0;
      gy[i] = y[i] * y[i] * y[i];
    }
    EXPECT_NEAR(spearman_rho(x, y), spearman_rho(fx, gy), 1e-12);
    EXPECT_NEAR(kendall_tau(x, y), kendall_tau(fx, gy), 1e-12);
  }
}

TEST(Mae, Examples) {
  const std::vector<double> a{0.2, 0.8}, b{0.0, 1.0};
  EXPECT_EQ(mae(a, a), 0.0);
  EXPECT_NEAR(mae(a, b), 0.2, 1e-15);
}

TEST(Mae, VarianceOfTwoRatingSets) {
  const RatingSet top = RatingSet::from_raw("top", {3, 3, 3, 3, 4});
  const RatingSet bottom = RatingSet::from_raw("bottom", {1, 3, 3, 5});
  const std::vector<Target> targets{target_from(top), target_from(bottom)};
  EXPECT_NEAR(*targets[0].variance, 0.2 / 16.0, 1e-12);
  // Ratings of 1 and 5 are clipped to 0.001 / 0.999 before the variance.
  EXPECT_NEAR(*targets[1].variance, (8.0 / 3.0) / 16.0, 2e-3);
  const MetricReport r = evaluate_predictions(
      std::vector<double>{0.55, 0.5, 0.1},
      std::vector<std::optional<double>>{0.05, 0.05, std::nullopt},
      std::vector<Target>{targets[0], targets[1], Target{0.0, std::nullopt}});
  ASSERT_TRUE(r.mae_var);
  EXPECT_NEAR(*r.mae_var, (0.0375 + 0.1167) / 2.0, 1e-3);
  EXPECT_EQ(r.n_var_pairs, 2u);
  EXPECT_EQ(r.n_pairs, 3u);
}

TEST(Mae, PermutationInvariantAndTriangle) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(9), b(9), c(9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(gen);
      b[i] = u(gen);
      c[i] = u(gen);
    }
    EXPECT_LE(mae(a, c), mae(a, b) + mae(b, c) + 1e-15);
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pa, pb;
    for (const auto i : perm) {
      pa.push_back(a[i]);
      pb.push_back(b[i]);
    }
    EXPECT_NEAR(mae(a, b), mae(pa, pb), 1e-15);
    EXPECT_NEAR(mae(a, b), oracle::naive_mae(a, b), 1e-15);
  }
}

TEST(Krippendorff, PerfectAgreementIsOne) {
  const Cells c{{1, 2, 3, 5}, {1, 2, 3, 5}, {1, 2, 3, 5}};
  EXPECT_DOUBLE_EQ(krippendorff_alpha(to_matrix(c)), 1.0);
  EXPECT_DOUBLE_EQ(krippendorff_alpha(to_matrix(c), MeasurementLevel::ordinal), 1.0);
}

TEST(Krippendorff, SystematicDisagreementIsStronglyNegative) {
  const Cells c{{1, 5, 1}, {5, 1, 5}};
  const double a = krippendorff_alpha(to_matrix(c));
  EXPECT_LT(a, -0.5);
  EXPECT_NEAR(a, oracle::coincidence_alpha(c), 1e-12);
}

TEST(Krippendorff, ToyMatrixWithMissingCell) {
  const Cells c{{1, 2, 3, 3, 2}, {1, 2, 3, 3, std::nullopt}, {2, 2, 4, 3, 1}};
  EXPECT_NEAR(krippendorff_alpha(to_matrix(c)), oracle::coincidence_alpha(c), 1e-12);
  EXPECT_NEAR(krippendorff_alpha(to_matrix(c), MeasurementLevel::ordinal),
              oracle::coincidence_alpha(c, true), 1e-12);
}

TEST(Krippendorff, MatchesCoincidenceOracleOnRandomMatrices) {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> ur(2, 5), uu(3, 12);
  int checked = 0;
  while (checked < 100) {
    const Cells c = random_cells(gen, static_cast<std::size_t>(ur(gen)),
                                 static_cast<std::size_t>(uu(gen)), 0.25);
    double expected;
    try {
      expected = oracle::coincidence_alpha(c);
      if (!std::isfinite(expected)) continue;
      (void)krippendorff_alpha(to_matrix(c));
    } catch (const Error&) {
      continue;
    }
    EXPECT_NEAR(krippendorff_alpha(to_matrix(c)), expected, 1e-10);
    EXPECT_NEAR(krippendorff_alpha(to_matrix(c), MeasurementLevel::ordinal),
                oracle::coincidence_alpha(c, true), 1e-10);
    ++checked;
  }
}

TEST(Krippendorff, InvariantUnderRelabelReorderAndAffine) {
  std::mt19937_64 gen(13);
  for (int t = 0; t < 30; ++t) {
    const Cells c = random_cells(gen, 4, 8, 0.2);
    double base;
    try {
      base = krippendorff_alpha(to_matrix(c));
    } catch (const Error&) {
      continue;
    }
    Cells shuffled = c;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Cells reordered = shuffled;
    Cells scaled = c;
    for (std::size_t r = 0; r < c.size(); ++r) {
      for (std::size_t u = 0; u < 8; ++u) {
        reordered[r][u] = shuffled[r][perm[u]];
        if (c[r][u]) scaled[r][u] = 2.5 * *c[r][u] - 7.0;
      }
    }
    EXPECT_NEAR(krippendorff_alpha(to_matrix(reordered)), base, 1e-12);
    EXPECT_NEAR(krippendorff_alpha(to_matrix(scaled)), base, 1e-12);
  }
}

TEST(Krippendorff, UndefinedCases) {
  const Cells one_unit{{3, std::nullopt}, {4, std::nullopt}};
  EXPECT_THROW(krippendorff_alpha(to_matrix(one_unit)), Error);
  const Cells no_variation{{3, 3}, {3, 3}};
  try {
    krippendorff_alpha(to_matrix(no_variation));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined);
  }
}

TEST(EvaluatePredictions, MisalignedIsError) {
  try {
    evaluate_predictions(std::vector<double>{0.1, 0.2, 0.3}, {},
                         std::vector<Target>{{0.1, {}}, {0.2, {}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::alignment);
  }
}

}  // namespace
}  // namespace betajudge
