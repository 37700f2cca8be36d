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

#ifndef BETAJUDGE_BETA_HPP_
#define BETAJUDGE_BETA_HPP_

#include <cmath>
#include <cstddef>
#include <span>

namespace betajudge {

/// Beta distribution parameters, held in log space: positivity of alpha and
/// beta is structural.
struct BetaParams {
  double log_alpha = 0.0;
  double log_beta = 0.0;

  double alpha() const { return std::exp(log_alpha); }
  double beta() const { return std::exp(log_beta); }

  static BetaParams from_shape(double alpha, double beta);

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

struct BetaMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Special functions. Valid for x > 0.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

/// log B(alpha, beta).
double log_beta_fn(double alpha, double beta);

double log_pdf(double y, double alpha, double beta);
double log_pdf(double y, const BetaParams& p);

BetaMoments moments(double alpha, double beta);
BetaMoments moments(const BetaParams& p);

/// Sufficient statistics of a rating sample for the Beta likelihood.
struct BetaSuffStats {
  double count = 0.0;
  double sum_log_y = 0.0;
  double sum_log_1my = 0.0;

  static BetaSuffStats from(std::span<const double> ys);
};

struct NllGrad {
  double nll = 0.0;
  double g_log_alpha = 0.0;
  double g_log_beta = 0.0;
};

/// Negative log-likelihood of ys under Beta(exp(log_alpha), exp(log_beta))
/// and its gradient with respect to the log-parameters.
NllGrad nll_and_grad(std::span<const double> ys, double log_alpha,
                     double log_beta);
NllGrad nll_and_grad(const BetaSuffStats& s, double log_alpha,
                     double log_beta);

inline constexpr double kFitShapeMin = 0.05;
inline constexpr double kFitShapeMax = 100.0;

/// Single-sample maximum likelihood fit with alpha, beta boxed to
/// [kFitShapeMin, kFitShapeMax]. Coarse log-grid, then projected Newton /
/// gradient refinement. Deterministic.
BetaParams fit_single_instance(std::span<const double> ys);

}  // namespace betajudge

#endif  // BETAJUDGE_BETA_HPP_
