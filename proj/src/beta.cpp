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

#include "betajudge/beta.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << what << " must be positive and finite, got " << x;
    throw Error(ErrorKind::domain, msg.str());
  }
}

double log_likelihood(const BetaSuffStats& s, double la, double lb) {
  return -nll_and_grad(s, la, lb).nll;
}

}  // namespace

BetaParams BetaParams::from_shape(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  return {std::log(alpha), std::log(beta)};
}

double log_gamma(double x) {
  require_positive(x, "log_gamma argument");
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double digamma(double x) {
  require_positive(x, "digamma argument");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic series, Bernoulli coefficients B_2k / 2k.
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma argument");
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 +
             inv * (0.5 +
                    inv * (1.0 / 6 -
                           inv2 * (1.0 / 30 -
                                   inv2 * (1.0 / 42 -
                                           inv2 * (1.0 / 30 -
                                                   inv2 * (5.0 / 66)))))));
  return acc + series;
}

double log_beta_fn(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  return log_gamma(alpha) + log_gamma(beta) - log_gamma(alpha + beta);
}

double log_pdf(double y, double alpha, double beta) {
  if (!(y > 0.0 && y < 1.0)) {
    std::ostringstream msg;
    msg << "Beta log-density requires 0 < y < 1, got " << y;
    throw Error(ErrorKind::domain, msg.str());
  }
  return (alpha - 1.0) * std::log(y) + (beta - 1.0) * std::log1p(-y) -
         log_beta_fn(alpha, beta);
}

double log_pdf(double y, const BetaParams& p) {
  return log_pdf(y, p.alpha(), p.beta());
}

BetaMoments moments(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  const double s = alpha + beta;
  return {alpha / s, alpha * beta / (s * s * (s + 1.0))};
}

BetaMoments moments(const BetaParams& p) { return moments(p.alpha(), p.beta()); }

BetaSuffStats BetaSuffStats::from(std::span<const double> ys) {
  BetaSuffStats s;
  for (const double y : ys) {
    if (!(y > 0.0 && y < 1.0)) {
      std::ostringstream msg;
      msg << "rating must lie in (0, 1), got " << y;
      throw Error(ErrorKind::domain, msg.str());
    }
    s.count += 1.0;
    s.sum_log_y += std::log(y);
    s.sum_log_1my += std::log1p(-y);
  }
  return s;
}

NllGrad nll_and_grad(const BetaSuffStats& s, double log_alpha,
                     double log_beta) {
  if (s.count <= 0.0) {
    throw Error(ErrorKind::domain, "nll_and_grad: empty rating sample");
  }
  const double a = std::exp(log_alpha);
  const double b = std::exp(log_beta);
  const double psi_ab = digamma(a + b);
  NllGrad out;
  out.nll = -(a - 1.0) * s.sum_log_y - (b - 1.0) * s.sum_log_1my +
            s.count * log_beta_fn(a, b);
  out.g_log_alpha = a * (s.count * (digamma(a) - psi_ab) - s.sum_log_y);
  out.g_log_beta = b * (s.count * (digamma(b) - psi_ab) - s.sum_log_1my);
  return out;
}

NllGrad nll_and_grad(std::span<const double> ys, double log_alpha,
                     double log_beta) {
  if (ys.empty()) {
    throw Error(ErrorKind::domain, "nll_and_grad: empty rating sample");
  }
  return nll_and_grad(BetaSuffStats::from(ys), log_alpha, log_beta);
}

BetaParams fit_single_instance(std::span<const double> ys) {
  const BetaSuffStats s = BetaSuffStats::from(ys);
  if (s.count <= 0.0) {
    throw Error(ErrorKind::domain, "fit_single_instance: empty rating sample");
  }
  const double lo = std::log(kFitShapeMin);
  const double hi = std::log(kFitShapeMax);
  const auto clamp = [&](double v) { return std::clamp(v, lo, hi); };

  constexpr int kGrid = 41;
  double best_la = lo, best_lb = lo;
  double best_ll = -INFINITY;
  for (int i = 0; i < kGrid; ++i) {
    const double la = lo + (hi - lo) * i / (kGrid - 1);
    for (int j = 0; j < kGrid; ++j) {
      const double lb = lo + (hi - lo) * j / (kGrid - 1);
      const double ll = log_likelihood(s, la, lb);
      if (ll > best_ll) {
        best_ll = ll;
        best_la = la;
        best_lb = lb;
      }
    }
  }

  double la = best_la, lb = best_lb, ll = best_ll;
  for (int iter = 0; iter < 500; ++iter) {
    const NllGrad g = nll_and_grad(s, la, lb);
    // Gradient / Hessian of the log-likelihood in (log a, log b).
    const double a = std::exp(la), b = std::exp(lb);
    const double ga = -g.g_log_alpha, gb = -g.g_log_beta;
    const double t_ab = trigamma(a + b);
    const double haa = ga - s.count * a * a * (trigamma(a) - t_ab);
    const double hbb = gb - s.count * b * b * (trigamma(b) - t_ab);
    const double hab = s.count * a * b * t_ab;
    const double det = haa * hbb - hab * hab;

    double da, db;
    if (haa < 0.0 && det > 0.0) {
      da = -(hbb * ga - hab * gb) / det;
      db = -(haa * gb - hab * ga) / det;
    } else {
      const double norm = std::hypot(ga, gb);
      if (norm == 0.0) break;
      da = ga / norm;
      db = gb / norm;
    }
    // Zero out components pushing against an active bound.
    if ((la <= lo && da < 0.0) || (la >= hi && da > 0.0)) da = 0.0;
    if ((lb <= lo && db < 0.0) || (lb >= hi && db > 0.0)) db = 0.0;
    if (da == 0.0 && db == 0.0) {
      // Newton direction fully blocked; try the raw gradient once.
      da = ga;
      db = gb;
      if ((la <= lo && da < 0.0) || (la >= hi && da > 0.0)) da = 0.0;
      if ((lb <= lo && db < 0.0) || (lb >= hi && db > 0.0)) db = 0.0;
      if (da == 0.0 && db == 0.0) break;
    }

    bool improved = false;
    double step = 1.0;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const double nla = clamp(la + step * da);
      const double nlb = clamp(lb + step * db);
      const double nll_ = log_likelihood(s, nla, nlb);
      if (nll_ > ll) {
        const double moved = std::hypot(nla - la, nlb - lb);
        la = nla;
        lb = nlb;
        ll = nll_;
        improved = moved > 1e-14;
        break;
      }
    }
    if (!improved) break;
  }
  return {la, lb};
}

}  // namespace betajudge
