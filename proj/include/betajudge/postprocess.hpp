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

#ifndef BETAJUDGE_POSTPROCESS_HPP_
#define BETAJUDGE_POSTPROCESS_HPP_

#include <span>
#include <vector>

#include "betajudge/metrics.hpp"
#include "betajudge/model.hpp"

namespace betajudge {

inline constexpr double kClampMargin = 0.125;

/// Snap a near-boundary mean to 0/1 when the predicted variance is strictly
/// below `variance_threshold`. Margin comparisons are inclusive.
struct ClampRule {
  double margin = kClampMargin;
  double variance_threshold = 0.0;  // may be +inf
};

double apply_clamp(double mean, double variance, const ClampRule& rule);
double apply_clamp(const Prediction& pred, const ClampRule& rule);

/// rho + tau - MAE of scores against target means; -inf if a rank
/// correlation is undefined for these scores.
double clamp_objective(std::span<const double> scores, std::span<const double> means);

struct ClampFit {
  ClampRule rule;
  double objective = 0.0;
  double baseline_objective = 0.0;  // threshold 0 (no clamping)
};

/// Exact search over {0} U distinct dev variances U {+inf}; the first
/// (smallest) threshold reaching the maximum wins. Targets are aligned with
/// predictions. Throws Error(domain) for fewer than 3 dev points.
ClampFit fit_clamp_threshold(std::span<const Prediction> dev_preds,
                             std::span<const Target> dev_targets,
                             double margin = kClampMargin);

}  // namespace betajudge

#endif  // BETAJUDGE_POSTPROCESS_HPP_
