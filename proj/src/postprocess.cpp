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

#include "betajudge/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "betajudge/error.hpp"

namespace betajudge {

double apply_clamp(double mean, double variance, const ClampRule& rule) {
  if (variance < rule.variance_threshold) {
    if (mean <= rule.margin) return 0.0;
    if (mean >= 1.0 - rule.margin) return 1.0;
  }
  return mean;
}

double apply_clamp(const Prediction& pred, const ClampRule& rule) {
  return apply_clamp(pred.moments.mean, pred.moments.variance, rule);
}

double clamp_objective(std::span<const double> scores, std::span<const double> means) {
  try {
    return spearman_rho(scores, means) + kendall_tau(scores, means) - mae(scores, means);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::undefined) return -std::numeric_limits<double>::infinity();
    throw;
  }
}

ClampFit fit_clamp_threshold(std::span<const Prediction> dev_preds,
                             std::span<const Target> dev_targets, double margin) {
  if (dev_preds.size() != dev_targets.size()) {
    throw Error(ErrorKind::alignment, "dev predictions and targets are not aligned");
  }
  if (dev_preds.size() < 3) {
    throw Error(ErrorKind::domain, "clamp threshold fitting needs at least 3 dev points");
  }
  if (!(margin > 0.0 && margin < 0.5)) {
    throw Error(ErrorKind::domain, "clamp margin must lie in (0, 0.5)");
  }
  std::vector<double> candidates{0.0};
  for (const auto& p : dev_preds) candidates.push_back(p.moments.variance);
  candidates.push_back(std::numeric_limits<double>::infinity());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<double> means(dev_targets.size());
  for (std::size_t i = 0; i < means.size(); ++i) means[i] = dev_targets[i].mean;

  ClampFit best;
  best.rule.margin = margin;
  bool first = true;
  std::vector<double> scores(dev_preds.size());
  for (const double threshold : candidates) {
    const ClampRule rule{margin, threshold};
    for (std::size_t i = 0; i < dev_preds.size(); ++i) {
      scores[i] = apply_clamp(dev_preds[i], rule);
    }
    const double obj = clamp_objective(scores, means);
    if (first) best.baseline_objective = obj;
    if (first || obj > best.objective) {
      best.objective = obj;
      best.rule = rule;
    }
    first = false;
  }
  return best;
}

}  // namespace betajudge
