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

#ifndef BETAJUDGE_METRICS_HPP_
#define BETAJUDGE_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betajudge/corpus.hpp"

namespace betajudge {

/// Average (fractional) ranks, 1-based; ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

double pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of average ranks. Throws Error(undefined) for fewer
/// than 3 points or a constant input.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

/// Tie-corrected tau-b in O(n log n). Throws Error(undefined) when either
/// side is entirely tied.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

/// Mean absolute difference. Throws Error(domain) on empty or unequal input.
double mae(std::span<const double> preds, std::span<const double> targets);

/// Per-instance human target on the normalized scale.
struct Target {
  double mean = 0.0;
  std::optional<double> variance;  // unbiased; absent when N < 2
};

Target target_from(const RatingSet& rs);

struct MetricReport {
  double spearman = 0.0;
  double kendall = 0.0;
  double mae_mu = 0.0;
  std::optional<double> mae_var;
  std::size_t n_pairs = 0;
  std::size_t n_var_pairs = 0;
};

/// Scores, predicted variances (optional) and targets, all aligned.
MetricReport evaluate_predictions(std::span<const double> scores,
                                  std::span<const std::optional<double>> pred_vars,
                                  std::span<const Target> targets);

/// Raters x instances matrix of raw ratings; missing cells are empty.
class ReliabilityMatrix {
 public:
  ReliabilityMatrix(std::size_t raters, std::size_t units)
      : raters_(raters), units_(units), cells_(raters * units) {}

  /// Human ratings of `ids` (column order), one row per distinct rater_id.
  /// A rater rating the same instance twice keeps the later rating.
  static ReliabilityMatrix from_records(std::span<const AnnotationRecord> records,
                                        std::span<const std::string> ids,
                                        const FilterPolicy& policy);

  std::size_t raters() const { return raters_; }
  std::size_t units() const { return units_; }
  void set(std::size_t rater, std::size_t unit, double value) {
    cells_[rater * units_ + unit] = value;
  }
  const std::optional<double>& at(std::size_t rater, std::size_t unit) const {
    return cells_[rater * units_ + unit];
  }

 private:
  std::size_t raters_;
  std::size_t units_;
  std::vector<std::optional<double>> cells_;
};

enum class MeasurementLevel { interval, ordinal };

/// Krippendorff's alpha = 1 - D_o / D_e over pairable values. Throws
/// Error(undefined) with fewer than 2 pairable units or zero expected
/// disagreement.
double krippendorff_alpha(const ReliabilityMatrix& m,
                          MeasurementLevel level = MeasurementLevel::interval);

}  // namespace betajudge

#endif  // BETAJUDGE_METRICS_HPP_
