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

#ifndef BETAJUDGE_FUSION_HPP_
#define BETAJUDGE_FUSION_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "betajudge/corpus.hpp"
#include "betajudge/provenance.hpp"

namespace betajudge {

/// One judge's scores on the normalized [0, 1] scale.
struct JudgeScores {
  std::string judge_id;
  std::map<std::string, double> scores;
};

/// Judge records grouped by judge id (sorted). Repeated ratings of one
/// instance by the same judge are averaged after normalization.
std::vector<JudgeScores> judge_scores_from_records(
    std::span<const AnnotationRecord> records);

struct AffineMap {
  double slope = 1.0;
  double intercept = 0.0;

  /// slope * x + intercept, clipped to [0, 1].
  double operator()(double x) const;
};

struct FusionModel {
  std::vector<std::string> judges;
  std::vector<AffineMap> calibrations;
  std::vector<double> weights;  // nonnegative, sums to 1
  Provenance provenance;

  nlohmann::json to_json() const;
  static FusionModel from_json(const nlohmann::json& j);
};

/// Id -> value for scored ids; ids with no score are listed in `missing`.
struct ScoreMap {
  std::map<std::string, double> values;
  std::vector<std::string> missing;
};

/// Unweighted mean over the judges that scored each id.
ScoreMap average_judges(std::span<const JudgeScores> judges,
                        std::span<const std::string> ids);

/// Unbiased sample variance across judges per id (ids with fewer than two
/// judge scores are missing).
ScoreMap judge_variance(std::span<const JudgeScores> judges,
                        std::span<const std::string> ids);

struct CalibrationFit {
  AffineMap map;
  std::optional<std::string> warning;
};

/// Least-squares affine map from judge score to human mean over the dev ids
/// the judge scored. Constant judge scores give slope 0 and the target mean,
/// with a warning. Throws Error(domain) with fewer than 2 scored dev ids.
CalibrationFit calibrate_judge(const JudgeScores& judge,
                               const std::map<std::string, double>& dev_targets);

struct WeightFit {
  std::vector<double> weights;
  std::optional<std::string> warning;
};

/// Nonnegative least squares of calibrated judge scores onto the train
/// targets (over ids every judge scored), normalized to sum 1. Identical
/// calibrated columns share their weight equally.
WeightFit fit_fusion_weights(std::span<const JudgeScores> judges,
                             const std::map<std::string, double>& train_targets,
                             std::span<const AffineMap> calibrations);

/// Weighted mean of calibrated scores over present judges, weights
/// renormalized over those judges, clipped to [0, 1].
ScoreMap fuse(std::span<const JudgeScores> judges, const FusionModel& model,
              std::span<const std::string> ids);

/// Nonnegative least squares min ||A x - b||, x >= 0 (Lawson-Hanson).
/// A is rows x cols, row-major.
std::vector<double> nnls(std::span<const double> a, std::size_t rows, std::size_t cols,
                         std::span<const double> b, double tol = 1e-10);

}  // namespace betajudge

#endif  // BETAJUDGE_FUSION_HPP_
