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
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

const JudgeScores* find_judge(std::span<const JudgeScores> judges, const std::string& id) {
  for (const auto& j : judges) {
    if (j.judge_id == id) return &j;
  }
  return nullptr;
}

}  // namespace

std::vector<JudgeScores> judge_scores_from_records(std::span<const AnnotationRecord> records) {
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
  for (const auto& rec : records) {
    if (!rec.source.is_judge || !rec.raw_rating) continue;
    auto& cell = acc[rec.source.judge_id][rec.instance_id];
    cell.first += normalize_rating(*rec.raw_rating);
    cell.second += 1;
  }
  std::vector<JudgeScores> out;
  for (auto& [judge, scores] : acc) {
    JudgeScores js{judge, {}};
    for (auto& [id, sum_n] : scores) js.scores[id] = sum_n.first / sum_n.second;
    out.push_back(std::move(js));
  }
  return out;
}

double AffineMap::operator()(double x) const {
  return std::clamp(slope * x + intercept, 0.0, 1.0);
}

nlohmann::json FusionModel::to_json() const {
  nlohmann::json cal = nlohmann::json::array();
  for (const auto& c : calibrations) cal.push_back({{"slope", c.slope}, {"intercept", c.intercept}});
  return {{"judges", judges},
          {"calibrations", cal},
          {"weights", weights},
          {"provenance", provenance.to_json()}};
}

FusionModel FusionModel::from_json(const nlohmann::json& j) {
  FusionModel m;
  try {
    m.judges = j.at("judges").get<std::vector<std::string>>();
    for (const auto& c : j.at("calibrations")) {
      m.calibrations.push_back({c.at("slope").get<double>(), c.at("intercept").get<double>()});
    }
    m.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("provenance")) m.provenance = Provenance::from_json(j.at("provenance"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("fusion model: ") + e.what());
  }
  if (m.calibrations.size() != m.judges.size() || m.weights.size() != m.judges.size()) {
    throw Error(ErrorKind::schema, "fusion model: judge, calibration and weight counts differ");
  }
  return m;
}

ScoreMap average_judges(std::span<const JudgeScores> judges, std::span<const std::string> ids) {
  ScoreMap out;
  for (const auto& id : ids) {
    double sum = 0.0;
    int n = 0;
    for (const auto& j : judges) {
      const auto it = j.scores.find(id);
      if (it == j.scores.end()) continue;
      sum += it->second;
      ++n;
    }
    if (n == 0) {
      out.missing.push_back(id);
    } else {
      out.values[id] = std::clamp(sum / n, 0.0, 1.0);
    }
  }
  return out;
}

ScoreMap judge_variance(std::span<const JudgeScores> judges, std::span<const std::string> ids) {
  ScoreMap out;
  for (const auto& id : ids) {
    std::vector<double> xs;
    for (const auto& j : judges) {
      const auto it = j.scores.find(id);
      if (it != j.scores.end()) xs.push_back(it->second);
    }
    if (xs.size() < 2) {
      out.missing.push_back(id);
      continue;
    }
    out.values[id] = *sample_stats(xs).variance;
  }
  return out;
}

CalibrationFit calibrate_judge(const JudgeScores& judge,
                               const std::map<std::string, double>& dev_targets) {
  std::vector<double> xs, ys;
  for (const auto& [id, target] : dev_targets) {
    const auto it = judge.scores.find(id);
    if (it == judge.scores.end()) continue;
    xs.push_back(it->second);
    ys.push_back(target);
  }
  if (xs.size() < 2) {
    throw Error(ErrorKind::domain, "calibration of judge '" + judge.judge_id +
                                       "' needs at least 2 scored dev instances");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  CalibrationFit fit;
  if (sxx == 0.0) {
    fit.map = {0.0, my};
    fit.warning = "judge '" + judge.judge_id + "' has constant dev scores; calibrated to the mean";
    return fit;
  }
  fit.map.slope = sxy / sxx;
  fit.map.intercept = my - fit.map.slope * mx;
  return fit;
}

std::vector<double> nnls(std::span<const double> a, std::size_t rows, std::size_t cols,
                         std::span<const double> b, double tol) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Mat> A(a.data(), static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(cols));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Eigen::Index>(rows));
  const auto n = static_cast<Eigen::Index>(cols);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(cols, false);

  const auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(y);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zs[static_cast<Eigen::Index>(k)];
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(cols) + 10; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (y - A * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < 3 * static_cast<int>(cols) + 10; ++inner) {
      const Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return {x.data(), x.data() + n};
}

WeightFit fit_fusion_weights(std::span<const JudgeScores> judges,
                             const std::map<std::string, double>& train_targets,
                             std::span<const AffineMap> calibrations) {
  if (judges.size() < 2) throw Error(ErrorKind::domain, "fusion needs at least 2 judges");
  if (calibrations.size() != judges.size()) {
    throw Error(ErrorKind::domain, "one calibration per judge is required");
  }
  const std::size_t K = judges.size();
  std::vector<std::vector<double>> columns(K);
  std::vector<double> b;
  for (const auto& [id, target] : train_targets) {
    bool all = true;
    for (const auto& j : judges) all = all && j.scores.contains(id);
    if (!all) continue;
    for (std::size_t k = 0; k < K; ++k) columns[k].push_back(calibrations[k](judges[k].scores.at(id)));
    b.push_back(target);
  }
  if (b.empty()) {
    throw Error(ErrorKind::domain, "no training instance is scored by every judge");
  }

  // Merge identical columns; each class gets one NNLS variable.
  std::vector<std::size_t> cls(K);
  std::vector<std::size_t> reps;
  for (std::size_t k = 0; k < K; ++k) {
    cls[k] = reps.size();
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if (columns[reps[c]] == columns[k]) {
        cls[k] = c;
        break;
      }
    }
    if (cls[k] == reps.size()) reps.push_back(k);
  }
  const std::size_t C = reps.size(), R = b.size();
  std::vector<double> a(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) a[r * C + c] = columns[reps[c]][r];
  }
  const std::vector<double> x = nnls(a, R, C, b);

  std::vector<std::size_t> class_size(C, 0);
  for (std::size_t k = 0; k < K; ++k) ++class_size[cls[k]];
  WeightFit fit;
  fit.weights.assign(K, 0.0);
  double total = 0.0;
  for (const double v : x) total += v;
  if (!(total > 0.0)) {
    fit.weights.assign(K, 1.0 / static_cast<double>(K));
    fit.warning = "nonnegative least squares returned all zeros; using uniform weights";
    return fit;
  }
  for (std::size_t k = 0; k < K; ++k) {
    fit.weights[k] = x[cls[k]] / total / static_cast<double>(class_size[cls[k]]);
  }
  return fit;
}

ScoreMap fuse(std::span<const JudgeScores> judges, const FusionModel& model,
              std::span<const std::string> ids) {
  std::vector<const JudgeScores*> js;
  for (const auto& name : model.judges) {
    const JudgeScores* j = find_judge(judges, name);
    if (j == nullptr) throw Error(ErrorKind::domain, "no scores for fused judge '" + name + "'");
    js.push_back(j);
  }
  ScoreMap out;
  std::vector<double> w, s;
  for (const auto& id : ids) {
    w.clear();
    s.clear();
    for (std::size_t k = 0; k < js.size(); ++k) {
      const auto it = js[k]->scores.find(id);
      if (it == js[k]->scores.end() || !(model.weights[k] > 0.0)) continue;
      w.push_back(model.weights[k]);
      s.push_back(model.calibrations[k](it->second));
    }
    if (w.empty()) {
      out.missing.push_back(id);
      continue;
    }
    double value = 0.0;
    if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); })) {
      for (const double v : s) value += v;
      value /= static_cast<double>(s.size());
    } else {
      double wsum = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        value += w[k] * s[k];
        wsum += w[k];
      }
      value /= wsum;
    }
    out.values[id] = std::clamp(value, 0.0, 1.0);
  }
  return out;
}

}  // namespace betajudge
