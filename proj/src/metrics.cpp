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
#include <map>
#include <numeric>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

void require_aligned(std::span<const double> xs, std::span<const double> ys,
                     std::size_t min_n) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::alignment, "inputs have different lengths");
  }
  if (xs.size() < min_n) {
    throw Error(ErrorKind::undefined,
                "need at least " + std::to_string(min_n) + " points");
  }
}

// Number of tied pairs in a sorted range, counting runs of equal values.
template <typename Eq>
long long tied_pairs(std::size_t n, Eq equal_to_prev) {
  long long total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Merge sort counting swaps (= discordant pairs among untied-in-x items).
long long merge_count(std::vector<double>& v, std::vector<double>& buf,
                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && xs[idx[j]] == xs[idx[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean of i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  require_aligned(xs, ys, 2);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::undefined, "correlation undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  require_aligned(xs, ys, 3);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  require_aligned(xs, ys, 3);
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });

  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const long long n1 = tied_pairs(n, [&](std::size_t i) {
    return xs[idx[i]] == xs[idx[i - 1]];
  });
  const long long n3 = tied_pairs(n, [&](std::size_t i) {
    return xs[idx[i]] == xs[idx[i - 1]] && ys[idx[i]] == ys[idx[i - 1]];
  });

  std::vector<double> y(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = ys[idx[i]];
  const long long swaps = merge_count(y, buf, 0, n);
  const long long n2 = tied_pairs(n, [&](std::size_t i) { return y[i] == y[i - 1]; });

  if (n1 == n0 || n2 == n0) {
    throw Error(ErrorKind::undefined, "kendall tau undefined: one side fully tied");
  }
  // Concordant minus discordant over pairs untied in both.
  const long long s = n0 - n1 - n2 + n3 - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  return std::clamp(static_cast<double>(s) / denom, -1.0, 1.0);
}

double mae(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) {
    throw Error(ErrorKind::alignment, "mae: inputs have different lengths");
  }
  if (preds.empty()) throw Error(ErrorKind::domain, "mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - targets[i]);
  return sum / static_cast<double>(preds.size());
}

Target target_from(const RatingSet& rs) {
  const RatingStats st = sample_stats(rs.normalized);
  return {st.mean, st.variance};
}

MetricReport evaluate_predictions(std::span<const double> scores,
                                  std::span<const std::optional<double>> pred_vars,
                                  std::span<const Target> targets) {
  if (scores.size() != targets.size() ||
      (!pred_vars.empty() && pred_vars.size() != targets.size())) {
    throw Error(ErrorKind::alignment, "predictions and targets are not aligned");
  }
  std::vector<double> means(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) means[i] = targets[i].mean;
  MetricReport r;
  r.n_pairs = scores.size();
  r.spearman = spearman_rho(scores, means);
  r.kendall = kendall_tau(scores, means);
  r.mae_mu = mae(scores, means);
  std::vector<double> pv, tv;
  for (std::size_t i = 0; i < pred_vars.size(); ++i) {
    if (pred_vars[i] && targets[i].variance) {
      pv.push_back(*pred_vars[i]);
      tv.push_back(*targets[i].variance);
    }
  }
  r.n_var_pairs = pv.size();
  if (!pv.empty()) r.mae_var = mae(pv, tv);
  return r;
}

ReliabilityMatrix ReliabilityMatrix::from_records(
    std::span<const AnnotationRecord> records, std::span<const std::string> ids,
    const FilterPolicy& policy) {
  std::map<std::string, std::size_t, std::less<>> unit_of;
  for (std::size_t u = 0; u < ids.size(); ++u) unit_of.emplace(ids[u], u);
  std::map<std::string, std::size_t, std::less<>> rater_of;
  for (const auto& rec : records) {
    if (!counts_as_human_rating(rec, policy) || !unit_of.contains(rec.instance_id)) continue;
    rater_of.emplace(rec.rater_id, rater_of.size());
  }
  ReliabilityMatrix m(rater_of.size(), ids.size());
  for (const auto& rec : records) {
    if (!counts_as_human_rating(rec, policy)) continue;
    const auto u = unit_of.find(rec.instance_id);
    if (u == unit_of.end()) continue;
    m.set(rater_of.at(rec.rater_id), u->second, *rec.raw_rating);
  }
  return m;
}

double krippendorff_alpha(const ReliabilityMatrix& m, MeasurementLevel level) {
  // Pairable values: units with at least two ratings.
  std::vector<std::vector<double>> units;
  for (std::size_t u = 0; u < m.units(); ++u) {
    std::vector<double> vals;
    for (std::size_t r = 0; r < m.raters(); ++r) {
      if (const auto& v = m.at(r, u)) vals.push_back(*v);
    }
    if (vals.size() >= 2) units.push_back(std::move(vals));
  }
  if (units.size() < 2) {
    throw Error(ErrorKind::undefined,
                "krippendorff alpha needs at least 2 units with 2 or more ratings");
  }

  // Value frequencies over pairable values.
  std::map<double, double> freq;
  double n = 0.0;
  for (const auto& vals : units) {
    for (const double v : vals) {
      freq[v] += 1.0;
      n += 1.0;
    }
  }
  std::vector<double> values;
  std::vector<double> counts;
  for (const auto& [v, c] : freq) {
    values.push_back(v);
    counts.push_back(c);
  }
  const std::size_t V = values.size();

  // delta^2 between value indices.
  std::vector<double> delta(V * V, 0.0);
  if (level == MeasurementLevel::interval) {
    for (std::size_t a = 0; a < V; ++a) {
      for (std::size_t b = 0; b < V; ++b) {
        const double d = values[a] - values[b];
        delta[a * V + b] = d * d;
      }
    }
  } else {
    std::vector<double> cum(V + 1, 0.0);
    for (std::size_t a = 0; a < V; ++a) cum[a + 1] = cum[a] + counts[a];
    for (std::size_t a = 0; a < V; ++a) {
      for (std::size_t b = a; b < V; ++b) {
        const double d = (cum[b + 1] - cum[a]) - 0.5 * (counts[a] + counts[b]);
        delta[a * V + b] = delta[b * V + a] = d * d;
      }
    }
  }
  const auto index_of = [&](double v) {
    return static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), v) - values.begin());
  };

  double observed = 0.0;
  for (const auto& vals : units) {
    double within = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const std::size_t a = index_of(vals[i]);
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (i != j) within += delta[a * V + index_of(vals[j])];
      }
    }
    observed += within / static_cast<double>(vals.size() - 1);
  }
  observed /= n;

  double expected = 0.0;
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = 0; b < V; ++b) expected += counts[a] * counts[b] * delta[a * V + b];
  }
  expected /= n * (n - 1.0);

  if (expected == 0.0) {
    throw Error(ErrorKind::undefined,
                "krippendorff alpha undefined: zero expected disagreement");
  }
  return 1.0 - observed / expected;
}

}  // namespace betajudge
