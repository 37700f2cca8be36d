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

#include "betajudge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "betajudge/error.hpp"

namespace betajudge::kernels {
namespace {

constexpr std::size_t kNoFailure = std::numeric_limits<std::size_t>::max();

// Everything one instance contributes to a gradient.
struct Backward {
  std::vector<double> pre, h, hidden, dhidden_pre, dpre;
  double nll = 0.0;
  double g_log_alpha = 0.0;
  double g_log_beta = 0.0;

  void resize(const ModelParameters& p) {
    pre.resize(p.input_dim);
    h.resize(p.input_dim);
    hidden.resize(p.hidden);
    dhidden_pre.resize(p.hidden);
    dpre.resize(p.input_dim);
  }
};

bool finite(double x) { return std::isfinite(x); }

// Returns false on a non-finite intermediate.
bool backward_one(const TrainItem& item, const ModelParameters& p, Backward& ws) {
  ws.resize(p);
  represent(item.input, p, ws.pre, ws.h);
  double la = 0.0, lb = 0.0;
  head_apply(ws.h, p, ws.hidden, la, lb);
  if (!finite(la) || !finite(lb) || std::abs(la) > 700.0 || std::abs(lb) > 700.0) {
    return false;
  }
  const NllGrad g = nll_and_grad(item.stats, la, lb);
  if (!finite(g.nll) || !finite(g.g_log_alpha) || !finite(g.g_log_beta)) return false;
  ws.nll = g.nll;
  ws.g_log_alpha = g.g_log_alpha;
  ws.g_log_beta = g.g_log_beta;

  const std::size_t H = p.hidden, D = p.input_dim;
  const double* w2a = p.w2.data();
  const double* w2b = p.w2.data() + H;
  for (std::size_t r = 0; r < H; ++r) {
    const double dz = g.g_log_alpha * w2a[r] + g.g_log_beta * w2b[r];
    const double z = ws.hidden[r];
    ws.dhidden_pre[r] = dz * (1.0 - z * z);
  }
  if (item.input.fixed.empty()) {
    std::fill(ws.dpre.begin(), ws.dpre.end(), 0.0);
    for (std::size_t r = 0; r < H; ++r) {
      const double da = ws.dhidden_pre[r];
      const double* row = p.w1.data() + r * D;
      for (std::size_t d = 0; d < D; ++d) ws.dpre[d] += da * row[d];
    }
    for (std::size_t d = 0; d < D; ++d) ws.dpre[d] *= 1.0 - ws.h[d] * ws.h[d];
  }
  return true;
}

void throw_numerical(std::size_t index) {
  throw Error(ErrorKind::numerical,
              "non-finite value at batch item " + std::to_string(index));
}

// Reduction of the small head blocks, in item order.
void reduce_head_small(std::span<const Backward> slots,
                       std::span<const TrainItem* const> batch, Gradient& out) {
  const std::size_t H = out.b1.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Backward& ws = slots[i];
    out.nll += ws.nll;
    out.ratings += batch[i]->stats.count;
    out.b2[0] += ws.g_log_alpha;
    out.b2[1] += ws.g_log_beta;
    for (std::size_t r = 0; r < H; ++r) {
      out.w2[r] += ws.g_log_alpha * ws.hidden[r];
      out.w2[H + r] += ws.g_log_beta * ws.hidden[r];
      out.b1[r] += ws.dhidden_pre[r];
    }
  }
}

void reduce_w1_row(std::span<const Backward> slots, std::size_t r, std::size_t D,
                   Gradient& out) {
  double* row = out.w1.data() + r * D;
  for (const Backward& ws : slots) {
    const double da = ws.dhidden_pre[r];
    for (std::size_t d = 0; d < D; ++d) row[d] += da * ws.h[d];
  }
}

// Unique embedding rows in first-touch order, each with its (item, feature)
// contributions in traversal order.
struct RowPlan {
  std::vector<std::uint32_t> rows;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> hits;
};

RowPlan plan_rows(std::span<const TrainItem* const> batch) {
  RowPlan plan;
  std::unordered_map<std::uint32_t, std::size_t> where;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const FeatureBag& bag = batch[i]->input.bag;
    for (std::size_t k = 0; k < bag.rows.size(); ++k) {
      auto [it, inserted] = where.emplace(bag.rows[k], plan.rows.size());
      if (inserted) {
        plan.rows.push_back(bag.rows[k]);
        plan.hits.emplace_back();
      }
      plan.hits[it->second].emplace_back(static_cast<std::uint32_t>(i),
                                         static_cast<std::uint32_t>(k));
    }
  }
  return plan;
}

void reduce_embedding_row(const RowPlan& plan, std::size_t u,
                          std::span<const Backward> slots,
                          std::span<const TrainItem* const> batch, std::size_t D,
                          Gradient& out) {
  double* g = out.row_grads.data() + u * D;
  for (const auto& [i, k] : plan.hits[u]) {
    const double w = batch[i]->input.bag.weights[k];
    const auto& dpre = slots[i].dpre;
    for (std::size_t d = 0; d < D; ++d) g[d] += w * dpre[d];
  }
}

}  // namespace

void represent(const EncodedInput& in, const ModelParameters& p,
               std::span<double> pre, std::span<double> h) {
  if (!in.fixed.empty()) {
    std::copy(in.fixed.begin(), in.fixed.end(), h.begin());
    return;
  }
  pool_features(in.bag, p.embedding, p.input_dim, pre);
  for (std::size_t d = 0; d < p.input_dim; ++d) h[d] = std::tanh(pre[d]);
}

void head_apply(std::span<const double> h, const ModelParameters& p,
                std::span<double> hidden, double& log_alpha, double& log_beta) {
  const std::size_t H = p.hidden, D = p.input_dim;
  for (std::size_t r = 0; r < H; ++r) {
    const double* row = p.w1.data() + r * D;
    double a = p.b1[r];
    for (std::size_t d = 0; d < D; ++d) a += row[d] * h[d];
    hidden[r] = std::tanh(a);
  }
  double la = p.b2[0], lb = p.b2[1];
  for (std::size_t r = 0; r < H; ++r) {
    la += p.w2[r] * hidden[r];
    lb += p.w2[H + r] * hidden[r];
  }
  log_alpha = la;
  log_beta = lb;
}

void Gradient::reset(const ModelParameters& p) {
  nll = 0.0;
  ratings = 0.0;
  w1.assign(p.w1.size(), 0.0);
  b1.assign(p.b1.size(), 0.0);
  w2.assign(p.w2.size(), 0.0);
  b2.assign(p.b2.size(), 0.0);
  rows.clear();
  row_grads.clear();
}

namespace serial {

std::vector<BetaParams> predict(std::span<const EncodedInput> inputs,
                                const ModelParameters& p) {
  std::vector<BetaParams> out(inputs.size());
  std::vector<double> pre(p.input_dim), h(p.input_dim), hidden(p.hidden);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    represent(inputs[i], p, pre, h);
    head_apply(h, p, hidden, out[i].log_alpha, out[i].log_beta);
  }
  return out;
}

void gradient(std::span<const TrainItem* const> batch, const ModelParameters& p,
              Gradient& out) {
  out.reset(p);
  std::vector<Backward> slots(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!backward_one(*batch[i], p, slots[i])) throw_numerical(i);
  }
  reduce_head_small(slots, batch, out);
  for (std::size_t r = 0; r < p.hidden; ++r) reduce_w1_row(slots, r, p.input_dim, out);
  const RowPlan plan = plan_rows(batch);
  out.rows = plan.rows;
  out.row_grads.assign(plan.rows.size() * p.input_dim, 0.0);
  for (std::size_t u = 0; u < plan.rows.size(); ++u) {
    reduce_embedding_row(plan, u, slots, batch, p.input_dim, out);
  }
}

double total_nll(std::span<const TrainItem* const> items, const ModelParameters& p) {
  std::vector<double> pre(p.input_dim), h(p.input_dim), hidden(p.hidden);
  double total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    represent(items[i]->input, p, pre, h);
    double la = 0.0, lb = 0.0;
    head_apply(h, p, hidden, la, lb);
    total += nll_and_grad(items[i]->stats, la, lb).nll;
  }
  return total;
}

}  // namespace serial

namespace omp {

std::vector<BetaParams> predict(std::span<const EncodedInput> inputs,
                                const ModelParameters& p) {
  std::vector<BetaParams> out(inputs.size());
  const auto n = static_cast<std::int64_t>(inputs.size());
#pragma omp parallel
  {
    std::vector<double> pre(p.input_dim), h(p.input_dim), hidden(p.hidden);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      represent(inputs[i], p, pre, h);
      head_apply(h, p, hidden, out[i].log_alpha, out[i].log_beta);
    }
  }
  return out;
}

void gradient(std::span<const TrainItem* const> batch, const ModelParameters& p,
              Gradient& out) {
  out.reset(p);
  std::vector<Backward> slots(batch.size());
  const auto n = static_cast<std::int64_t>(batch.size());
  std::size_t first_failure = kNoFailure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    bool ok = false;
    try {
      ok = backward_one(*batch[i], p, slots[i]);
    } catch (...) {
      ok = false;
    }
    if (!ok) {
#pragma omp critical(betajudge_failure)
      first_failure = std::min(first_failure, static_cast<std::size_t>(i));
    }
  }
  if (first_failure != kNoFailure) throw_numerical(first_failure);

  reduce_head_small(slots, batch, out);
  const auto H = static_cast<std::int64_t>(p.hidden);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < H; ++r) {
    reduce_w1_row(slots, static_cast<std::size_t>(r), p.input_dim, out);
  }
  const RowPlan plan = plan_rows(batch);
  out.rows = plan.rows;
  out.row_grads.assign(plan.rows.size() * p.input_dim, 0.0);
  const auto U = static_cast<std::int64_t>(plan.rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t u = 0; u < U; ++u) {
    reduce_embedding_row(plan, static_cast<std::size_t>(u), slots, batch,
                         p.input_dim, out);
  }
}

double total_nll(std::span<const TrainItem* const> items, const ModelParameters& p) {
  std::vector<double> per_item(items.size());
  const auto n = static_cast<std::int64_t>(items.size());
#pragma omp parallel
  {
    std::vector<double> pre(p.input_dim), h(p.input_dim), hidden(p.hidden);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      represent(items[i]->input, p, pre, h);
      double la = 0.0, lb = 0.0;
      head_apply(h, p, hidden, la, lb);
      per_item[i] = nll_and_grad(items[i]->stats, la, lb).nll;
    }
  }
  double total = 0.0;
  for (const double v : per_item) total += v;
  return total;
}

}  // namespace omp
}  // namespace betajudge::kernels
