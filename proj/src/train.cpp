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

#include "betajudge/train.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "betajudge/error.hpp"
#include "betajudge/kernels.hpp"
#include "betajudge/rng.hpp"

namespace betajudge {
namespace {

struct Prepared {
  std::vector<kernels::TrainItem> items;
  std::vector<const kernels::TrainItem*> ptrs;
  double ratings = 0.0;
};

Prepared prepare(std::span<const LabeledText> data, const ModelParameters& p) {
  const InputEncoder encoder(p);
  Prepared out;
  out.items.reserve(data.size());
  for (const auto& lt : data) {
    if (lt.ys.empty()) {
      throw Error(ErrorKind::domain, "instance '" + lt.instance_id + "' has no ratings");
    }
    out.items.push_back({encoder(lt.text), BetaSuffStats::from(lt.ys)});
    out.ratings += out.items.back().stats.count;
  }
  for (const auto& it : out.items) out.ptrs.push_back(&it);
  return out;
}

double total_nll(const Prepared& data, const ModelParameters& p, bool parallel) {
  return parallel ? kernels::omp::total_nll(data.ptrs, p)
                  : kernels::serial::total_nll(data.ptrs, p);
}

class Adam {
 public:
  Adam(const ModelParameters& p, const AdamSettings& s, double lr)
      : s_(s), lr_(lr) {
    for (auto* v : {&m_w1_, &v_w1_}) v->assign(p.w1.size(), 0.0);
    for (auto* v : {&m_b1_, &v_b1_}) v->assign(p.b1.size(), 0.0);
    for (auto* v : {&m_w2_, &v_w2_}) v->assign(p.w2.size(), 0.0);
    for (auto* v : {&m_b2_, &v_b2_}) v->assign(p.b2.size(), 0.0);
    for (auto* v : {&m_emb_, &v_emb_}) v->assign(p.embedding.size(), 0.0);
  }

  // Gradients in `g` are sums; `scale` turns them into the batch mean.
  void step(ModelParameters& p, const kernels::Gradient& g, double scale) {
    ++t_;
    bc1_ = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    bc2_ = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    update(p.w1, g.w1, m_w1_, v_w1_, scale);
    update(p.b1, g.b1, m_b1_, v_b1_, scale);
    update(p.w2, g.w2, m_w2_, v_w2_, scale);
    update(p.b2, g.b2, m_b2_, v_b2_, scale);
    const std::size_t D = p.input_dim;
    for (std::size_t u = 0; u < g.rows.size(); ++u) {
      const std::size_t off = static_cast<std::size_t>(g.rows[u]) * D;
      for (std::size_t d = 0; d < D; ++d) {
        apply(p.embedding[off + d], g.row_grads[u * D + d] * scale, m_emb_[off + d],
              v_emb_[off + d]);
      }
    }
  }

 private:
  void apply(double& w, double grad, double& m, double& v) const {
    m = s_.beta1 * m + (1.0 - s_.beta1) * grad;
    v = s_.beta2 * v + (1.0 - s_.beta2) * grad * grad;
    const double mhat = m / bc1_;
    const double vhat = v / bc2_;
    w -= lr_ * mhat / (std::sqrt(vhat) + s_.eps);
  }

  void update(std::vector<double>& w, const std::vector<double>& g,
              std::vector<double>& m, std::vector<double>& v, double scale) const {
    for (std::size_t i = 0; i < w.size(); ++i) apply(w[i], g[i] * scale, m[i], v[i]);
  }

  AdamSettings s_;
  double lr_;
  std::uint64_t t_ = 0;
  double bc1_ = 1.0, bc2_ = 1.0;
  std::vector<double> m_w1_, v_w1_, m_b1_, v_b1_, m_w2_, v_w2_, m_b2_, v_b2_,
      m_emb_, v_emb_;
};

bool all_finite(const kernels::Gradient& g) {
  for (const auto* v : {&g.w1, &g.b1, &g.w2, &g.b2, &g.row_grads}) {
    for (const double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return std::isfinite(g.nll);
}

}  // namespace

std::vector<LabeledText> labeled_texts(const Corpus& corpus,
                                       std::span<const RatingSet> ratings,
                                       const InputLayout& layout) {
  std::vector<LabeledText> out;
  out.reserve(ratings.size());
  for (const auto& rs : ratings) {
    const EvalInstance& inst = corpus.at(rs.instance_id);
    out.push_back({rs.instance_id, assemble_input(inst, layout), rs.normalized});
  }
  return out;
}

TrainResult train(std::span<const LabeledText> train_set,
                  std::span<const LabeledText> dev_set, const TrainConfig& tc,
                  const EncoderConfig& ec, const InputLayout& layout) {
  if (train_set.empty()) throw Error(ErrorKind::domain, "empty training set");
  if (!(tc.learning_rate > 0.0) || tc.batch_size == 0 || tc.max_epochs == 0 ||
      tc.patience == 0) {
    throw Error(ErrorKind::domain, "training configuration values must be positive");
  }

  ModelParameters params;
  if (tc.warm_start) {
    params = *tc.warm_start;
    if (!(params.encoder == ec)) {
      throw Error(ErrorKind::usage, "warm-start model uses a different encoder configuration");
    }
    params.layout = layout;
    params.seed = tc.seed;
  } else {
    params = init_parameters(ec, tc.hidden, tc.seed, layout);
  }

  const Prepared train_data = prepare(train_set, params);
  const Prepared dev_data = prepare(dev_set, params);
  const bool use_dev = !dev_data.items.empty();

  TrainReport report;
  report.train_instances = train_data.items.size();
  report.train_ratings = static_cast<std::size_t>(train_data.ratings);
  report.dev_instances = dev_data.items.size();
  report.dev_ratings = static_cast<std::size_t>(dev_data.ratings);

  const auto evaluate = [&](std::size_t epoch, double train_nll) {
    EpochStats st;
    st.epoch = epoch;
    st.train_nll = train_nll;
    if (use_dev) st.dev_nll = total_nll(dev_data, params, tc.parallel) / dev_data.ratings;
    return st;
  };
  const auto selection = [&](const EpochStats& st) {
    return use_dev ? *st.dev_nll : st.train_nll;
  };

  EpochStats initial =
      evaluate(0, total_nll(train_data, params, tc.parallel) / train_data.ratings);
  report.epochs.push_back(initial);
  ModelParameters best = params;
  report.best_epoch = 0;
  report.best_nll = selection(initial);

  Adam adam(params, tc.adam, tc.learning_rate);
  Rng rng(tc.seed);
  std::vector<std::size_t> order(train_data.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  kernels::Gradient grad;
  std::vector<const kernels::TrainItem*> batch;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_nll = 0.0;
    std::size_t b = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_data.ptrs[order[k]]);
      try {
        if (tc.parallel) {
          kernels::omp::gradient(batch, params, grad);
        } else {
          kernels::serial::gradient(batch, params, grad);
        }
      } catch (const Error& e) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << b << ": " << e.what();
        throw Error(ErrorKind::numerical, msg.str());
      }
      if (!all_finite(grad)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << b
            << ": non-finite loss or gradient";
        throw Error(ErrorKind::numerical, msg.str());
      }
      epoch_nll += grad.nll;
      adam.step(params, grad, 1.0 / grad.ratings);
    }

    const double train_nll =
        use_dev ? epoch_nll / train_data.ratings
                : total_nll(train_data, params, tc.parallel) / train_data.ratings;
    EpochStats st = evaluate(epoch, train_nll);
    if (!std::isfinite(selection(st))) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << ": non-finite NLL";
      throw Error(ErrorKind::numerical, msg.str());
    }
    report.epochs.push_back(st);
    if (selection(st) < report.best_nll) {
      report.best_nll = selection(st);
      report.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      report.early_stopped = true;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

double mean_nll(const ModelParameters& params, std::span<const LabeledText> data,
                bool parallel) {
  const Prepared prepared = prepare(data, params);
  if (prepared.items.empty()) throw Error(ErrorKind::domain, "empty evaluation set");
  return total_nll(prepared, params, parallel) / prepared.ratings;
}

}  // namespace betajudge
