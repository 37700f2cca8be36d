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

#ifndef BETAJUDGE_TRAIN_HPP_
#define BETAJUDGE_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betajudge/corpus.hpp"
#include "betajudge/encoder.hpp"
#include "betajudge/model.hpp"

namespace betajudge {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t hidden = kDefaultHidden;
  std::optional<ModelParameters> warm_start;
  AdamSettings adam;
  bool parallel = true;
};

/// Assembled input text with the normalized ratings attached to it.
struct LabeledText {
  std::string instance_id;
  std::string text;
  std::vector<double> ys;
};

/// Pairs instances with rating sets by id, assembling text with `layout`.
/// Rating sets whose id is not in `corpus` raise Error(corpus).
std::vector<LabeledText> labeled_texts(const Corpus& corpus,
                                       std::span<const RatingSet> ratings,
                                       const InputLayout& layout);

struct EpochStats {
  std::size_t epoch = 0;  // 0 = parameters before any update
  double train_nll = 0.0;  // mean per rating
  std::optional<double> dev_nll;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_nll = 0.0;  // dev NLL, or train NLL when dev is empty
  bool early_stopped = false;
  std::size_t train_instances = 0;
  std::size_t train_ratings = 0;
  std::size_t dev_instances = 0;
  std::size_t dev_ratings = 0;
};

struct TrainResult {
  ModelParameters params;
  TrainReport report;
};

/// Maximum likelihood training over individual ratings: every rating of
/// every training instance is one Beta log-density term. Returns the
/// parameters of the best epoch by dev NLL (train NLL if dev is empty).
/// Deterministic for a fixed seed.
TrainResult train(std::span<const LabeledText> train_set,
                  std::span<const LabeledText> dev_set, const TrainConfig& tc,
                  const EncoderConfig& ec, const InputLayout& layout = {});

/// Mean per-rating NLL of `data` under `params`.
double mean_nll(const ModelParameters& params, std::span<const LabeledText> data,
                bool parallel = true);

}  // namespace betajudge

#endif  // BETAJUDGE_TRAIN_HPP_
