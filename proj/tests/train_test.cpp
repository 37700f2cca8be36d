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

#include <random>

#include <gtest/gtest.h>

#include "betajudge/error.hpp"
#include "oracles.hpp"

namespace betajudge {
namespace {

EncoderConfig small_encoder() {
  EncoderConfig ec;
  ec.hash_dim = 256;
  ec.embed_dim = 8;
  return ec;
}

LabeledText single_instance(std::size_t n, double a, double b, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  LabeledText lt{"only", "q\n###\nref\n###\n\n###\n\n###\ncand", {}};
  for (std::size_t i = 0; i < n; ++i) {
    lt.ys.push_back(std::clamp(oracle::beta_draw(gen, a, b), 0.001, 0.999));
  }
  return lt;
}

TrainConfig single_instance_config() {
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.max_epochs = 400;
  tc.patience = 400;
  tc.hidden = 8;
  return tc;
}

TEST(Train, SingleInstanceMatchesOracleFit) {
  const std::vector<LabeledText> data{single_instance(200, 5.0, 2.0, 1)};
  const TrainResult r = train(data, {}, single_instance_config(), small_encoder());
  const BetaParams oracle_fit = fit_single_instance(data[0].ys);
  const auto pred = predict(std::vector<EvalInstance>{}, r.params);
  EXPECT_TRUE(pred.empty());
  const BetaParams learned = head_forward(encode(data[0].text, r.params), r.params);
  EXPECT_NEAR(moments(learned).mean, 5.0 / 7.0, 0.05);
  const double trained_nll = mean_nll(r.params, data);
  const double oracle_nll = oracle::beta_nll(data[0].ys, oracle_fit.alpha(), oracle_fit.beta()) /
                            static_cast<double>(data[0].ys.size());
  EXPECT_NEAR(trained_nll, oracle_nll, 1e-2);
  EXPECT_GE(trained_nll, oracle_nll - 1e-6);
}

TEST(Train, ReportTracksEpochsAndBest) {
  const std::vector<LabeledText> data{single_instance(50, 2.0, 3.0, 2)};
  TrainConfig tc = single_instance_config();
  tc.max_epochs = 20;
  const TrainResult r = train(data, data, tc, small_encoder());
  ASSERT_EQ(r.report.epochs.size(), 21u);
  EXPECT_EQ(r.report.epochs[0].epoch, 0u);
  ASSERT_TRUE(r.report.epochs[0].dev_nll);
  double best = r.report.epochs[0].dev_nll.value();
  for (const auto& e : r.report.epochs) best = std::min(best, *e.dev_nll);
  EXPECT_EQ(r.report.best_nll, best);
  EXPECT_EQ(*r.report.epochs[r.report.best_epoch].dev_nll, best);
  EXPECT_EQ(r.report.train_ratings, 50u);
  EXPECT_NEAR(mean_nll(r.params, data), best, 1e-12);
}

TEST(Train, SameSeedSameParameters) {
  std::vector<LabeledText> data;
  for (int i = 0; i < 12; ++i) {
    LabeledText lt = single_instance(4, 1.0 + i, 2.0, static_cast<std::uint64_t>(i));
    lt.instance_id = "i" + std::to_string(i);
    lt.text = "q\n###\nref words\n###\n\n###\n\n###\nword" + std::to_string(i);
    data.push_back(lt);
  }
  TrainConfig tc;
  tc.max_epochs = 5;
  tc.batch_size = 5;
  tc.hidden = 8;
  tc.seed = 3;
  const auto a = train(data, {}, tc, small_encoder());
  const auto b = train(data, {}, tc, small_encoder());
  tc.parallel = false;
  const auto c = train(data, {}, tc, small_encoder());
  EXPECT_EQ(a.params.w1, b.params.w1);
  EXPECT_EQ(a.params.embedding, b.params.embedding);
  EXPECT_EQ(a.params.w1, c.params.w1);
  EXPECT_EQ(a.params.embedding, c.params.embedding);
  EXPECT_EQ(a.params.b2, c.params.b2);
}

TEST(Train, WarmStartMustMatchEncoder) {
  const std::vector<LabeledText> data{single_instance(5, 2.0, 2.0, 4)};
  TrainConfig tc;
  tc.max_epochs = 1;
  tc.hidden = 8;
  tc.warm_start = init_parameters(small_encoder(), 8, 1);
  EncoderConfig other = small_encoder();
  other.embed_dim = 4;
  try {
    train(data, {}, tc, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
  }
}

TEST(Train, WarmStartContinuesFromGivenParameters) {
  const std::vector<LabeledText> data{single_instance(100, 6.0, 2.0, 5)};
  TrainConfig tc = single_instance_config();
  const TrainResult first = train(data, {}, tc, small_encoder());
  tc.warm_start = first.params;
  tc.max_epochs = 1;
  const TrainResult second = train(data, {}, tc, small_encoder());
  EXPECT_EQ(second.report.epochs[0].train_nll, mean_nll(first.params, data));
  EXPECT_LE(second.report.best_nll, second.report.epochs[0].train_nll);
}

TEST(Train, RejectsEmptyTrainingSet) {
  EXPECT_THROW(train({}, {}, TrainConfig{}, small_encoder()), Error);
}

}  // namespace
}  // namespace betajudge
