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

#include "betajudge/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <gtest/gtest.h>

#include "betajudge/error.hpp"
#include "betajudge/model.hpp"

namespace betajudge {
namespace {

EncoderConfig words_only() {
  EncoderConfig ec;
  ec.char_order = 0;
  ec.slot_match = false;
  return ec;
}

std::multiset<std::pair<std::uint32_t, double>> as_multiset(const FeatureBag& bag) {
  std::multiset<std::pair<std::uint32_t, double>> out;
  for (std::size_t i = 0; i < bag.size(); ++i) out.emplace(bag.rows[i], bag.weights[i]);
  return out;
}

TEST(Tokenize, LowercasesAndSplits) {
  EXPECT_EQ(tokenize("Hello, World! 42x"),
            (std::vector<std::string>{"hello", "world", "42x"}));
  EXPECT_TRUE(tokenize(" ,.;").empty());
  EXPECT_EQ(tokenize("café au"), (std::vector<std::string>{"café", "au"}));
}

TEST(SplitSlots, KeepsEmptySlots) {
  const auto s = split_slots("a\n###\n\n###\nc", "\n###\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], "a");
  EXPECT_EQ(s[1], "");
  EXPECT_EQ(s[2], "c");
}

TEST(Featurize, FamilyWeightsSumToOne) {
  const EncoderConfig ec;
  const FeatureBag bag = featurize("what is it\n###\nred car\n###\n\n###\n\n###\nred bus", ec);
  double total = 0.0;
  for (const double w : bag.weights) total += w;
  // Word orders 1..3, char grams, match indicators.
  EXPECT_NEAR(total, 5.0, 1e-12);
  for (const auto r : bag.rows) EXPECT_LT(r, ec.hash_dim);
}

TEST(Featurize, MatchFeaturesOnlyWithFiveSlots) {
  EncoderConfig ec = words_only();
  ec.slot_match = true;
  ec.word_orders = {};
  EXPECT_EQ(featurize("red car", ec).size(), 0u);
  const FeatureBag bag = featurize("q\n###\nred car\n###\n\n###\n\n###\nred bus", ec);
  ASSERT_EQ(bag.size(), 2u);
  EXPECT_NE(bag.rows[0], bag.rows[1]);
  EXPECT_DOUBLE_EQ(bag.weights[0], 0.5);
}

TEST(Featurize, SlotAwareHashing) {
  const EncoderConfig ec = words_only();
  const auto a = featurize("red\n###\n", ec);
  const auto b = featurize("\n###\nred", ec);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NE(a.rows[0], b.rows[0]);
}

// Changing word i of a five-word sentence changes exactly the n-grams that
// cover position i: one unigram, two bigrams and three trigrams here.
TEST(Featurize, OneWordChangeTouchesOnlyCoveringNgrams) {
  const EncoderConfig ec = words_only();
  const std::vector<std::string> base{"the", "quick", "brown", "fox", "jumps"};
  for (std::size_t pos = 0; pos < base.size(); ++pos) {
    std::vector<std::string> changed = base;
    changed[pos] = "zebra";
    auto join = [](const std::vector<std::string>& w) {
      std::string s;
      for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
      return s;
    };
    std::size_t covering = 0;
    for (const std::size_t n : {1u, 2u, 3u}) {
      for (std::size_t start = 0; start + n <= base.size(); ++start) {
        if (start <= pos && pos < start + n) ++covering;
      }
    }
    const auto a = as_multiset(featurize(join(base), ec));
    const auto b = as_multiset(featurize(join(changed), ec));
    std::vector<std::pair<std::uint32_t, double>> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    EXPECT_EQ(only_a.size(), covering) << pos;
    EXPECT_EQ(only_b.size(), covering) << pos;
  }
}

TEST(Encode, DeterministicAndEmptyTextIsZero) {
  const ModelParameters p = init_parameters(words_only(), 8, 1);
  const auto a = encode("some text here", p);
  const auto b = encode("some text here", p);
  EXPECT_EQ(a, b);
  const auto e1 = encode("", p);
  const auto e2 = encode("", p);
  EXPECT_EQ(e1, e2);
  for (const double v : e1) EXPECT_EQ(v, std::tanh(0.0));
  ASSERT_EQ(a.size(), p.encoder.embed_dim);
}

TEST(Encode, MatchesManualPooling) {
  EncoderConfig ec;
  ec.hash_dim = 512;
  ec.embed_dim = 6;
  const ModelParameters p = init_parameters(ec, 4, 3);
  const std::string text = "q one\n###\nalpha beta\n###\nr\n###\n\n###\nalpha gamma";
  const FeatureBag bag = featurize(text, ec);
  std::vector<double> pre(ec.embed_dim, 0.0);
  for (std::size_t i = 0; i < bag.size(); ++i) {
    for (std::size_t d = 0; d < ec.embed_dim; ++d) {
      pre[d] += bag.weights[i] * p.embedding[bag.rows[i] * ec.embed_dim + d];
    }
  }
  const auto h = encode(text, p);
  for (std::size_t d = 0; d < ec.embed_dim; ++d) EXPECT_NEAR(h[d], std::tanh(pre[d]), 1e-14);
}

class ConstantEncoder : public ExternalEncoder {
 public:
  std::size_t dim() const override { return 3; }
  void encode(std::string_view text, std::span<double> out) const override {
    out[0] = static_cast<double>(text.size()) / 100.0;
    out[1] = 0.5;
    out[2] = -0.25;
  }
};

TEST(ExternalEncoder, PluginFeedsHead) {
  register_external_encoder("constant-test",
                            [] { return std::make_unique<ConstantEncoder>(); });
  EncoderConfig ec;
  ec.kind = EncoderConfig::Kind::external;
  ec.plugin_id = "constant-test";
  EXPECT_EQ(representation_dim(ec), 3u);
  const ModelParameters p = init_parameters(ec, 5, 2);
  EXPECT_TRUE(p.embedding.empty());
  const auto h = encode("abcd", p);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_DOUBLE_EQ(h[0], 0.04);
  EXPECT_GT(head_forward(h, p).alpha(), 0.0);
}

TEST(ExternalEncoder, UnknownPluginIsUsageError) {
  try {
    make_external_encoder("no-such-plugin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
  }
}

}  // namespace
}  // namespace betajudge
