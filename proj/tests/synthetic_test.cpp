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

#include "betajudge/synthetic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

std::set<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n_instances = 200;
  cfg.seed = seed;
  return cfg;
}

TEST(Synthetic, SameSeedSameCorpus) {
  const auto a = make_overlap_corpus(small_config(4));
  const auto b = make_overlap_corpus(small_config(4));
  EXPECT_EQ(a.instances, b.instances);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.overlap, b.overlap);
  const auto c = make_overlap_corpus(small_config(5));
  EXPECT_NE(a.instances, c.instances);
}

TEST(Synthetic, OverlapIsFractionOfReferenceWords) {
  const auto corpus = make_overlap_corpus(small_config(1));
  ASSERT_EQ(corpus.instances.size(), 200u);
  for (const auto& inst : corpus.instances) {
    const auto ref = words_of(inst.reference_answer);
    std::istringstream in(inst.candidate_answer);
    std::size_t total = 0, hits = 0;
    for (std::string w; in >> w; ++total) hits += ref.contains(w) ? 1 : 0;
    ASSERT_EQ(total, ref.size()) << inst.instance_id;
    EXPECT_GE(ref.size(), 3u);
    EXPECT_LE(ref.size(), 7u);
    EXPECT_DOUBLE_EQ(corpus.overlap.at(inst.instance_id),
                     static_cast<double>(hits) / static_cast<double>(total));
  }
}

TEST(Synthetic, QuestionStructure) {
  const auto corpus = make_overlap_corpus(small_config(2));
  std::map<std::string, std::vector<const EvalInstance*>> by_q;
  for (const auto& inst : corpus.instances) by_q[inst.question_id].push_back(&inst);
  EXPECT_EQ(by_q.size(), 40u);
  for (const auto& [q, group] : by_q) {
    std::set<std::string> lalms;
    for (const auto* inst : group) {
      lalms.insert(inst->lalm_id);
      EXPECT_EQ(inst->reference_answer, group.front()->reference_answer);
      EXPECT_EQ(inst->transcript.empty(), inst->modality != Modality::speech);
    }
    EXPECT_EQ(lalms.size(), group.size()) << q;
  }
}

TEST(Synthetic, HumanRatingsWithinRangeAndDistinctRaters) {
  const auto corpus = make_overlap_corpus(small_config(3));
  std::map<std::string, std::set<std::string>> raters;
  std::size_t n = 0;
  for (const auto& rec : corpus.records) {
    ASSERT_FALSE(rec.source.is_judge);
    ASSERT_TRUE(rec.raw_rating.has_value());
    EXPECT_GE(*rec.raw_rating, 1);
    EXPECT_LE(*rec.raw_rating, 5);
    EXPECT_TRUE(raters[rec.instance_id].insert(rec.rater_id).second);
    ++n;
  }
  EXPECT_EQ(raters.size(), corpus.instances.size());
  for (const auto& [id, set] : raters) {
    EXPECT_GE(set.size(), 3u);
    EXPECT_LE(set.size(), 5u);
  }
  EXPECT_GT(n, 0u);
}

TEST(Synthetic, JudgeRecordsOnePerInstance) {
  auto cfg = small_config(6);
  cfg.judges = {"j1", "j2"};
  const auto corpus = make_overlap_corpus(cfg);
  std::map<std::string, std::size_t> per_judge;
  for (const auto& rec : corpus.records) {
    if (!rec.source.is_judge) continue;
    EXPECT_EQ(rec.rater_id, rec.source.judge_id);
    ++per_judge[rec.source.judge_id];
  }
  EXPECT_EQ(per_judge.at("j1"), corpus.instances.size());
  EXPECT_EQ(per_judge.at("j2"), corpus.instances.size());
  // Human ratings are unaffected by adding judges.
  const auto plain = make_overlap_corpus(small_config(6));
  std::vector<AnnotationRecord> humans;
  for (const auto& rec : corpus.records) {
    if (!rec.source.is_judge) humans.push_back(rec);
  }
  EXPECT_EQ(humans, plain.records);
}

TEST(SimulatedRating, NoiselessMapsOverlapLinearly) {
  Rng rng(0);
  EXPECT_EQ(simulated_rating(0.0, 0.0, rng), 1);
  EXPECT_EQ(simulated_rating(0.5, 0.0, rng), 3);
  EXPECT_EQ(simulated_rating(1.0, 0.0, rng), 5);
  EXPECT_EQ(simulated_rating(0.25, 0.0, rng), 2);
}

TEST(SimulateRatings, RejectsBadRaterRange) {
  const std::map<std::string, double> overlap{{"a", 0.5}};
  const std::vector<std::string> ids{"a"};
  EXPECT_THROW(simulate_ratings(overlap, ids, 0, 3, 0.1, 1), Error);
  EXPECT_THROW(simulate_ratings(overlap, ids, 4, 3, 0.1, 1), Error);
  EXPECT_THROW(simulate_ratings(overlap, ids, 3, 5, 0.1, 1, 4), Error);
}

}  // namespace
}  // namespace betajudge
