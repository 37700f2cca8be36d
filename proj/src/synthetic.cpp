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
#include <cmath>
#include <cstdio>
#include <set>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

struct Category {
  Modality modality;
  const char* name;
};

constexpr Category kCategories[] = {
    {Modality::speech, "emotion"},   {Modality::speech, "speaker"},
    {Modality::speech, "content"},   {Modality::sound, "event"},
    {Modality::sound, "counting"},   {Modality::sound, "temporal"},
    {Modality::music, "genre"},      {Modality::music, "instrument"},
    {Modality::mixed, "scene"},
};

std::vector<std::string> make_vocabulary(std::size_t n, Rng& rng) {
  static const char* kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                 "s", "t", "v", "z", "br", "st", "tr", "pl"};
  static const char* kNucleus[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    const std::size_t syllables = 2 + rng.index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnset[rng.index(std::size(kOnset))];
      w += kNucleus[rng.index(std::size(kNucleus))];
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<std::string> draw_words(const std::vector<std::string>& vocab, std::size_t n,
                                    Rng& rng) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng.index(vocab.size())]);
  return out;
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

int simulated_rating(double overlap, double noise_sd, Rng& rng) {
  const double v = std::clamp(overlap + rng.normal(0.0, noise_sd), 0.0, 1.0);
  return static_cast<int>(std::lround(1.0 + 4.0 * v));
}

std::vector<AnnotationRecord> simulate_ratings(
    const std::map<std::string, double>& overlap, std::span<const std::string> ids,
    int min_raters, int max_raters, double noise_sd, std::uint64_t seed,
    std::size_t rater_pool) {
  if (min_raters < 1 || max_raters < min_raters ||
      static_cast<std::size_t>(max_raters) > rater_pool) {
    throw Error(ErrorKind::domain, "invalid rater range");
  }
  Rng rng(seed);
  std::vector<std::string> raters;
  for (std::size_t r = 1; r <= rater_pool; ++r) raters.push_back(numbered("rater", r, 2));
  std::vector<AnnotationRecord> out;
  for (const auto& id : ids) {
    const double o = overlap.at(id);
    const auto n = static_cast<std::size_t>(
        min_raters + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_raters - min_raters + 1))));
    std::vector<std::string> pool = raters;
    rng.shuffle(pool);
    for (std::size_t k = 0; k < n; ++k) {
      AnnotationRecord rec;
      rec.instance_id = id;
      rec.rater_id = pool[k];
      rec.source = RatingSource::human();
      rec.raw_rating = simulated_rating(o, noise_sd, rng);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

SyntheticCorpus make_overlap_corpus(const SyntheticConfig& cfg) {
  if (cfg.responses_per_question == 0 || cfg.responses_per_question > cfg.n_lalms) {
    throw Error(ErrorKind::domain, "responses_per_question must be in [1, n_lalms]");
  }
  Rng rng(cfg.seed);
  const auto vocab = make_vocabulary(1500, rng);
  std::vector<std::string> lalms;
  for (std::size_t l = 1; l <= cfg.n_lalms; ++l) lalms.push_back(numbered("lalm", l, 2));

  SyntheticCorpus out;
  const std::size_t n_questions =
      (cfg.n_instances + cfg.responses_per_question - 1) / cfg.responses_per_question;
  std::size_t next_instance = 1;
  for (std::size_t q = 1; q <= n_questions && out.instances.size() < cfg.n_instances; ++q) {
    const Category& cat = kCategories[rng.index(std::size(kCategories))];
    const std::string question = "what " + join_words(draw_words(vocab, 6, rng)) + "?";
    const std::size_t k = 3 + rng.index(5);
    std::vector<std::string> reference;
    std::set<std::string> ref_set;
    while (reference.size() < k) {
      const auto& w = vocab[rng.index(vocab.size())];
      if (ref_set.insert(w).second) reference.push_back(w);
    }
    auto rationale_words = draw_words(vocab, 10, rng);
    rationale_words.insert(rationale_words.end(), reference.begin(), reference.end());
    const std::string rationale = join_words(rationale_words);
    const std::string transcript =
        cat.modality == Modality::speech ? join_words(draw_words(vocab, 12, rng)) : "";

    std::vector<std::string> responders = lalms;
    rng.shuffle(responders);
    for (std::size_t r = 0; r < cfg.responses_per_question &&
                            out.instances.size() < cfg.n_instances;
         ++r) {
      const auto matched = static_cast<std::size_t>(std::lround(rng.uniform() * k));
      std::vector<std::string> shuffled_ref = reference;
      rng.shuffle(shuffled_ref);
      std::vector<std::string> candidate(shuffled_ref.begin(),
                                         shuffled_ref.begin() + static_cast<std::ptrdiff_t>(matched));
      while (candidate.size() < k) {
        const auto& w = vocab[rng.index(vocab.size())];
        if (!ref_set.contains(w)) candidate.push_back(w);
      }
      rng.shuffle(candidate);

      EvalInstance inst;
      inst.instance_id = numbered("syn", next_instance++, 6);
      inst.question_id = numbered("q", q, 5);
      inst.benchmark = Benchmark::parse(q % 2 == 0 ? "MMAU" : "MMAR");
      inst.modality = cat.modality;
      inst.category = cat.name;
      inst.lalm_id = responders[r];
      inst.question = question;
      inst.reference_answer = join_words(reference);
      inst.rationale = rationale;
      inst.transcript = transcript;
      inst.candidate_answer = join_words(candidate);
      out.overlap[inst.instance_id] = static_cast<double>(matched) / static_cast<double>(k);
      out.instances.push_back(std::move(inst));
    }
  }

  std::vector<std::string> ids;
  for (const auto& inst : out.instances) ids.push_back(inst.instance_id);
  out.records = simulate_ratings(out.overlap, ids, cfg.min_raters, cfg.max_raters,
                                 cfg.rater_noise, cfg.seed + 1, cfg.rater_pool);
  Rng judge_rng(cfg.seed + 2);
  for (const auto& judge : cfg.judges) {
    for (const auto& id : ids) {
      AnnotationRecord rec;
      rec.instance_id = id;
      rec.rater_id = judge;
      rec.source = RatingSource::judge(judge);
      rec.raw_rating = simulated_rating(out.overlap.at(id), cfg.judge_noise, judge_rng);
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace betajudge
