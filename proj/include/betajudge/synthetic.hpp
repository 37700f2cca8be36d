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

#ifndef BETAJUDGE_SYNTHETIC_HPP_
#define BETAJUDGE_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "betajudge/corpus.hpp"
#include "betajudge/rng.hpp"

namespace betajudge {

/// Corpus whose correctness is the fraction o of candidate words that occur
/// in the reference answer. Each simulated rater emits
/// round(1 + 4 * clip(o + N(0, noise), 0, 1)).
struct SyntheticConfig {
  std::size_t n_instances = 2000;
  std::size_t n_lalms = 15;
  std::size_t responses_per_question = 5;
  std::size_t rater_pool = 37;
  int min_raters = 3;
  int max_raters = 5;
  double rater_noise = 0.1;
  std::vector<std::string> judges;  // each judge rates every instance once
  double judge_noise = 0.2;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<EvalInstance> instances;
  std::vector<AnnotationRecord> records;
  std::map<std::string, double> overlap;  // ground-truth o per instance
};

SyntheticCorpus make_overlap_corpus(const SyntheticConfig& cfg);

int simulated_rating(double overlap, double noise_sd, Rng& rng);

/// Fresh human-style ratings for `ids`: between min_raters and max_raters
/// distinct raters each, at the given noise.
std::vector<AnnotationRecord> simulate_ratings(
    const std::map<std::string, double>& overlap, std::span<const std::string> ids,
    int min_raters, int max_raters, double noise_sd, std::uint64_t seed,
    std::size_t rater_pool = 37);

}  // namespace betajudge

#endif  // BETAJUDGE_SYNTHETIC_HPP_
