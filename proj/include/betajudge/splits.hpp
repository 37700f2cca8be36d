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

#ifndef BETAJUDGE_SPLITS_HPP_
#define BETAJUDGE_SPLITS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "betajudge/corpus.hpp"
#include "betajudge/provenance.hpp"

namespace betajudge {

enum class Scenario { unseen_question, unseen_lalm };
enum class Partition { train, dev, test };

std::string_view to_string(Scenario s);
std::string_view to_string(Partition p);
std::optional<Scenario> parse_scenario(std::string_view s);
std::optional<Partition> parse_partition(std::string_view s);

using Ratios = std::array<std::size_t, 3>;
inline constexpr Ratios kDefaultRatios{8, 1, 1};

/// Minimum number of question groups for a stratum to be split on its own.
inline constexpr std::size_t kMinStratumGroups = 10;

struct SplitManifest {
  Scenario scenario = Scenario::unseen_question;
  std::uint64_t seed = 0;
  Ratios ratios = kDefaultRatios;
  std::vector<std::string> held_out_lalms;
  std::map<std::string, Partition> assignment;
  Provenance provenance;

  std::vector<std::string> ids(Partition p) const;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
};

/// Splits n into parts proportional to ratios: floors first, leftover units
/// to the largest fractional remainders, ties to the earlier part.
Ratios largest_remainder(std::size_t n, const Ratios& ratios);

/// Scenario 1. Question groups move together; groups are shuffled within
/// (modality, category) strata and cut 8:1:1. Strata under
/// kMinStratumGroups groups pool by modality, then globally.
SplitManifest stratified_split(std::span<const EvalInstance> instances,
                               std::uint64_t seed);

/// Scenario 2. Every instance of a held-out LALM goes to test; the rest are
/// split 8:1 by the stratified procedure.
SplitManifest lalm_holdout_split(std::span<const EvalInstance> instances,
                                 std::span<const std::string> held_out,
                                 std::uint64_t seed);

/// The canonical scenario-2 holdouts: `splits` disjoint groups of
/// `per_split` LALMs drawn from the sorted distinct LALM ids with the seed.
std::vector<std::vector<std::string>> canonical_holdouts(
    std::span<const EvalInstance> instances, std::uint64_t seed,
    std::size_t splits = 5, std::size_t per_split = 2);

}  // namespace betajudge

#endif  // BETAJUDGE_SPLITS_HPP_
