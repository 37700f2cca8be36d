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

#include "betajudge/splits.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "betajudge/error.hpp"
#include "betajudge/rng.hpp"

namespace betajudge {
namespace {

struct QuestionGroup {
  std::string question_id;
  std::string modality;
  std::string category;
  std::vector<std::size_t> members;  // instance indices
};

std::vector<QuestionGroup> group_by_question(std::span<const EvalInstance> instances,
                                             std::span<const std::size_t> subset) {
  std::map<std::string, QuestionGroup> groups;
  for (const std::size_t i : subset) {
    const auto& inst = instances[i];
    auto [it, inserted] = groups.try_emplace(inst.question_id);
    if (inserted) {
      it->second.question_id = inst.question_id;
      it->second.modality = std::string(to_string(inst.modality));
      it->second.category = inst.category;
    }
    it->second.members.push_back(i);
  }
  std::vector<QuestionGroup> out;
  out.reserve(groups.size());
  for (auto& [id, g] : groups) out.push_back(std::move(g));
  return out;
}

void assign_pool(std::vector<const QuestionGroup*> pool, const Ratios& ratios, Rng& rng,
                 std::span<const EvalInstance> instances,
                 std::map<std::string, Partition>& assignment) {
  if (pool.empty()) return;
  rng.shuffle(pool);
  const Ratios counts = largest_remainder(pool.size(), ratios);
  std::size_t k = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    for (std::size_t c = 0; c < counts[part]; ++c, ++k) {
      for (const std::size_t i : pool[k]->members) {
        assignment[instances[i].instance_id] = static_cast<Partition>(part);
      }
    }
  }
}

std::map<std::string, Partition> stratified_assign(std::span<const EvalInstance> instances,
                                                   std::span<const std::size_t> subset,
                                                   const Ratios& ratios, Rng& rng) {
  const auto groups = group_by_question(instances, subset);
  std::map<std::pair<std::string, std::string>, std::vector<const QuestionGroup*>> strata;
  for (const auto& g : groups) strata[{g.modality, g.category}].push_back(&g);

  std::map<std::string, Partition> assignment;
  std::map<std::string, std::vector<const QuestionGroup*>> by_modality;
  for (auto& [key, members] : strata) {
    if (members.size() >= kMinStratumGroups) {
      assign_pool(members, ratios, rng, instances, assignment);
    } else {
      auto& pool = by_modality[key.first];
      pool.insert(pool.end(), members.begin(), members.end());
    }
  }
  std::vector<const QuestionGroup*> global;
  for (auto& [modality, pool] : by_modality) {
    if (pool.size() >= kMinStratumGroups) {
      assign_pool(pool, ratios, rng, instances, assignment);
    } else {
      global.insert(global.end(), pool.begin(), pool.end());
    }
  }
  assign_pool(global, ratios, rng, instances, assignment);
  return assignment;
}

std::size_t count_questions(std::span<const EvalInstance> instances) {
  std::set<std::string_view> q;
  for (const auto& inst : instances) q.insert(inst.question_id);
  return q.size();
}

}  // namespace

std::string_view to_string(Scenario s) {
  return s == Scenario::unseen_question ? "unseen_question" : "unseen_lalm";
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::train: return "train";
    case Partition::dev: return "dev";
    case Partition::test: return "test";
  }
  return "train";
}

std::optional<Scenario> parse_scenario(std::string_view s) {
  if (s == "unseen_question" || s == "1") return Scenario::unseen_question;
  if (s == "unseen_lalm" || s == "2") return Scenario::unseen_lalm;
  return std::nullopt;
}

std::optional<Partition> parse_partition(std::string_view s) {
  if (s == "train") return Partition::train;
  if (s == "dev") return Partition::dev;
  if (s == "test") return Partition::test;
  return std::nullopt;
}

std::vector<std::string> SplitManifest::ids(Partition p) const {
  std::vector<std::string> out;
  for (const auto& [id, part] : assignment) {
    if (part == p) out.push_back(id);
  }
  return out;
}

nlohmann::json SplitManifest::to_json() const {
  nlohmann::json assign = nlohmann::json::object();
  for (const auto& [id, part] : assignment) assign[id] = std::string(to_string(part));
  return {{"scenario", std::string(to_string(scenario))},
          {"seed", seed},
          {"ratios", ratios},
          {"held_out_lalms", held_out_lalms},
          {"assignment", assign},
          {"provenance", provenance.to_json()}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  try {
    const auto scenario = parse_scenario(j.at("scenario").get<std::string>());
    if (!scenario) throw Error(ErrorKind::schema, "manifest: unknown scenario");
    m.scenario = *scenario;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ratios = j.at("ratios").get<Ratios>();
    m.held_out_lalms = j.at("held_out_lalms").get<std::vector<std::string>>();
    for (const auto& [id, part] : j.at("assignment").items()) {
      const auto p = parse_partition(part.get<std::string>());
      if (!p) throw Error(ErrorKind::schema, "manifest: unknown partition for '" + id + "'");
      m.assignment.emplace(id, *p);
    }
    if (j.contains("provenance")) m.provenance = Provenance::from_json(j.at("provenance"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("manifest: ") + e.what());
  }
  return m;
}

Ratios largest_remainder(std::size_t n, const Ratios& ratios) {
  const std::size_t total = ratios[0] + ratios[1] + ratios[2];
  if (total == 0) throw Error(ErrorKind::domain, "ratios must not all be zero");
  Ratios counts{};
  std::array<std::size_t, 3> remainder{};  // numerators over `total`
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    counts[k] = n * ratios[k] / total;
    remainder[k] = n * ratios[k] % total;
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k]];
  return counts;
}

SplitManifest stratified_split(std::span<const EvalInstance> instances, std::uint64_t seed) {
  if (count_questions(instances) < 3) {
    throw Error(ErrorKind::domain, "stratified split needs at least 3 question groups");
  }
  std::vector<std::size_t> all(instances.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Rng rng(seed);
  SplitManifest m;
  m.scenario = Scenario::unseen_question;
  m.seed = seed;
  m.assignment = stratified_assign(instances, all, kDefaultRatios, rng);
  return m;
}

SplitManifest lalm_holdout_split(std::span<const EvalInstance> instances,
                                 std::span<const std::string> held_out,
                                 std::uint64_t seed) {
  const std::set<std::string, std::less<>> held(held_out.begin(), held_out.end());
  if (held.empty()) throw Error(ErrorKind::domain, "no held-out LALM given");
  std::set<std::string, std::less<>> present;
  for (const auto& inst : instances) present.insert(inst.lalm_id);
  for (const auto& id : held) {
    if (!present.contains(id)) {
      throw Error(ErrorKind::domain, "held-out LALM '" + id + "' not in corpus");
    }
  }
  std::vector<std::size_t> rest;
  SplitManifest m;
  m.scenario = Scenario::unseen_lalm;
  m.seed = seed;
  m.held_out_lalms.assign(held.begin(), held.end());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (held.contains(instances[i].lalm_id)) {
      m.assignment[instances[i].instance_id] = Partition::test;
    } else {
      rest.push_back(i);
    }
  }
  Rng rng(seed);
  constexpr Ratios kTrainDev{8, 1, 0};
  for (auto& [id, part] : stratified_assign(instances, rest, kTrainDev, rng)) {
    m.assignment[id] = part;
  }
  return m;
}

std::vector<std::vector<std::string>> canonical_holdouts(
    std::span<const EvalInstance> instances, std::uint64_t seed, std::size_t splits,
    std::size_t per_split) {
  std::set<std::string> distinct;
  for (const auto& inst : instances) distinct.insert(inst.lalm_id);
  if (distinct.size() < splits * per_split) {
    throw Error(ErrorKind::domain, "not enough distinct LALMs for the canonical holdouts");
  }
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::vector<std::vector<std::string>> out(splits);
  for (std::size_t s = 0; s < splits; ++s) {
    out[s].assign(ids.begin() + static_cast<std::ptrdiff_t>(s * per_split),
                  ids.begin() + static_cast<std::ptrdiff_t>((s + 1) * per_split));
    std::sort(out[s].begin(), out[s].end());
  }
  return out;
}

}  // namespace betajudge
