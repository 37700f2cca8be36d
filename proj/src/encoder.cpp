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
#include <map>
#include <mutex>
#include <set>
#include <utility>

#include "betajudge/error.hpp"
#include "betajudge/hash.hpp"

namespace betajudge {
namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

std::uint32_t row_of(std::string_view key, std::uint32_t hash_dim) {
  return static_cast<std::uint32_t>(fnv1a(key) % hash_dim);
}

class FamilyBuilder {
 public:
  explicit FamilyBuilder(std::uint32_t hash_dim) : hash_dim_(hash_dim) {}

  void add(std::string_view key) { rows_.push_back(row_of(key, hash_dim_)); }

  void flush_into(FeatureBag& bag) {
    if (rows_.empty()) return;
    const double w = 1.0 / static_cast<double>(rows_.size());
    for (const auto r : rows_) {
      bag.rows.push_back(r);
      bag.weights.push_back(w);
    }
    rows_.clear();
  }

 private:
  std::uint32_t hash_dim_;
  std::vector<std::uint32_t> rows_;
};

struct Registry {
  std::mutex mu;
  std::map<std::string, ExternalEncoderFactory> factories;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string_view> split_slots(std::string_view text,
                                          std::string_view separator) {
  std::vector<std::string_view> slots;
  if (separator.empty()) {
    slots.push_back(text);
    return slots;
  }
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(separator, start);
    if (pos == std::string_view::npos) {
      slots.push_back(text.substr(start));
      return slots;
    }
    slots.push_back(text.substr(start, pos - start));
    start = pos + separator.size();
  }
}

FeatureBag featurize(std::string_view text, const EncoderConfig& cfg) {
  if (cfg.hash_dim == 0) throw Error(ErrorKind::domain, "hash_dim must be positive");
  FeatureBag bag;
  const auto slots = split_slots(text, cfg.separator);
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(slots.size());
  for (const auto slot : slots) tokens.push_back(tokenize(slot));

  FamilyBuilder family(cfg.hash_dim);
  std::string key;
  for (const int n : cfg.word_orders) {
    if (n <= 0) continue;
    for (std::size_t s = 0; s < tokens.size(); ++s) {
      const auto& toks = tokens[s];
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        key = "w" + std::to_string(n) + "|" + std::to_string(s) + "|";
        for (int k = 0; k < n; ++k) {
          if (k > 0) key.push_back(' ');
          key += toks[i + k];
        }
        family.add(key);
      }
    }
    family.flush_into(bag);
  }

  if (cfg.char_order > 0) {
    const auto n = static_cast<std::size_t>(cfg.char_order);
    for (std::size_t s = 0; s < tokens.size(); ++s) {
      const std::string prefix = "c|" + std::to_string(s) + "|";
      for (const auto& tok : tokens[s]) {
        const std::string padded = "<" + tok + ">";
        if (padded.size() <= n) {
          family.add(prefix + padded);
          continue;
        }
        for (std::size_t i = 0; i + n <= padded.size(); ++i) {
          family.add(prefix + padded.substr(i, n));
        }
      }
    }
    family.flush_into(bag);
  }

  if (cfg.slot_match && tokens.size() == 5) {
    const auto& ref = tokens[1];
    const std::set<std::string_view> ref_set(ref.begin(), ref.end());
    for (const auto& tok : tokens[4]) {
      family.add(ref_set.contains(tok) ? "m|1" : "m|0");
    }
    family.flush_into(bag);
  }
  return bag;
}

void pool_features(const FeatureBag& bag, std::span<const double> table,
                   std::size_t embed_dim, std::span<double> pre) {
  std::fill(pre.begin(), pre.end(), 0.0);
  for (std::size_t k = 0; k < bag.rows.size(); ++k) {
    const double w = bag.weights[k];
    const double* row = table.data() + static_cast<std::size_t>(bag.rows[k]) * embed_dim;
    for (std::size_t d = 0; d < embed_dim; ++d) pre[d] += w * row[d];
  }
}

void register_external_encoder(const std::string& plugin_id,
                               ExternalEncoderFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[plugin_id] = std::move(factory);
}

std::unique_ptr<ExternalEncoder> make_external_encoder(
    const std::string& plugin_id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  const auto it = r.factories.find(plugin_id);
  if (it == r.factories.end()) {
    throw Error(ErrorKind::usage, "no external encoder registered as '" + plugin_id + "'");
  }
  return it->second();
}

std::size_t representation_dim(const EncoderConfig& cfg) {
  if (cfg.kind == EncoderConfig::Kind::external) {
    return make_external_encoder(cfg.plugin_id)->dim();
  }
  return cfg.embed_dim;
}

}  // namespace betajudge
