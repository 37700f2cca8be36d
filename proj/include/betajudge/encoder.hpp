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

#ifndef BETAJUDGE_ENCODER_HPP_
#define BETAJUDGE_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace betajudge {

struct EncoderConfig {
  enum class Kind { hashed_ngram, external };

  Kind kind = Kind::hashed_ngram;
  std::string plugin_id;               // Kind::external only
  std::vector<int> word_orders{1, 2, 3};
  int char_order = 4;                  // 0 disables character n-grams
  bool slot_match = true;              // candidate-in-reference indicators
  std::uint32_t hash_dim = 1u << 16;
  std::uint32_t embed_dim = 64;
  std::string separator = "\n###\n";  // slot boundary in assembled text

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Embedding-table rows hit by one text and the pooling weight of each hit.
/// Every feature family is mean-pooled on its own, so a row's weight is
/// 1 / (size of its family); the same row may appear more than once.
struct FeatureBag {
  std::vector<std::uint32_t> rows;
  std::vector<double> weights;

  std::size_t size() const { return rows.size(); }
};

/// Lowercased word tokens: ASCII letters and digits plus any non-ASCII
/// byte; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Splits an assembled input into its slots on `separator`.
std::vector<std::string_view> split_slots(std::string_view text,
                                          std::string_view separator);

FeatureBag featurize(std::string_view text, const EncoderConfig& cfg);

/// Pre-activation of the reference encoder: sum over hits of
/// weight * table[row]. `pre` has embed_dim entries and is overwritten.
void pool_features(const FeatureBag& bag, std::span<const double> table,
                   std::size_t embed_dim, std::span<double> pre);

/// Frozen text encoder supplied by a plugin. Only the head trains on top of
/// it.
class ExternalEncoder {
 public:
  virtual ~ExternalEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual void encode(std::string_view text, std::span<double> out) const = 0;
};

using ExternalEncoderFactory =
    std::function<std::unique_ptr<ExternalEncoder>()>;

void register_external_encoder(const std::string& plugin_id,
                               ExternalEncoderFactory factory);
/// Throws Error(usage) for an unknown plugin id.
std::unique_ptr<ExternalEncoder> make_external_encoder(
    const std::string& plugin_id);

/// Width of the encoder output for `cfg`.
std::size_t representation_dim(const EncoderConfig& cfg);

}  // namespace betajudge

#endif  // BETAJUDGE_ENCODER_HPP_
