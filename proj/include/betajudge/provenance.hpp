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

#ifndef BETAJUDGE_PROVENANCE_HPP_
#define BETAJUDGE_PROVENANCE_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace betajudge {

inline constexpr std::string_view kToolVersion = "betajudge 1.0.0";

/// Embedded in every artifact the tool writes. No timestamps, so identical
/// runs produce identical bytes.
struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string tool_version{kToolVersion};

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace betajudge

#endif  // BETAJUDGE_PROVENANCE_HPP_
