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

#include "betajudge/provenance.hpp"

#include <cstdio>

#include "betajudge/error.hpp"
#include "betajudge/hash.hpp"

namespace betajudge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::schema: return "schema_error";
    case ErrorKind::corpus: return "corpus_error";
    case ErrorKind::io: return "io_error";
    case ErrorKind::numerical: return "numerical_error";
    case ErrorKind::alignment: return "alignment_error";
    case ErrorKind::undefined: return "undefined_metric";
    case ErrorKind::usage: return "usage_error";
  }
  return "error";
}

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json Provenance::to_json() const {
  return {{"seed", seed}, {"config_hash", config_hash}, {"tool_version", tool_version}};
}

Provenance Provenance::from_json(const nlohmann::json& j) {
  Provenance p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.config_hash = j.at("config_hash").get<std::string>();
  p.tool_version = j.at("tool_version").get<std::string>();
  return p;
}

std::string config_hash(const nlohmann::json& config) {
  return to_hex(fnv1a(config.dump()));
}

}  // namespace betajudge
