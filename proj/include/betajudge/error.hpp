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

#ifndef BETAJUDGE_ERROR_HPP_
#define BETAJUDGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace betajudge {

enum class ErrorKind {
  domain,     // argument outside the operation's domain
  schema,     // malformed record
  corpus,     // corpus-level inconsistency (duplicates, dangling ids)
  io,         // unreadable / unwritable file
  numerical,  // non-finite value during computation
  alignment,  // mismatched id sets between two inputs
  undefined,  // statistic undefined for the given input
  usage,      // bad command-line or configuration
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace betajudge

#endif  // BETAJUDGE_ERROR_HPP_
