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

#ifndef BETAJUDGE_CLI_HPP_
#define BETAJUDGE_CLI_HPP_

#include <ostream>

#include "betajudge/error.hpp"

namespace betajudge::cli {

/// Process exit status for each failure class; 0 is success.
int exit_code(ErrorKind kind);
inline constexpr int kInternalExit = 1;

/// Runs one subcommand. Failures are reported on `err` as a single JSON
/// object {"error": kind, "message": text}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace betajudge::cli

#endif  // BETAJUDGE_CLI_HPP_
