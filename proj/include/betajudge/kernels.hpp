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

#ifndef BETAJUDGE_KERNELS_HPP_
#define BETAJUDGE_KERNELS_HPP_

// Per-instance forward/backward kernels. `serial` is the reference; `omp`
// evaluates instances in parallel into per-instance slots and reduces them in
// the same fixed order, so both produce bitwise identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "betajudge/beta.hpp"
#include "betajudge/model.hpp"

namespace betajudge::kernels {

/// Fills the head input `h` (and the pre-activation `pre` for the reference
/// encoder; `pre` may be empty for external inputs).
void represent(const EncodedInput& in, const ModelParameters& p,
               std::span<double> pre, std::span<double> h);

/// Head forward pass keeping the hidden activations.
void head_apply(std::span<const double> h, const ModelParameters& p,
                std::span<double> hidden, double& log_alpha, double& log_beta);

struct TrainItem {
  EncodedInput input;
  BetaSuffStats stats;
};

/// Summed gradient of the NLL over a batch. Embedding gradients are sparse:
/// `rows` lists touched rows in first-touch order and `row_grads` holds one
/// input_dim block per entry.
struct Gradient {
  double nll = 0.0;
  double ratings = 0.0;
  std::vector<double> w1, b1, w2, b2;
  std::vector<std::uint32_t> rows;
  std::vector<double> row_grads;

  void reset(const ModelParameters& p);
};

namespace serial {
std::vector<BetaParams> predict(std::span<const EncodedInput> inputs,
                                const ModelParameters& p);
void gradient(std::span<const TrainItem* const> batch, const ModelParameters& p,
              Gradient& out);
double total_nll(std::span<const TrainItem* const> items, const ModelParameters& p);
}  // namespace serial

namespace omp {
std::vector<BetaParams> predict(std::span<const EncodedInput> inputs,
                                const ModelParameters& p);
void gradient(std::span<const TrainItem* const> batch, const ModelParameters& p,
              Gradient& out);
double total_nll(std::span<const TrainItem* const> items, const ModelParameters& p);
}  // namespace omp

}  // namespace betajudge::kernels

#endif  // BETAJUDGE_KERNELS_HPP_
