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

#ifndef BETAJUDGE_MODEL_HPP_
#define BETAJUDGE_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "betajudge/beta.hpp"
#include "betajudge/corpus.hpp"
#include "betajudge/encoder.hpp"
#include "betajudge/provenance.hpp"

namespace betajudge {

inline constexpr std::string_view kModelVersion = "betajudge-model/1";
inline constexpr std::size_t kDefaultHidden = 128;

/// Trainable state: the hashed embedding table (empty for an external
/// encoder) and a one-hidden-layer tanh MLP emitting (log alpha, log beta).
/// Matrices are row-major.
struct ModelParameters {
  std::string version{kModelVersion};
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  InputLayout layout;
  std::size_t input_dim = 0;  // representation width fed to the head
  std::size_t hidden = kDefaultHidden;
  std::vector<double> embedding;  // hash_dim x input_dim
  std::vector<double> w1;         // hidden x input_dim
  std::vector<double> b1;         // hidden
  std::vector<double> w2;         // 2 x hidden
  std::vector<double> b2;         // 2
  Provenance provenance;
};

/// Fresh parameters. Output bias is (log 2, log 2); both output rows share
/// one small random draw, so an untrained model predicts Beta(a, a) with
/// a = 2 exactly on the zero representation and mean 0.5 everywhere.
ModelParameters init_parameters(const EncoderConfig& ec,
                                std::size_t hidden, std::uint64_t seed,
                                const InputLayout& layout = {});

/// Input to the head for one text: either reference-encoder features or a
/// frozen external representation.
struct EncodedInput {
  FeatureBag bag;
  std::vector<double> fixed;  // non-empty for external encoders
};

/// Builds EncodedInputs for a model, instantiating its external encoder once.
class InputEncoder {
 public:
  explicit InputEncoder(const ModelParameters& params);
  EncodedInput operator()(std::string_view text) const;

 private:
  EncoderConfig cfg_;
  std::unique_ptr<ExternalEncoder> external_;
};

/// Representation vector for `text` (tanh of the pooled embedding rows for
/// the reference encoder).
std::vector<double> encode(std::string_view text, const ModelParameters& params);

/// MLP head on a representation. Throws Error(numerical) on a non-finite
/// result; `context` is included in the message.
BetaParams head_forward(std::span<const double> h, const ModelParameters& params,
                        std::string_view context = {});

struct Prediction {
  std::string instance_id;
  BetaParams params;
  BetaMoments moments;
};

Prediction make_prediction(std::string instance_id, const BetaParams& p);

/// One prediction per instance, in input order.
std::vector<Prediction> predict(std::span<const EvalInstance> instances,
                                const ModelParameters& params,
                                bool parallel = true);

void save_model(std::ostream& out, const ModelParameters& params);
ModelParameters load_model(std::istream& in);
void save_model(const std::string& path, const ModelParameters& params);
ModelParameters load_model(const std::string& path);

}  // namespace betajudge

#endif  // BETAJUDGE_MODEL_HPP_
