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

#include "betajudge/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "betajudge/error.hpp"
#include "betajudge/kernels.hpp"
#include "betajudge/rng.hpp"

namespace betajudge {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'B', 'J', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kHeadInitScale = 0.01;
constexpr double kEmbeddingInitScale = 0.1;

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

json encoder_to_json(const EncoderConfig& ec) {
  return {{"kind", ec.kind == EncoderConfig::Kind::external ? "external" : "hashed_ngram"},
          {"plugin_id", ec.plugin_id},
          {"word_orders", ec.word_orders},
          {"char_order", ec.char_order},
          {"slot_match", ec.slot_match},
          {"hash_dim", ec.hash_dim},
          {"embed_dim", ec.embed_dim},
          {"separator", ec.separator}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig ec;
  ec.kind = j.at("kind").get<std::string>() == "external"
                ? EncoderConfig::Kind::external
                : EncoderConfig::Kind::hashed_ngram;
  ec.plugin_id = j.at("plugin_id").get<std::string>();
  ec.word_orders = j.at("word_orders").get<std::vector<int>>();
  ec.char_order = j.at("char_order").get<int>();
  ec.slot_match = j.at("slot_match").get<bool>();
  ec.hash_dim = j.at("hash_dim").get<std::uint32_t>();
  ec.embed_dim = j.at("embed_dim").get<std::uint32_t>();
  ec.separator = j.at("separator").get<std::string>();
  return ec;
}

json layout_to_json(const InputLayout& l) {
  return {{"separator", l.separator},
          {"include_question", l.include_question},
          {"include_rationale", l.include_rationale},
          {"include_transcript", l.include_transcript}};
}

InputLayout layout_from_json(const json& j) {
  InputLayout l;
  l.separator = j.at("separator").get<std::string>();
  l.include_question = j.at("include_question").get<bool>();
  l.include_rationale = j.at("include_rationale").get<bool>();
  l.include_transcript = j.at("include_transcript").get<bool>();
  return l;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_block(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_block(std::istream& in, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error(ErrorKind::schema, "model file truncated");
}

}  // namespace

ModelParameters init_parameters(const EncoderConfig& ec, std::size_t hidden,
                                std::uint64_t seed, const InputLayout& layout) {
  if (hidden == 0) throw Error(ErrorKind::domain, "hidden width must be positive");
  if (ec.kind == EncoderConfig::Kind::hashed_ngram &&
      (ec.hash_dim == 0 || ec.embed_dim == 0)) {
    throw Error(ErrorKind::domain, "hash_dim and embed_dim must be positive");
  }
  ModelParameters p;
  p.seed = seed;
  p.encoder = ec;
  p.layout = layout;
  p.hidden = hidden;
  p.input_dim = representation_dim(ec);

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  if (ec.kind == EncoderConfig::Kind::hashed_ngram) {
    p.embedding.resize(static_cast<std::size_t>(ec.hash_dim) * p.input_dim);
    for (double& x : p.embedding) x = rng.uniform(-kEmbeddingInitScale, kEmbeddingInitScale);
  }
  p.w1.resize(hidden * p.input_dim);
  for (double& x : p.w1) x = rng.uniform(-kHeadInitScale, kHeadInitScale);
  p.b1.assign(hidden, 0.0);
  p.w2.resize(2 * hidden);
  for (std::size_t r = 0; r < hidden; ++r) {
    p.w2[r] = rng.uniform(-kHeadInitScale, kHeadInitScale);
    p.w2[hidden + r] = p.w2[r];
  }
  p.b2 = {std::log(2.0), std::log(2.0)};
  return p;
}

InputEncoder::InputEncoder(const ModelParameters& params) : cfg_(params.encoder) {
  if (cfg_.kind == EncoderConfig::Kind::external) {
    external_ = make_external_encoder(cfg_.plugin_id);
    if (external_->dim() != params.input_dim) {
      throw Error(ErrorKind::domain, "external encoder width does not match model");
    }
  }
}

EncodedInput InputEncoder::operator()(std::string_view text) const {
  EncodedInput in;
  if (external_) {
    in.fixed.assign(external_->dim(), 0.0);
    external_->encode(text, in.fixed);
  } else {
    in.bag = featurize(text, cfg_);
  }
  return in;
}

std::vector<double> encode(std::string_view text, const ModelParameters& params) {
  const EncodedInput in = InputEncoder(params)(text);
  std::vector<double> pre(params.input_dim), h(params.input_dim);
  kernels::represent(in, params, pre, h);
  return h;
}

BetaParams head_forward(std::span<const double> h, const ModelParameters& params,
                        std::string_view context) {
  if (h.size() != params.input_dim) {
    throw Error(ErrorKind::domain, "representation width does not match model");
  }
  std::vector<double> hidden(params.hidden);
  BetaParams out;
  kernels::head_apply(h, params, hidden, out.log_alpha, out.log_beta);
  const double a = out.alpha(), b = out.beta();
  if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) {
    std::string msg = "non-finite Beta parameters from head";
    if (!context.empty()) msg += " for '" + std::string(context) + "'";
    throw Error(ErrorKind::numerical, msg);
  }
  return out;
}

Prediction make_prediction(std::string instance_id, const BetaParams& p) {
  const double a = p.alpha(), b = p.beta();
  if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) {
    throw Error(ErrorKind::numerical,
                "non-finite Beta parameters for '" + instance_id + "'");
  }
  return {std::move(instance_id), p, moments(a, b)};
}

std::vector<Prediction> predict(std::span<const EvalInstance> instances,
                                const ModelParameters& params, bool parallel) {
  const InputEncoder encoder(params);
  std::vector<EncodedInput> inputs;
  inputs.reserve(instances.size());
  for (const auto& inst : instances) {
    inputs.push_back(encoder(assemble_input(inst, params.layout)));
  }
  const auto raw = parallel ? kernels::omp::predict(inputs, params)
                            : kernels::serial::predict(inputs, params);
  std::vector<Prediction> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out.push_back(make_prediction(instances[i].instance_id, raw[i]));
  }
  return out;
}

void save_model(std::ostream& out, const ModelParameters& p) {
  const json header = {{"version", p.version},
                       {"seed", p.seed},
                       {"encoder", encoder_to_json(p.encoder)},
                       {"layout", layout_to_json(p.layout)},
                       {"input_dim", p.input_dim},
                       {"hidden", p.hidden},
                       {"sizes",
                        {p.embedding.size(), p.w1.size(), p.b1.size(),
                         p.w2.size(), p.b2.size()}},
                       {"provenance", p.provenance.to_json()}};
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_block(out, p.embedding);
  write_block(out, p.w1);
  write_block(out, p.b1);
  write_block(out, p.w2);
  write_block(out, p.b2);
  if (!out) throw Error(ErrorKind::io, "failed writing model");
}

ModelParameters load_model(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::schema, "not a betajudge model file");
  }
  if (read_u32(in) != kFormatVersion) {
    throw Error(ErrorKind::schema, "unsupported model format version");
  }
  const std::uint32_t len = read_u32(in);
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw Error(ErrorKind::schema, "model file truncated");
  ModelParameters p;
  try {
    const json header = json::parse(text);
    p.version = header.at("version").get<std::string>();
    p.seed = header.at("seed").get<std::uint64_t>();
    p.encoder = encoder_from_json(header.at("encoder"));
    p.layout = layout_from_json(header.at("layout"));
    p.input_dim = header.at("input_dim").get<std::size_t>();
    p.hidden = header.at("hidden").get<std::size_t>();
    p.provenance = Provenance::from_json(header.at("provenance"));
    const auto sizes = header.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 5 || sizes[1] != p.hidden * p.input_dim ||
        sizes[2] != p.hidden || sizes[3] != 2 * p.hidden || sizes[4] != 2) {
      throw Error(ErrorKind::schema, "model block sizes inconsistent");
    }
    read_block(in, p.embedding, sizes[0]);
    read_block(in, p.w1, sizes[1]);
    read_block(in, p.b1, sizes[2]);
    read_block(in, p.w2, sizes[3]);
    read_block(in, p.b2, sizes[4]);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("bad model header: ") + e.what());
  }
  return p;
}

void save_model(const std::string& path, const ModelParameters& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  save_model(out, params);
}

ModelParameters load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace betajudge
