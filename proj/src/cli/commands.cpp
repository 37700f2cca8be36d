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

#include "betajudge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betajudge/corpus.hpp"
#include "betajudge/fusion.hpp"
#include "betajudge/metrics.hpp"
#include "betajudge/model.hpp"
#include "betajudge/postprocess.hpp"
#include "betajudge/provenance.hpp"
#include "betajudge/splits.hpp"
#include "betajudge/synthetic.hpp"
#include "betajudge/train.hpp"

namespace betajudge::cli {
namespace {

using nlohmann::json;

// Raw command-line values; absent means "take the config file or default".
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> instances, annotations, judges, manifest, partition, model,
      predictions, clamp, fusion, out, report, warm_start, out_instances, out_annotations;
  std::optional<std::string> scenario, rating_source, level;
  std::optional<std::vector<std::string>> holdout, judge_ids, exclude_judges;
  std::optional<std::uint32_t> hash_dim, embed_dim;
  std::optional<std::size_t> holdout_split, batch_size, epochs, patience, hidden,
      n_instances;
  std::optional<int> min_ratings;
  std::optional<double> learning_rate, margin, rater_noise, judge_noise;
  bool no_question = false, no_rationale = false, with_transcript = false, no_filter = false,
       serial = false;
};

// Flag value, else config-file value, else default.
class Resolver {
 public:
  explicit Resolver(json file) : file_(std::move(file)) {}

  template <class T>
  T get(const std::optional<T>& flag, const char* key, T fallback) const {
    if (flag) return *flag;
    if (file_.contains(key)) {
      try {
        return file_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::usage, std::string("config key '") + key + "': " + e.what());
      }
    }
    return fallback;
  }

  template <class T>
  std::optional<T> get_opt(const std::optional<T>& flag, const char* key) const {
    if (flag) return flag;
    if (file_.contains(key)) return get<T>(std::nullopt, key, T{});
    return std::nullopt;
  }

  bool get_switch(bool flag, const char* key, bool fallback) const {
    if (flag) return !fallback;
    return get<bool>(std::nullopt, key, fallback);
  }

  std::string path(const std::optional<std::string>& flag, const char* key) const {
    auto v = get_opt(flag, key);
    if (!v || v->empty()) throw Error(ErrorKind::usage, std::string("missing --") + key);
    return *v;
  }

 private:
  json file_;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, path + ": " + e.what());
  }
}

// Writes `content` to a sibling temporary file, then renames it into place, so
// a failed command never leaves a partial artifact.
void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    f << content;
    if (!f.flush()) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot write '" + path + "': " + ec.message());
}

ParsedRecords read_records(const std::string& path, RecordKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  ParsedRecords parsed = parse_records(in, kind);
  if (!parsed.errors.empty()) {
    std::ostringstream msg;
    msg << path << ": " << parsed.errors.size() << " malformed line(s); first at line "
        << parsed.errors.front().line << ": " << parsed.errors.front().message;
    throw Error(ErrorKind::schema, msg.str());
  }
  return parsed;
}

Corpus read_corpus(const std::string& instances, const std::optional<std::string>& annotations,
                   std::ostream& err) {
  ParsedRecords inst = read_records(instances, RecordKind::instance);
  std::vector<AnnotationRecord> records;
  for (const auto& w : inst.warnings) err << "warning: " << instances << ": " << w << "\n";
  if (annotations) {
    ParsedRecords ann = read_records(*annotations, RecordKind::annotation);
    for (const auto& w : ann.warnings) err << "warning: " << *annotations << ": " << w << "\n";
    records = std::move(ann.records);
  }
  return Corpus(std::move(inst.instances), std::move(records));
}

SplitManifest read_manifest(const std::string& path) {
  return SplitManifest::from_json(read_json_file(path));
}

Partition partition_or(const Resolver& r, const Flags& f, Partition fallback) {
  const auto name = r.get_opt(f.partition, "partition");
  if (!name) return fallback;
  const auto p = parse_partition(*name);
  if (!p) throw Error(ErrorKind::usage, "unknown partition '" + *name + "'");
  return *p;
}

std::vector<std::string> all_ids(const Corpus& corpus) {
  std::vector<std::string> ids;
  for (const auto& inst : corpus.instances()) ids.push_back(inst.instance_id);
  return ids;
}

// Ids of the selected partition in corpus order, or every id without a
// manifest. Manifest ids unknown to the corpus are an alignment error.
std::vector<std::string> scope_ids(const Corpus& corpus, const std::optional<SplitManifest>& m,
                                   Partition p) {
  if (!m) return all_ids(corpus);
  for (const auto& [id, part] : m->assignment) {
    if (!corpus.find(id)) {
      throw Error(ErrorKind::alignment, "manifest names unknown instance '" + id + "'");
    }
  }
  std::vector<std::string> ids;
  for (const auto& inst : corpus.instances()) {
    const auto it = m->assignment.find(inst.instance_id);
    if (it != m->assignment.end() && it->second == p) ids.push_back(inst.instance_id);
  }
  return ids;
}

std::vector<std::string> intersect_ordered(const std::vector<std::string>& ordered,
                                           const std::vector<std::string>& keep) {
  const std::set<std::string> k(keep.begin(), keep.end());
  std::vector<std::string> out;
  for (const auto& id : ordered) {
    if (k.contains(id)) out.push_back(id);
  }
  return out;
}

FilterPolicy filter_policy(const Resolver& r, const Flags& f) {
  FilterPolicy p = r.get_switch(f.no_filter, "filter", true) ? FilterPolicy::standard()
                                                            : FilterPolicy::none();
  p.min_ratings = r.get(f.min_ratings, "min_ratings", p.min_ratings);
  return p;
}

json policy_json(const FilterPolicy& p) {
  return {{"exclude", p.exclude_codes.letters()},
          {"question_level", p.question_level},
          {"min_ratings", p.min_ratings},
          {"drop", p.drop_rating_codes.letters()}};
}

json report_json(const FilterReport& r) {
  json codes = json::object();
  for (const auto& [c, n] : r.records_per_code) codes[std::string(1, c)] = n;
  return {{"records_per_code", codes},
          {"flagged_instances", r.flagged_instances},
          {"propagated_instances", r.propagated_instances},
          {"below_min_ratings", r.below_min_ratings},
          {"dropped_ratings", r.dropped_ratings}};
}

InputLayout input_layout(const Resolver& r, const Flags& f) {
  InputLayout l;
  l.include_question = r.get_switch(f.no_question, "include_question", true);
  l.include_rationale = r.get_switch(f.no_rationale, "include_rationale", true);
  l.include_transcript = r.get_switch(f.with_transcript, "include_transcript", false);
  return l;
}

json layout_json(const InputLayout& l) {
  return {{"question", l.include_question},
          {"rationale", l.include_rationale},
          {"transcript", l.include_transcript}};
}

SourceSelect rating_source(const Resolver& r, const Flags& f) {
  const auto s = r.get<std::string>(f.rating_source, "rating_source", "human");
  if (s == "human") return SourceSelect::human;
  if (s == "judge") return SourceSelect::judge;
  if (s == "all") return SourceSelect::all;
  throw Error(ErrorKind::usage, "unknown rating source '" + s + "'");
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

// ---- predictions files ----

struct PredictionRow {
  std::string instance_id;
  std::optional<double> alpha, beta;
  double mu = 0.0;
  std::optional<double> variance;
  std::optional<double> score;
};

struct PredictionFile {
  std::optional<Provenance> provenance;
  std::vector<PredictionRow> rows;
};

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

PredictionFile read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  PredictionFile out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("provenance") && !j.contains("instance_id")) {
        out.provenance = Provenance::from_json(j.at("provenance"));
        continue;
      }
      PredictionRow row;
      row.instance_id = j.at("instance_id").get<std::string>();
      row.alpha = opt_number(j, "alpha");
      row.beta = opt_number(j, "beta");
      row.variance = opt_number(j, "variance");
      row.score = opt_number(j, "score");
      const auto mu = opt_number(j, "mu");
      if (!mu && !row.score) throw Error(ErrorKind::schema, "record has neither mu nor score");
      row.mu = mu ? *mu : *row.score;
      if (!seen.insert(row.instance_id).second) {
        throw Error(ErrorKind::schema, "duplicate instance_id '" + row.instance_id + "'");
      }
      out.rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::schema,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json row_json(const PredictionRow& r) {
  json j = {{"instance_id", r.instance_id}, {"mu", r.mu}};
  if (r.alpha) j["alpha"] = *r.alpha;
  if (r.beta) j["beta"] = *r.beta;
  if (r.variance) j["variance"] = *r.variance;
  if (r.score) j["score"] = *r.score;
  return j;
}

std::string render_predictions(const Provenance& prov, const std::vector<PredictionRow>& rows) {
  std::string out = dump_line({{"provenance", prov.to_json()}});
  for (const auto& r : rows) out += dump_line(row_json(r));
  return out;
}

// Predictions paired with human targets. Predictions for corpus instances
// outside the scope or removed by the filter are dropped; an unknown id or a
// missing prediction is an alignment error.
struct Aligned {
  std::vector<PredictionRow> rows;
  std::vector<Target> targets;
  std::size_t excluded = 0;
  std::size_t out_of_scope = 0;
};

Aligned align(const PredictionFile& preds, const Corpus& corpus,
              const std::vector<std::string>& scope, const FilterPolicy& policy) {
  const FilterResult fr = filter_flagged(corpus.records(), corpus.instances(), policy);
  const std::set<std::string> in_scope(scope.begin(), scope.end());
  const std::set<std::string> excluded(fr.excluded.begin(), fr.excluded.end());
  const auto evaluable = intersect_ordered(scope, fr.valid);
  const auto ratings = build_rating_sets(corpus.records(), evaluable, policy);
  std::map<std::string, Target> targets;
  for (const auto& rs : ratings) targets.emplace(rs.instance_id, target_from(rs));

  Aligned out;
  std::set<std::string> covered;
  for (const auto& row : preds.rows) {
    if (!corpus.find(row.instance_id)) {
      throw Error(ErrorKind::alignment,
                  "prediction for unknown instance '" + row.instance_id + "'");
    }
    if (!in_scope.contains(row.instance_id)) {
      ++out.out_of_scope;
      continue;
    }
    const auto it = targets.find(row.instance_id);
    if (it == targets.end()) {
      if (excluded.contains(row.instance_id)) {
        ++out.excluded;
        continue;
      }
      throw Error(ErrorKind::alignment, "no human ratings for '" + row.instance_id + "'");
    }
    covered.insert(row.instance_id);
    out.rows.push_back(row);
    out.targets.push_back(it->second);
  }
  for (const auto& [id, t] : targets) {
    if (!covered.contains(id)) {
      throw Error(ErrorKind::alignment, "missing prediction for '" + id + "' (" +
                                            std::to_string(targets.size() - covered.size()) +
                                            " missing in total)");
    }
  }
  return out;
}

json clamp_json(const ClampRule& rule, const Provenance& prov) {
  json thr = std::isinf(rule.variance_threshold) ? json("inf") : json(rule.variance_threshold);
  return {{"margin", rule.margin}, {"variance_threshold", thr}, {"provenance", prov.to_json()}};
}

ClampRule clamp_from_json(const json& j) {
  try {
    ClampRule rule;
    rule.margin = j.at("margin").get<double>();
    const auto& t = j.at("variance_threshold");
    if (t.is_string()) {
      if (t.get<std::string>() != "inf") throw Error(ErrorKind::schema, "bad variance_threshold");
      rule.variance_threshold = std::numeric_limits<double>::infinity();
    } else {
      rule.variance_threshold = t.get<double>();
    }
    return rule;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("clamp rule: ") + e.what());
  }
}

json metric_json(const MetricReport& m) {
  json j = {{"spearman", m.spearman}, {"kendall", m.kendall}, {"mae_mu", m.mae_mu},
            {"n_pairs", m.n_pairs},   {"n_var_pairs", m.n_var_pairs}};
  j["mae_var"] = m.mae_var ? json(*m.mae_var) : json(nullptr);
  return j;
}

json manifest_summary(const std::optional<SplitManifest>& m, Partition p) {
  if (!m) return nullptr;
  return {{"scenario", to_string(m->scenario)},
          {"seed", m->seed},
          {"partition", to_string(p)},
          {"config_hash", m->provenance.config_hash}};
}

Provenance make_provenance(std::uint64_t seed, const json& settings) {
  Provenance p;
  p.seed = seed;
  p.config_hash = config_hash(settings);
  return p;
}

std::vector<JudgeScores> select_judges(std::vector<JudgeScores> judges,
                                       const std::vector<std::string>& exclude) {
  std::erase_if(judges, [&](const JudgeScores& j) {
    return std::find(exclude.begin(), exclude.end(), j.judge_id) != exclude.end();
  });
  if (judges.empty()) throw Error(ErrorKind::usage, "no judge scores left to fuse");
  return judges;
}

std::vector<AnnotationRecord> judge_records(const Resolver& r, const Flags& f,
                                            const Corpus& corpus) {
  const auto judges_path = r.get_opt(f.judges, "judges");
  if (!judges_path) {
    return std::vector<AnnotationRecord>(corpus.records().begin(), corpus.records().end());
  }
  return read_records(*judges_path, RecordKind::annotation).records;
}

std::map<std::string, double> human_means(const Corpus& corpus,
                                          const std::vector<std::string>& ids,
                                          const FilterPolicy& policy) {
  const FilterResult fr = filter_flagged(corpus.records(), corpus.instances(), policy);
  std::map<std::string, double> out;
  for (const auto& rs : build_rating_sets(corpus.records(), intersect_ordered(ids, fr.valid),
                                          policy)) {
    out[rs.instance_id] = target_from(rs).mean;
  }
  return out;
}

// ---- commands ----

struct Context {
  const Flags& f;
  const Resolver& r;
  std::ostream& out;
  std::ostream& err;
};

int cmd_split(const Context& c) {
  const auto seed = c.r.get<std::uint64_t>(c.f.seed, "seed", 0);
  const auto scenario_name = c.r.get<std::string>(c.f.scenario, "scenario", "unseen_question");
  const auto scenario = parse_scenario(scenario_name);
  if (!scenario) throw Error(ErrorKind::usage, "unknown scenario '" + scenario_name + "'");
  const Corpus corpus = read_corpus(c.r.path(c.f.instances, "instances"), std::nullopt, c.err);
  const std::string out_path = c.r.path(c.f.out, "out");

  json settings = {{"command", "split"}, {"seed", seed}, {"scenario", to_string(*scenario)}};
  SplitManifest m;
  if (*scenario == Scenario::unseen_question) {
    m = stratified_split(corpus.instances(), seed);
  } else {
    auto held = c.r.get_opt(c.f.holdout, "holdout");
    if (!held) {
      const auto k = c.r.get<std::size_t>(c.f.holdout_split, "holdout_split", 0);
      const auto canon = canonical_holdouts(corpus.instances(), seed);
      if (k >= canon.size()) throw Error(ErrorKind::usage, "holdout split index out of range");
      held = canon[k];
      settings["holdout_split"] = k;
    }
    settings["holdout"] = *held;
    m = lalm_holdout_split(corpus.instances(), *held, seed);
  }
  m.provenance = make_provenance(seed, settings);
  write_atomic(out_path, m.to_json().dump(2) + "\n");
  c.out << json({{"train", m.ids(Partition::train).size()},
                 {"dev", m.ids(Partition::dev).size()},
                 {"test", m.ids(Partition::test).size()},
                 {"held_out_lalms", m.held_out_lalms}})
               .dump()
        << "\n";
  return 0;
}

int cmd_train(const Context& c) {
  const auto& f = c.f;
  const auto& r = c.r;
  TrainConfig tc;
  tc.seed = r.get<std::uint64_t>(f.seed, "seed", 0);
  tc.learning_rate = r.get(f.learning_rate, "learning_rate", tc.learning_rate);
  tc.batch_size = r.get(f.batch_size, "batch_size", tc.batch_size);
  tc.max_epochs = r.get(f.epochs, "epochs", tc.max_epochs);
  tc.patience = r.get(f.patience, "patience", tc.patience);
  tc.hidden = r.get(f.hidden, "hidden", tc.hidden);
  tc.parallel = !r.get_switch(f.serial, "serial", false);
  EncoderConfig ec;
  ec.hash_dim = r.get(f.hash_dim, "hash_dim", ec.hash_dim);
  ec.embed_dim = r.get(f.embed_dim, "embed_dim", ec.embed_dim);
  const InputLayout layout = input_layout(r, f);
  const FilterPolicy policy = filter_policy(r, f);
  const SourceSelect source = rating_source(r, f);

  const Corpus corpus = read_corpus(r.path(f.instances, "instances"),
                                    r.path(f.annotations, "annotations"), c.err);
  const auto manifest_path = r.get_opt(f.manifest, "manifest");
  std::optional<SplitManifest> manifest;
  if (manifest_path) manifest = read_manifest(*manifest_path);
  const std::string out_path = r.path(f.out, "out");

  std::optional<std::string> warm_hash;
  if (const auto warm = r.get_opt(f.warm_start, "warm_start")) {
    tc.warm_start = load_model(*warm);
    warm_hash = tc.warm_start->provenance.config_hash;
    ec = tc.warm_start->encoder;
    tc.hidden = tc.warm_start->hidden;
  }

  const Partition train_part = partition_or(r, f, Partition::train);
  const FilterResult fr = filter_flagged(corpus.records(), corpus.instances(), policy);
  auto build = [&](Partition p) {
    const auto ids = intersect_ordered(scope_ids(corpus, manifest, p), fr.valid);
    return labeled_texts(corpus, build_rating_sets(corpus.records(), ids, policy, source),
                         layout);
  };
  const auto train_set = build(train_part);
  std::vector<LabeledText> dev_set;
  if (manifest && train_part != Partition::dev) dev_set = build(Partition::dev);
  if (train_set.empty()) throw Error(ErrorKind::domain, "no training instances with ratings");

  json settings = {{"command", "train"},
                   {"seed", tc.seed},
                   {"learning_rate", tc.learning_rate},
                   {"batch_size", tc.batch_size},
                   {"epochs", tc.max_epochs},
                   {"patience", tc.patience},
                   {"hidden", tc.hidden},
                   {"hash_dim", ec.hash_dim},
                   {"embed_dim", ec.embed_dim},
                   {"layout", layout_json(layout)},
                   {"filter", policy_json(policy)},
                   {"rating_source", r.get<std::string>(f.rating_source, "rating_source", "human")},
                   {"partition", to_string(train_part)},
                   {"manifest", manifest_summary(manifest, train_part)},
                   {"warm_start", warm_hash ? json(*warm_hash) : json(nullptr)}};
  TrainResult result = train(train_set, dev_set, tc, ec, layout);
  result.params.provenance = make_provenance(tc.seed, settings);

  json epochs = json::array();
  for (const auto& e : result.report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_nll", e.train_nll},
                      {"dev_nll", e.dev_nll ? json(*e.dev_nll) : json(nullptr)}});
  }
  const json report = {{"best_epoch", result.report.best_epoch},
                       {"best_nll", result.report.best_nll},
                       {"early_stopped", result.report.early_stopped},
                       {"train_instances", result.report.train_instances},
                       {"train_ratings", result.report.train_ratings},
                       {"dev_instances", result.report.dev_instances},
                       {"dev_ratings", result.report.dev_ratings},
                       {"filter", report_json(fr.report)},
                       {"epochs", epochs},
                       {"provenance", result.params.provenance.to_json()}};
  std::ostringstream model_bytes;
  save_model(model_bytes, result.params);
  if (const auto report_path = r.get_opt(f.report, "report")) {
    write_atomic(*report_path, report.dump(2) + "\n");
  }
  write_atomic(out_path, model_bytes.str());
  c.out << json({{"best_epoch", result.report.best_epoch},
                 {"best_nll", result.report.best_nll},
                 {"train_instances", result.report.train_instances},
                 {"dev_instances", result.report.dev_instances}})
               .dump()
        << "\n";
  return 0;
}

int cmd_predict(const Context& c) {
  const auto& r = c.r;
  const ModelParameters params = load_model(r.path(c.f.model, "model"));
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"), std::nullopt, c.err);
  const auto manifest_path = r.get_opt(c.f.manifest, "manifest");
  std::optional<SplitManifest> manifest;
  if (manifest_path) manifest = read_manifest(*manifest_path);
  const Partition part = partition_or(r, c.f, Partition::test);
  const std::string out_path = r.path(c.f.out, "out");
  const bool parallel = !r.get_switch(c.f.serial, "serial", false);

  const auto ids = scope_ids(corpus, manifest, part);
  std::vector<EvalInstance> selected;
  for (const auto& id : ids) selected.push_back(corpus.at(id));
  const auto preds = predict(selected, params, parallel);

  std::vector<PredictionRow> rows;
  for (const auto& p : preds) {
    rows.push_back({p.instance_id, p.params.alpha(), p.params.beta(), p.moments.mean,
                    p.moments.variance, std::nullopt});
  }
  const json settings = {{"command", "predict"},
                         {"model", params.provenance.config_hash},
                         {"manifest", manifest_summary(manifest, part)}};
  write_atomic(out_path, render_predictions(make_provenance(params.seed, settings), rows));
  c.out << json({{"predictions", rows.size()}}).dump() << "\n";
  return 0;
}

int cmd_clamp_fit(const Context& c) {
  const auto& r = c.r;
  const PredictionFile preds = read_predictions(r.path(c.f.predictions, "predictions"));
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"),
                                    r.path(c.f.annotations, "annotations"), c.err);
  const auto manifest_path = r.get_opt(c.f.manifest, "manifest");
  std::optional<SplitManifest> manifest;
  if (manifest_path) manifest = read_manifest(*manifest_path);
  const Partition part = partition_or(r, c.f, Partition::dev);
  const double margin = r.get(c.f.margin, "margin", kClampMargin);
  const FilterPolicy policy = filter_policy(r, c.f);
  const std::string out_path = r.path(c.f.out, "out");

  const Aligned a = align(preds, corpus, scope_ids(corpus, manifest, part), policy);
  std::vector<Prediction> dev;
  for (const auto& row : a.rows) {
    if (!row.variance) {
      throw Error(ErrorKind::schema, "prediction for '" + row.instance_id + "' lacks variance");
    }
    Prediction p;
    p.instance_id = row.instance_id;
    p.moments = {row.mu, *row.variance};
    dev.push_back(std::move(p));
  }
  const ClampFit fit = fit_clamp_threshold(dev, a.targets, margin);
  const json settings = {{"command", "clamp-fit"},
                         {"margin", margin},
                         {"filter", policy_json(policy)},
                         {"predictions", preds.provenance ? json(preds.provenance->config_hash)
                                                          : json(nullptr)},
                         {"manifest", manifest_summary(manifest, part)}};
  const std::uint64_t seed = preds.provenance ? preds.provenance->seed : 0;
  write_atomic(out_path, clamp_json(fit.rule, make_provenance(seed, settings)).dump(2) + "\n");
  json thr = std::isinf(fit.rule.variance_threshold) ? json("inf")
                                                     : json(fit.rule.variance_threshold);
  c.out << json({{"variance_threshold", thr},
                 {"objective", fit.objective},
                 {"baseline_objective", fit.baseline_objective}})
               .dump()
        << "\n";
  return 0;
}

int cmd_clamp_apply(const Context& c) {
  const auto& r = c.r;
  PredictionFile preds = read_predictions(r.path(c.f.predictions, "predictions"));
  const json clamp = read_json_file(r.path(c.f.clamp, "clamp"));
  const ClampRule rule = clamp_from_json(clamp);
  const std::string out_path = r.path(c.f.out, "out");
  for (auto& row : preds.rows) {
    if (!row.variance) {
      throw Error(ErrorKind::schema, "prediction for '" + row.instance_id + "' lacks variance");
    }
    row.score = apply_clamp(row.mu, *row.variance, rule);
  }
  const json settings = {
      {"command", "clamp-apply"},
      {"predictions", preds.provenance ? json(preds.provenance->config_hash) : json(nullptr)},
      {"clamp", clamp.contains("provenance") ? clamp["provenance"].value("config_hash", "")
                                             : ""}};
  const std::uint64_t seed = preds.provenance ? preds.provenance->seed : 0;
  write_atomic(out_path, render_predictions(make_provenance(seed, settings), preds.rows));
  c.out << json({{"predictions", preds.rows.size()}}).dump() << "\n";
  return 0;
}

int cmd_evaluate(const Context& c) {
  const auto& r = c.r;
  const PredictionFile preds = read_predictions(r.path(c.f.predictions, "predictions"));
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"),
                                    r.path(c.f.annotations, "annotations"), c.err);
  const auto manifest_path = r.get_opt(c.f.manifest, "manifest");
  std::optional<SplitManifest> manifest;
  if (manifest_path) manifest = read_manifest(*manifest_path);
  const Partition part = partition_or(r, c.f, Partition::test);
  const FilterPolicy policy = filter_policy(r, c.f);
  const auto out_path = r.get_opt(c.f.out, "out");

  const Aligned a = align(preds, corpus, scope_ids(corpus, manifest, part), policy);
  std::vector<double> scores;
  std::vector<std::optional<double>> vars;
  for (const auto& row : a.rows) {
    scores.push_back(row.score ? *row.score : row.mu);
    vars.push_back(row.variance);
  }
  const MetricReport m = evaluate_predictions(scores, vars, a.targets);
  const json settings = {
      {"command", "evaluate"},
      {"filter", policy_json(policy)},
      {"predictions", preds.provenance ? json(preds.provenance->config_hash) : json(nullptr)},
      {"manifest", manifest_summary(manifest, part)}};
  json report = metric_json(m);
  report["excluded"] = a.excluded;
  report["out_of_scope"] = a.out_of_scope;
  report["split"] = manifest_summary(manifest, part);
  report["provenance"] =
      make_provenance(preds.provenance ? preds.provenance->seed : 0, settings).to_json();
  if (out_path) write_atomic(*out_path, report.dump(2) + "\n");
  c.out << report.dump() << "\n";
  return 0;
}

int cmd_agreement(const Context& c) {
  const auto& r = c.r;
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"),
                                    r.path(c.f.annotations, "annotations"), c.err);
  const auto level_name = r.get<std::string>(c.f.level, "level", "interval");
  MeasurementLevel level;
  if (level_name == "interval") {
    level = MeasurementLevel::interval;
  } else if (level_name == "ordinal") {
    level = MeasurementLevel::ordinal;
  } else {
    throw Error(ErrorKind::usage, "unknown measurement level '" + level_name + "'");
  }
  const FilterPolicy policy = filter_policy(r, c.f);
  const auto out_path = r.get_opt(c.f.out, "out");

  const auto ids = all_ids(corpus);
  const double before = krippendorff_alpha(
      ReliabilityMatrix::from_records(corpus.records(), ids, FilterPolicy::none()), level);
  const FilterResult fr = filter_flagged(corpus.records(), corpus.instances(), policy);
  const double after = krippendorff_alpha(
      ReliabilityMatrix::from_records(corpus.records(), fr.valid, policy), level);
  const json settings = {
      {"command", "agreement"}, {"level", level_name}, {"filter", policy_json(policy)}};
  const json report = {{"alpha_before", before},
                       {"alpha_after", after},
                       {"instances_before", ids.size()},
                       {"instances_after", fr.valid.size()},
                       {"level", level_name},
                       {"filter", report_json(fr.report)},
                       {"provenance", make_provenance(0, settings).to_json()}};
  if (out_path) write_atomic(*out_path, report.dump(2) + "\n");
  c.out << report.dump() << "\n";
  return 0;
}

int cmd_fuse_fit(const Context& c) {
  const auto& r = c.r;
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"),
                                    r.path(c.f.annotations, "annotations"), c.err);
  const SplitManifest manifest = read_manifest(r.path(c.f.manifest, "manifest"));
  const FilterPolicy policy = filter_policy(r, c.f);
  const auto exclude = r.get<std::vector<std::string>>(c.f.exclude_judges, "exclude_judges", {});
  const std::string out_path = r.path(c.f.out, "out");

  const auto judges =
      select_judges(judge_scores_from_records(judge_records(r, c.f, corpus)), exclude);
  const std::optional<SplitManifest> m(manifest);
  const auto dev_targets = human_means(corpus, scope_ids(corpus, m, Partition::dev), policy);
  const auto train_targets = human_means(corpus, scope_ids(corpus, m, Partition::train), policy);

  FusionModel model;
  for (const auto& j : judges) {
    const CalibrationFit cal = calibrate_judge(j, dev_targets);
    if (cal.warning) c.err << "warning: " << *cal.warning << "\n";
    model.judges.push_back(j.judge_id);
    model.calibrations.push_back(cal.map);
  }
  const WeightFit wf = fit_fusion_weights(judges, train_targets, model.calibrations);
  if (wf.warning) c.err << "warning: " << *wf.warning << "\n";
  model.weights = wf.weights;
  const json settings = {{"command", "fuse-fit"},
                         {"judges", model.judges},
                         {"filter", policy_json(policy)},
                         {"manifest", manifest_summary(m, Partition::train)}};
  model.provenance = make_provenance(manifest.seed, settings);
  write_atomic(out_path, model.to_json().dump(2) + "\n");
  c.out << json({{"judges", model.judges}, {"weights", model.weights}}).dump() << "\n";
  return 0;
}

int cmd_fuse_apply(const Context& c) {
  const auto& r = c.r;
  const FusionModel model = FusionModel::from_json(read_json_file(r.path(c.f.fusion, "fusion")));
  const Corpus corpus = read_corpus(r.path(c.f.instances, "instances"),
                                    r.get_opt(c.f.annotations, "annotations"), c.err);
  const auto manifest_path = r.get_opt(c.f.manifest, "manifest");
  std::optional<SplitManifest> manifest;
  if (manifest_path) manifest = read_manifest(*manifest_path);
  const Partition part = partition_or(r, c.f, Partition::test);
  const std::string out_path = r.path(c.f.out, "out");

  const auto judges = judge_scores_from_records(judge_records(r, c.f, corpus));
  const auto ids = scope_ids(corpus, manifest, part);
  const ScoreMap fused = fuse(judges, model, ids);
  for (const auto& id : fused.missing) {
    c.err << "warning: no judge scores for '" << id << "'\n";
  }
  std::vector<PredictionRow> rows;
  for (const auto& id : ids) {
    const auto it = fused.values.find(id);
    if (it == fused.values.end()) continue;
    rows.push_back({id, std::nullopt, std::nullopt, it->second, std::nullopt, it->second});
  }
  const json settings = {{"command", "fuse-apply"},
                         {"fusion", model.provenance.config_hash},
                         {"manifest", manifest_summary(manifest, part)}};
  write_atomic(out_path, render_predictions(make_provenance(model.provenance.seed, settings), rows));
  c.out << json({{"predictions", rows.size()}, {"missing", fused.missing.size()}}).dump() << "\n";
  return 0;
}

int cmd_synth(const Context& c) {
  const auto& r = c.r;
  SyntheticConfig sc;
  sc.seed = r.get<std::uint64_t>(c.f.seed, "seed", 0);
  sc.n_instances = r.get(c.f.n_instances, "n", sc.n_instances);
  sc.rater_noise = r.get(c.f.rater_noise, "rater_noise", sc.rater_noise);
  sc.judge_noise = r.get(c.f.judge_noise, "judge_noise", sc.judge_noise);
  sc.judges = r.get<std::vector<std::string>>(c.f.judge_ids, "judge_ids", {});
  const std::string inst_path = r.path(c.f.out_instances, "out_instances");
  const std::string ann_path = r.path(c.f.out_annotations, "out_annotations");

  const SyntheticCorpus corpus = make_overlap_corpus(sc);
  const json settings = {{"command", "synth"},         {"seed", sc.seed},
                         {"n", sc.n_instances},        {"rater_noise", sc.rater_noise},
                         {"judge_noise", sc.judge_noise}, {"judges", sc.judges}};
  const std::string header = dump_line({{"provenance", make_provenance(sc.seed, settings).to_json()}});
  std::string inst = header;
  for (const auto& i : corpus.instances) inst += serialize(i) + "\n";
  std::string ann = header;
  for (const auto& a : corpus.records) ann += serialize(a) + "\n";
  write_atomic(inst_path, inst);
  write_atomic(ann_path, ann);
  c.out << json({{"instances", corpus.instances.size()}, {"records", corpus.records.size()}})
               .dump()
        << "\n";
  return 0;
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json({{"error", kind}, {"message", message}}).dump() << "\n";
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::schema: return 4;
    case ErrorKind::corpus: return 5;
    case ErrorKind::domain: return 6;
    case ErrorKind::undefined: return 7;
    case ErrorKind::alignment: return 8;
    case ErrorKind::numerical: return 9;
  }
  return kInternalExit;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Beta-distribution correctness judge for audio QA responses", "betajudge"};
  app.require_subcommand(1);

  auto add_config = [&](CLI::App* s) {
    s->add_option("--config", f.config, "JSON config file; flags override its keys");
  };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", f.seed, "Random seed"); };
  auto add_corpus = [&](CLI::App* s, bool annotations) {
    s->add_option("--instances", f.instances, "Instances JSONL");
    if (annotations) s->add_option("--annotations", f.annotations, "Annotations JSONL");
  };
  auto add_scope = [&](CLI::App* s) {
    s->add_option("--manifest", f.manifest, "Split manifest");
    s->add_option("--partition", f.partition, "train, dev or test");
  };
  auto add_filter = [&](CLI::App* s) {
    s->add_flag("--no-filter", f.no_filter, "Keep flagged instances");
    s->add_option("--min-ratings", f.min_ratings, "Minimum valid ratings per instance");
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", f.out, "Output path"); };

  std::map<std::string, std::function<int(const Context&)>> handlers;
  auto sub = [&](const char* name, const char* help, std::function<int(const Context&)> h) {
    CLI::App* s = app.add_subcommand(name, help);
    add_config(s);
    handlers[name] = std::move(h);
    return s;
  };

  auto* split = sub("split", "Write a train/dev/test manifest", cmd_split);
  add_seed(split);
  add_corpus(split, false);
  split->add_option("--scenario", f.scenario, "unseen_question or unseen_lalm");
  split->add_option("--holdout", f.holdout, "Held-out LALM ids")->delimiter(',');
  split->add_option("--holdout-split", f.holdout_split, "Canonical holdout index (0-4)");
  add_out(split);

  auto* tr = sub("train", "Fit the Beta predictor", cmd_train);
  add_seed(tr);
  add_corpus(tr, true);
  add_scope(tr);
  add_filter(tr);
  add_out(tr);
  tr->add_option("--report", f.report, "Training report JSON");
  tr->add_option("--rating-source", f.rating_source, "human, judge or all");
  tr->add_option("--warm-start", f.warm_start, "Initial model");
  tr->add_option("--lr", f.learning_rate, "Learning rate");
  tr->add_option("--batch-size", f.batch_size, "Instances per batch");
  tr->add_option("--epochs", f.epochs, "Maximum epochs");
  tr->add_option("--patience", f.patience, "Early stopping patience");
  tr->add_option("--hidden", f.hidden, "Hidden width");
  tr->add_option("--hash-dim", f.hash_dim, "Hashed feature buckets");
  tr->add_option("--embed-dim", f.embed_dim, "Embedding width");
  tr->add_flag("--no-question", f.no_question, "Drop the question from the input");
  tr->add_flag("--no-rationale", f.no_rationale, "Drop the rationale from the input");
  tr->add_flag("--with-transcript", f.with_transcript, "Add the transcript to the input");
  tr->add_flag("--serial", f.serial, "Disable OpenMP kernels");

  auto* pr = sub("predict", "Predict Beta parameters", cmd_predict);
  pr->add_option("--model", f.model, "Model file");
  add_corpus(pr, false);
  add_scope(pr);
  add_out(pr);
  pr->add_flag("--serial", f.serial, "Disable OpenMP kernels");

  auto* cf = sub("clamp-fit", "Select the clamping variance threshold on dev", cmd_clamp_fit);
  cf->add_option("--predictions", f.predictions, "Predictions JSONL");
  add_corpus(cf, true);
  add_scope(cf);
  add_filter(cf);
  cf->add_option("--margin", f.margin, "Clamp margin");
  add_out(cf);

  auto* ca = sub("clamp-apply", "Add clamped scores to predictions", cmd_clamp_apply);
  ca->add_option("--predictions", f.predictions, "Predictions JSONL");
  ca->add_option("--clamp", f.clamp, "Clamp rule JSON");
  add_out(ca);

  auto* ev = sub("evaluate", "Score predictions against human ratings", cmd_evaluate);
  ev->add_option("--predictions", f.predictions, "Predictions JSONL");
  add_corpus(ev, true);
  add_scope(ev);
  add_filter(ev);
  add_out(ev);

  auto* ag = sub("agreement", "Krippendorff's alpha before and after filtering", cmd_agreement);
  add_corpus(ag, true);
  add_filter(ag);
  ag->add_option("--level", f.level, "interval or ordinal");
  add_out(ag);

  auto* ff = sub("fuse-fit", "Fit judge calibrations and fusion weights", cmd_fuse_fit);
  add_corpus(ff, true);
  ff->add_option("--judges", f.judges, "Judge score JSONL (default: the annotations)");
  ff->add_option("--manifest", f.manifest, "Split manifest");
  ff->add_option("--exclude-judge", f.exclude_judges, "Judge ids to leave out")->delimiter(',');
  add_filter(ff);
  add_out(ff);

  auto* fa = sub("fuse-apply", "Fuse judge scores", cmd_fuse_apply);
  fa->add_option("--fusion", f.fusion, "Fusion model JSON");
  add_corpus(fa, true);
  fa->add_option("--judges", f.judges, "Judge score JSONL (default: the annotations)");
  add_scope(fa);
  add_out(fa);

  auto* sy = sub("synth", "Generate a synthetic word-overlap corpus", cmd_synth);
  add_seed(sy);
  sy->add_option("--n", f.n_instances, "Number of instances");
  sy->add_option("--rater-noise", f.rater_noise, "Rater noise sd");
  sy->add_option("--judge-noise", f.judge_noise, "Judge noise sd");
  sy->add_option("--judge-ids", f.judge_ids, "Simulated judge ids")->delimiter(',');
  sy->add_option("--out-instances", f.out_instances, "Instances JSONL");
  sy->add_option("--out-annotations", f.out_annotations, "Annotations JSONL");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorKind::usage, e.what());
    }
    CLI::App* chosen = app.get_subcommands().front();
    const json file = f.config.empty() ? json::object() : read_json_file(f.config);
    if (!file.is_object()) throw Error(ErrorKind::usage, "config file must hold a JSON object");
    const Resolver resolver(file);
    return handlers.at(chosen->get_name())(Context{f, resolver, out, err});
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    report_error(err, to_string(ErrorKind::schema), e.what());
    return exit_code(ErrorKind::schema);
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kInternalExit;
  }
}

}  // namespace betajudge::cli
