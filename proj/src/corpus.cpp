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

#include "betajudge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "betajudge/error.hpp"

namespace betajudge {
namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kInstanceKeys = {
    "instance_id", "question_id",      "benchmark", "modality",
    "category",    "lalm_id",          "question",  "reference_answer",
    "rationale",   "transcript",       "candidate_answer"};
const std::set<std::string, std::less<>> kAnnotationKeys = {
    "instance_id", "rater_id", "source", "rating", "feedback", "comment"};

struct LineFailure {
  std::string message;
};

std::string require_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw LineFailure{std::string("missing required field '") + key + "'"};
  if (!it->is_string()) throw LineFailure{std::string("field '") + key + "' must be a string"};
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw LineFailure{std::string("field '") + key + "' must be a string"};
  return it->get<std::string>();
}

void require_nonempty(const std::string& value, const char* key) {
  if (value.empty()) throw LineFailure{std::string("field '") + key + "' must be nonempty"};
}

EvalInstance parse_instance(const json& obj) {
  EvalInstance inst;
  inst.instance_id = require_string(obj, "instance_id");
  inst.question_id = require_string(obj, "question_id");
  inst.benchmark = Benchmark::parse(require_string(obj, "benchmark"));
  const std::string modality = require_string(obj, "modality");
  const auto m = parse_modality(modality);
  if (!m) throw LineFailure{"unknown modality '" + modality + "'"};
  inst.modality = *m;
  inst.category = require_string(obj, "category");
  inst.lalm_id = require_string(obj, "lalm_id");
  inst.question = require_string(obj, "question");
  inst.reference_answer = require_string(obj, "reference_answer");
  inst.rationale = optional_string(obj, "rationale");
  inst.transcript = optional_string(obj, "transcript");
  inst.candidate_answer = require_string(obj, "candidate_answer");
  require_nonempty(inst.instance_id, "instance_id");
  require_nonempty(inst.question, "question");
  require_nonempty(inst.reference_answer, "reference_answer");
  require_nonempty(inst.candidate_answer, "candidate_answer");
  return inst;
}

RatingSource parse_source(const std::string& s) {
  if (s == "human") return RatingSource::human();
  constexpr std::string_view prefix = "judge:";
  if (s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0) {
    return RatingSource::judge(s.substr(prefix.size()));
  }
  throw LineFailure{"source must be \"human\" or \"judge:<id>\", got '" + s + "'"};
}

AnnotationRecord parse_annotation(const json& obj) {
  AnnotationRecord rec;
  rec.instance_id = require_string(obj, "instance_id");
  rec.rater_id = require_string(obj, "rater_id");
  rec.source = parse_source(require_string(obj, "source"));
  if (const auto it = obj.find("rating"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw LineFailure{"rating must be an integer"};
    const auto v = it->get<long long>();
    if (v < 1 || v > 5) throw LineFailure{"rating out of range"};
    rec.raw_rating = static_cast<int>(v);
  }
  if (const auto it = obj.find("feedback"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) throw LineFailure{"feedback must be an array"};
    for (const auto& code : *it) {
      if (!code.is_string() || code.get<std::string>().size() != 1) {
        throw LineFailure{"feedback entries must be single-letter strings"};
      }
      const auto f = parse_feedback(code.get<std::string>()[0]);
      if (!f) throw LineFailure{"unknown feedback code '" + code.get<std::string>() + "'"};
      rec.feedback.insert(*f);
    }
  }
  rec.comment = optional_string(obj, "comment");
  if (!rec.raw_rating && rec.feedback.empty()) {
    throw LineFailure{"record carries neither a rating nor feedback"};
  }
  return rec;
}

void warn_unknown_keys(const json& obj,
                       const std::set<std::string, std::less<>>& known,
                       std::size_t line, std::vector<std::string>& warnings) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      warnings.push_back("line " + std::to_string(line) + ": unknown key '" +
                         key + "' ignored");
    }
  }
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::speech: return "speech";
    case Modality::sound: return "sound";
    case Modality::music: return "music";
    case Modality::mixed: return "mixed";
  }
  return "speech";
}

std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "speech") return Modality::speech;
  if (s == "sound") return Modality::sound;
  if (s == "music") return Modality::music;
  if (s == "mixed") return Modality::mixed;
  return std::nullopt;
}

Benchmark Benchmark::parse(std::string_view s) {
  if (s == "MMAU") return {Kind::mmau, {}};
  if (s == "MMAR") return {Kind::mmar, {}};
  return {Kind::other, std::string(s)};
}

std::string Benchmark::name() const {
  switch (kind) {
    case Kind::mmau: return "MMAU";
    case Kind::mmar: return "MMAR";
    case Kind::other: return tag;
  }
  return tag;
}

char to_char(Feedback f) {
  switch (f) {
    case Feedback::Q: return 'Q';
    case Feedback::A: return 'A';
    case Feedback::R: return 'R';
    case Feedback::U: return 'U';
    case Feedback::E: return 'E';
  }
  return '?';
}

std::optional<Feedback> parse_feedback(char c) {
  switch (c) {
    case 'Q': return Feedback::Q;
    case 'A': return Feedback::A;
    case 'R': return Feedback::R;
    case 'U': return Feedback::U;
    case 'E': return Feedback::E;
    default: return std::nullopt;
  }
}

FeedbackSet FeedbackSet::parse(std::string_view letters) {
  FeedbackSet set;
  for (const char c : letters) {
    if (c == ',' || c == ' ') continue;
    const auto f = parse_feedback(c);
    if (!f) {
      throw Error(ErrorKind::usage,
                  std::string("unknown feedback code '") + c + "'");
    }
    set.insert(*f);
  }
  return set;
}

std::string FeedbackSet::letters() const {
  std::string out;
  for (const Feedback f : kAllFeedback) {
    if (contains(f)) out.push_back(to_char(f));
  }
  return out;
}

std::string RatingSource::str() const {
  return is_judge ? "judge:" + judge_id : "human";
}

ParsedRecords parse_records(std::istream& in, RecordKind kind) {
  ParsedRecords out;
  std::set<std::string, std::less<>> seen_ids;
  std::set<std::pair<std::string, std::string>> seen_pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw LineFailure{std::string("malformed JSON: ") + e.what()};
      }
      if (!obj.is_object()) throw LineFailure{"record must be a JSON object"};
      // Provenance header lines written by this tool are skipped.
      if (obj.contains("provenance") && obj.size() == 1) continue;
      const bool is_annotation =
          kind == RecordKind::annotation ||
          (kind == RecordKind::any && obj.contains("rater_id"));
      if (is_annotation) {
        out.records.push_back(parse_annotation(obj));
        warn_unknown_keys(obj, kAnnotationKeys, lineno, out.warnings);
      } else {
        EvalInstance inst = parse_instance(obj);
        if (!seen_ids.insert(inst.instance_id).second) {
          throw Error(ErrorKind::corpus, "line " + std::to_string(lineno) +
                                             ": duplicate instance_id '" +
                                             inst.instance_id + "'");
        }
        if (!seen_pairs.emplace(inst.question_id, inst.lalm_id).second) {
          throw Error(ErrorKind::corpus,
                      "line " + std::to_string(lineno) +
                          ": duplicate (question_id, lalm_id) = ('" +
                          inst.question_id + "', '" + inst.lalm_id + "')");
        }
        warn_unknown_keys(obj, kInstanceKeys, lineno, out.warnings);
        out.instances.push_back(std::move(inst));
      }
    } catch (const LineFailure& f) {
      out.errors.push_back({lineno, f.message});
    }
  }
  return out;
}

std::string serialize(const EvalInstance& inst) {
  json obj = {{"instance_id", inst.instance_id},
              {"question_id", inst.question_id},
              {"benchmark", inst.benchmark.name()},
              {"modality", std::string(to_string(inst.modality))},
              {"category", inst.category},
              {"lalm_id", inst.lalm_id},
              {"question", inst.question},
              {"reference_answer", inst.reference_answer},
              {"rationale", inst.rationale},
              {"transcript", inst.transcript},
              {"candidate_answer", inst.candidate_answer}};
  return obj.dump();
}

std::string serialize(const AnnotationRecord& rec) {
  json obj = {{"instance_id", rec.instance_id},
              {"rater_id", rec.rater_id},
              {"source", rec.source.str()}};
  if (rec.raw_rating) obj["rating"] = *rec.raw_rating;
  if (!rec.feedback.empty()) {
    json codes = json::array();
    for (const char c : rec.feedback.letters()) codes.push_back(std::string(1, c));
    obj["feedback"] = codes;
  }
  if (!rec.comment.empty()) obj["comment"] = rec.comment;
  return obj.dump();
}

Corpus::Corpus(std::vector<EvalInstance> instances,
               std::vector<AnnotationRecord> records)
    : instances_(std::move(instances)), records_(std::move(records)) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    if (!index_.emplace(inst.instance_id, i).second) {
      throw Error(ErrorKind::corpus,
                  "duplicate instance_id '" + inst.instance_id + "'");
    }
    if (!pairs.emplace(inst.question_id, inst.lalm_id).second) {
      throw Error(ErrorKind::corpus, "duplicate (question_id, lalm_id) for '" +
                                         inst.instance_id + "'");
    }
  }
  for (const auto& rec : records_) {
    if (!index_.contains(rec.instance_id)) {
      throw Error(ErrorKind::corpus, "annotation refers to unknown instance_id '" +
                                         rec.instance_id + "'");
    }
  }
}

const EvalInstance* Corpus::find(std::string_view instance_id) const {
  const auto it = index_.find(instance_id);
  return it == index_.end() ? nullptr : &instances_[it->second];
}

const EvalInstance& Corpus::at(std::string_view instance_id) const {
  const EvalInstance* inst = find(instance_id);
  if (inst == nullptr) {
    throw Error(ErrorKind::corpus,
                "unknown instance_id '" + std::string(instance_id) + "'");
  }
  return *inst;
}

namespace {

ParsedRecords parse_file(const std::string& path, RecordKind kind) {
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

}  // namespace

Corpus load_corpus(const std::string& instances_path,
                   const std::string& annotations_path) {
  ParsedRecords inst = parse_file(instances_path, RecordKind::instance);
  ParsedRecords ann = parse_file(annotations_path, RecordKind::annotation);
  return Corpus(std::move(inst.instances), std::move(ann.records));
}

double normalize_rating(int raw) {
  if (raw < 1 || raw > 5) {
    throw Error(ErrorKind::domain,
                "rating must be in [1, 5], got " + std::to_string(raw));
  }
  return std::clamp((raw - 1) / 4.0, kRatingEpsilon, 1.0 - kRatingEpsilon);
}

RatingStats sample_stats(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorKind::domain, "empty rating set");
  double sum = 0.0;
  for (const double x : xs) sum += x;
  const double n = static_cast<double>(xs.size());
  RatingStats out;
  out.mean = sum / n;
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.variance = ss / (n - 1.0);
  }
  return out;
}

RatingStats rating_stats(std::span<const int> raw) {
  if (raw.empty()) throw Error(ErrorKind::domain, "empty rating set");
  // Integer sums keep the result independent of ordering.
  long long sum = 0;
  for (const int r : raw) sum += r;
  const auto n = static_cast<long long>(raw.size());
  RatingStats out;
  out.mean = static_cast<double>(sum) / static_cast<double>(n);
  if (n >= 2) {
    // sum((r - mean)^2) * n = n * sum(r^2) - sum^2, exact in integers.
    long long sum_sq = 0;
    for (const int r : raw) sum_sq += static_cast<long long>(r) * r;
    const long long scaled = n * sum_sq - sum * sum;
    out.variance = static_cast<double>(scaled) / static_cast<double>(n * (n - 1));
  }
  return out;
}

RatingSet RatingSet::from_raw(std::string instance_id, std::vector<int> raw) {
  if (raw.empty()) throw Error(ErrorKind::domain, "empty rating set");
  RatingSet rs;
  rs.instance_id = std::move(instance_id);
  rs.normalized.reserve(raw.size());
  for (const int r : raw) rs.normalized.push_back(normalize_rating(r));
  rs.raw_ratings = std::move(raw);
  return rs;
}

FilterPolicy FilterPolicy::standard() {
  FilterPolicy p;
  p.exclude_codes = {Feedback::Q, Feedback::R, Feedback::A};
  p.question_level = true;
  p.min_ratings = 1;
  p.drop_rating_codes = {Feedback::U, Feedback::E};
  return p;
}

FilterPolicy FilterPolicy::none() { return FilterPolicy{}; }

bool counts_as_human_rating(const AnnotationRecord& rec,
                            const FilterPolicy& policy) {
  return !rec.source.is_judge && rec.raw_rating.has_value() &&
         !rec.feedback.intersects(policy.drop_rating_codes);
}

FilterResult filter_flagged(std::span<const AnnotationRecord> records,
                            std::span<const EvalInstance> instances,
                            const FilterPolicy& policy) {
  if (policy.min_ratings < 1) {
    throw Error(ErrorKind::domain, "min_ratings must be >= 1");
  }
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    index.emplace(instances[i].instance_id, i);
  }
  FilterResult result;
  std::vector<bool> flagged(instances.size(), false);
  std::vector<int> rating_count(instances.size(), 0);
  for (const auto& rec : records) {
    const auto it = index.find(rec.instance_id);
    if (it == index.end()) {
      throw Error(ErrorKind::corpus, "annotation refers to unknown instance_id '" +
                                         rec.instance_id + "'");
    }
    for (const char c : rec.feedback.letters()) ++result.report.records_per_code[c];
    if (rec.feedback.intersects(policy.exclude_codes)) flagged[it->second] = true;
    if (counts_as_human_rating(rec, policy)) {
      ++rating_count[it->second];
    } else if (!rec.source.is_judge && rec.raw_rating) {
      ++result.report.dropped_ratings;
    }
  }

  std::set<std::string, std::less<>> flagged_questions;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (flagged[i]) {
      ++result.report.flagged_instances;
      flagged_questions.insert(instances[i].question_id);
    }
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    bool excluded = flagged[i];
    if (!excluded && policy.question_level &&
        flagged_questions.contains(instances[i].question_id)) {
      excluded = true;
      ++result.report.propagated_instances;
    }
    if (!excluded && rating_count[i] < policy.min_ratings) {
      excluded = true;
      ++result.report.below_min_ratings;
    }
    (excluded ? result.excluded : result.valid).push_back(instances[i].instance_id);
  }
  return result;
}

std::vector<RatingSet> build_rating_sets(
    std::span<const AnnotationRecord> records,
    std::span<const std::string> ids, const FilterPolicy& policy,
    SourceSelect source) {
  std::map<std::string, std::vector<int>, std::less<>> raw;
  for (const auto& id : ids) raw.emplace(id, std::vector<int>{});
  for (const auto& rec : records) {
    if (!rec.raw_rating) continue;
    if (rec.feedback.intersects(policy.drop_rating_codes)) continue;
    if (source == SourceSelect::human && rec.source.is_judge) continue;
    if (source == SourceSelect::judge && !rec.source.is_judge) continue;
    const auto it = raw.find(rec.instance_id);
    if (it != raw.end()) it->second.push_back(*rec.raw_rating);
  }
  std::vector<RatingSet> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto& r = raw.at(id);
    if (r.empty()) continue;
    out.push_back(RatingSet::from_raw(id, std::move(r)));
  }
  return out;
}

std::string assemble_input(const EvalInstance& inst, const InputLayout& layout) {
  static const std::string kEmpty;
  const std::string* slots[kInputSlots] = {
      layout.include_question ? &inst.question : &kEmpty,
      &inst.reference_answer,
      layout.include_rationale ? &inst.rationale : &kEmpty,
      layout.include_transcript ? &inst.transcript : &kEmpty,
      &inst.candidate_answer,
  };
  std::string out;
  for (int i = 0; i < kInputSlots; ++i) {
    if (i > 0) out += layout.separator;
    out += *slots[i];
  }
  return out;
}

}  // namespace betajudge
