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

#ifndef BETAJUDGE_CORPUS_HPP_
#define BETAJUDGE_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace betajudge {

enum class Modality { speech, sound, music, mixed };

std::string_view to_string(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

/// Benchmark of origin: MMAU, MMAR, or any other tag.
struct Benchmark {
  enum class Kind { mmau, mmar, other };
  Kind kind = Kind::other;
  std::string tag;  // only meaningful for Kind::other

  static Benchmark parse(std::string_view s);
  std::string name() const;

  friend bool operator==(const Benchmark&, const Benchmark&) = default;
};

struct EvalInstance {
  std::string instance_id;
  std::string question_id;
  Benchmark benchmark;
  Modality modality = Modality::speech;
  std::string category;
  std::string lalm_id;
  std::string question;
  std::string reference_answer;
  std::string rationale;
  std::string transcript;
  std::string candidate_answer;

  friend bool operator==(const EvalInstance&, const EvalInstance&) = default;
};

/// Annotator feedback codes. Q: incomplete/incorrect question, A: rationale
/// problem, R: reference answer problem, U: unable to judge (ambiguity),
/// E: unable to judge (expertise).
enum class Feedback : std::uint8_t { Q = 1, A = 2, R = 4, U = 8, E = 16 };

inline constexpr Feedback kAllFeedback[] = {Feedback::Q, Feedback::A,
                                            Feedback::R, Feedback::U,
                                            Feedback::E};

char to_char(Feedback f);
std::optional<Feedback> parse_feedback(char c);

class FeedbackSet {
 public:
  constexpr FeedbackSet() = default;
  constexpr FeedbackSet(std::initializer_list<Feedback> codes) {
    for (const Feedback f : codes) insert(f);
  }

  /// Parses a code string such as "QRA"; throws on an unknown letter.
  static FeedbackSet parse(std::string_view letters);

  constexpr void insert(Feedback f) { bits_ |= static_cast<std::uint8_t>(f); }
  constexpr bool contains(Feedback f) const {
    return (bits_ & static_cast<std::uint8_t>(f)) != 0;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool intersects(FeedbackSet other) const {
    return (bits_ & other.bits_) != 0;
  }
  std::string letters() const;

  friend constexpr bool operator==(FeedbackSet, FeedbackSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct RatingSource {
  bool is_judge = false;
  std::string judge_id;  // set when is_judge

  static RatingSource human() { return {}; }
  static RatingSource judge(std::string id) { return {true, std::move(id)}; }
  std::string str() const;

  friend bool operator==(const RatingSource&, const RatingSource&) = default;
};

struct AnnotationRecord {
  std::string instance_id;
  std::string rater_id;
  RatingSource source;
  std::optional<int> raw_rating;  // 1..5
  FeedbackSet feedback;
  std::string comment;

  friend bool operator==(const AnnotationRecord&,
                         const AnnotationRecord&) = default;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParsedRecords {
  std::vector<EvalInstance> instances;
  std::vector<AnnotationRecord> records;
  std::vector<LineError> errors;
  std::vector<std::string> warnings;
};

enum class RecordKind { any, instance, annotation };

/// Reads line-delimited JSON. With RecordKind::any a line is an annotation
/// when it carries "rater_id" and an instance otherwise. Malformed lines are
/// collected in `errors`; blank lines are skipped. Throws
/// Error(corpus) on a duplicate instance_id or (question_id, lalm_id).
ParsedRecords parse_records(std::istream& in, RecordKind kind = RecordKind::any);

std::string serialize(const EvalInstance& inst);
std::string serialize(const AnnotationRecord& rec);

/// Instances plus their annotation records with id lookup.
class Corpus {
 public:
  Corpus() = default;
  /// Throws Error(corpus) on duplicates or a record naming an unknown
  /// instance.
  Corpus(std::vector<EvalInstance> instances,
         std::vector<AnnotationRecord> records);

  std::span<const EvalInstance> instances() const { return instances_; }
  std::span<const AnnotationRecord> records() const { return records_; }
  const EvalInstance* find(std::string_view instance_id) const;
  const EvalInstance& at(std::string_view instance_id) const;

 private:
  std::vector<EvalInstance> instances_;
  std::vector<AnnotationRecord> records_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Loads an instances file and an annotations file; any line error is
/// raised as Error(schema) naming the file and line.
Corpus load_corpus(const std::string& instances_path,
                   const std::string& annotations_path);

inline constexpr double kRatingEpsilon = 0.001;

/// (raw - 1) / 4 clipped to [kRatingEpsilon, 1 - kRatingEpsilon].
double normalize_rating(int raw);

struct RatingStats {
  double mean = 0.0;
  std::optional<double> variance;  // unbiased; absent when N = 1
};

/// Mean and unbiased sample variance of raw 1-5 ratings.
RatingStats rating_stats(std::span<const int> raw);
/// Same statistics on an arbitrary real sample.
RatingStats sample_stats(std::span<const double> xs);

struct RatingSet {
  std::string instance_id;
  std::vector<int> raw_ratings;
  std::vector<double> normalized;

  static RatingSet from_raw(std::string instance_id, std::vector<int> raw);
};

struct FilterPolicy {
  FeedbackSet exclude_codes;      // codes that invalidate the instance
  bool question_level = false;    // propagate exclusion to the question
  int min_ratings = 1;
  FeedbackSet drop_rating_codes;  // codes that drop only that record's rating

  /// {Q, R, A} at question level, {U, E} per record, min_ratings = 1.
  static FilterPolicy standard();
  /// Keeps everything that carries at least one rating.
  static FilterPolicy none();
};

struct FilterReport {
  std::map<char, std::size_t> records_per_code;  // over all records
  std::size_t flagged_instances = 0;      // directly carried an excluded code
  std::size_t propagated_instances = 0;   // excluded via a sibling
  std::size_t below_min_ratings = 0;
  std::size_t dropped_ratings = 0;        // per-record drops
};

struct FilterResult {
  std::vector<std::string> valid;     // corpus order
  std::vector<std::string> excluded;  // corpus order
  FilterReport report;
};

/// Whether a record's rating counts as a human rating under the policy.
bool counts_as_human_rating(const AnnotationRecord& rec,
                            const FilterPolicy& policy);

/// Partitions the corpus into valid and excluded instance ids.
/// Only human records count toward min_ratings; judge records never flag.
FilterResult filter_flagged(std::span<const AnnotationRecord> records,
                            std::span<const EvalInstance> instances,
                            const FilterPolicy& policy);

enum class SourceSelect { human, judge, all };

/// Rating sets for `ids` (in that order) from records of the selected
/// source, skipping records dropped by the policy. Ids without any
/// remaining rating are omitted.
std::vector<RatingSet> build_rating_sets(
    std::span<const AnnotationRecord> records,
    std::span<const std::string> ids, const FilterPolicy& policy,
    SourceSelect source = SourceSelect::human);

/// Input assembly layout: five slots q, r, a, t, c with the separator
/// between every pair of slots, always.
struct InputLayout {
  std::string separator = "\n###\n";
  bool include_question = true;
  bool include_rationale = true;
  bool include_transcript = false;
};

inline constexpr int kInputSlots = 5;
enum class Slot { question = 0, reference = 1, rationale = 2, transcript = 3,
                  candidate = 4 };

std::string assemble_input(const EvalInstance& inst,
                           const InputLayout& layout = {});

}  // namespace betajudge

#endif  // BETAJUDGE_CORPUS_HPP_
