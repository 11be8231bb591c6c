#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veritopic/corpus.hpp"
#include "veritopic/prediction.hpp"

namespace veritopic {

struct ConfusionMatrix {
  // counts[true][predicted], index 0 = fake, 1 = real.
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t total() const;
  std::uint64_t correct() const { return counts[0][0] + counts[1][1]; }
  std::uint64_t errors() const { return counts[0][1] + counts[1][0]; }
  double accuracy() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const Label> gold, std::span<const Label> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  double precision = 0.0;  // support-weighted
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::array<ClassMetrics, 2> per_class;
  ConfusionMatrix confusion;
};

// Per-class scores with 0/0 taken as 0, averaged with true-class supports.
EvalReport weighted_prf(const ConfusionMatrix& matrix);

// Mean of the two probability vectors, then argmax (tie -> fake).
std::vector<Prediction> ensemble_predictions(std::span<const Prediction> a, std::span<const Prediction> b);

struct KeywordCounts {
  std::uint64_t fake = 0;
  std::uint64_t real = 0;
  bool operator==(const KeywordCounts&) const = default;
};

using KeywordTable = std::map<std::string, KeywordCounts>;

// Token occurrences (with multiplicity) per class over labeled documents.
KeywordTable keyword_class_counts(const Corpus& corpus, std::span<const std::string> keywords);

// |ln((count_fake + 1) / (count_real + 1))|
double keyword_skew(const KeywordCounts& counts);

struct TokenEvidence {
  std::string token;
  KeywordCounts counts;
  double skew = 0.0;
};

struct MisclassifiedDoc {
  std::string doc_id;
  Label gold = Label::kFake;
  Label predicted = Label::kFake;
  double p_fake = 0.0;
  double p_real = 0.0;
  std::vector<TokenEvidence> top_tokens;  // at most 5, most skewed first
};

struct ErrorReport {
  std::vector<MisclassifiedDoc> misclassified;
  KeywordTable keyword_table;  // counted over `reference`
};

// `gold` parallels `predictions`. Tokens of the evaluated documents come from
// `evaluated` (matched by id); class counts come from `reference`, normally
// train + validation. `extra_keywords` are added to the keyword table.
ErrorReport build_error_report(std::span<const Label> gold, std::span<const Prediction> predictions,
                               const Corpus& evaluated, const Corpus& reference,
                               std::span<const std::string> extra_keywords = {});

nlohmann::ordered_json to_json(const ConfusionMatrix& matrix);
nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const ErrorReport& report);

// Aligned text table with true classes as rows.
std::string format_confusion_table(const ConfusionMatrix& matrix);

}  // namespace veritopic
