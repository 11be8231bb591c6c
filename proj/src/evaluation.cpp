#include "veritopic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "veritopic/error.hpp"

namespace veritopic {

std::uint64_t ConfusionMatrix::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

ConfusionMatrix confusion_matrix(std::span<const Label> gold, std::span<const Label> predicted) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("confusion_matrix: " + std::to_string(gold.size()) + " gold labels vs " +
                                std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw std::invalid_argument("confusion_matrix: no labels");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++m.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalReport weighted_prf(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw std::invalid_argument("weighted_prf: empty confusion matrix");
  EvalReport r;
  r.confusion = m;
  r.accuracy = m.accuracy();
  for (std::size_t c = 0; c < 2; ++c) {
    const std::uint64_t tp = m.counts[c][c];
    const std::uint64_t predicted = m.counts[0][c] + m.counts[1][c];
    const std::uint64_t support = m.counts[c][0] + m.counts[c][1];
    auto& pc = r.per_class[c];
    pc.precision = ratio(tp, predicted);
    pc.recall = ratio(tp, support);
    pc.f1 = (pc.precision + pc.recall) == 0.0 ? 0.0 : 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall);
    pc.support = support;
  }
  for (const auto& pc : r.per_class) {
    const double w = static_cast<double>(pc.support) / static_cast<double>(total);
    r.precision += w * pc.precision;
    r.recall += w * pc.recall;
    r.f1 += w * pc.f1;
  }
  return r;
}

std::vector<Prediction> ensemble_predictions(std::span<const Prediction> a, std::span<const Prediction> b) {
  if (a.size() != b.size()) throw DataError("ensemble: prediction lists differ in length");
  std::vector<Prediction> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].doc_id != b[i].doc_id) {
      throw DataError("ensemble: id mismatch at row " + std::to_string(i) + " ('" + a[i].doc_id + "' vs '" +
                      b[i].doc_id + "')");
    }
    Prediction p;
    p.doc_id = a[i].doc_id;
    p.probabilities = {(a[i].probabilities[0] + b[i].probabilities[0]) / 2.0,
                       (a[i].probabilities[1] + b[i].probabilities[1]) / 2.0};
    p.label = label_from_probabilities(p.probabilities);
    out.push_back(std::move(p));
  }
  return out;
}

KeywordTable keyword_class_counts(const Corpus& corpus, std::span<const std::string> keywords) {
  KeywordTable table;
  for (const auto& k : keywords) table[k];
  for (const auto& doc : corpus.documents) {
    if (!doc.label) continue;
    for (const auto& t : doc.tokens) {
      auto it = table.find(t);
      if (it == table.end()) continue;
      if (*doc.label == Label::kFake) {
        ++it->second.fake;
      } else {
        ++it->second.real;
      }
    }
  }
  return table;
}

double keyword_skew(const KeywordCounts& c) {
  return std::abs(std::log((static_cast<double>(c.fake) + 1.0) / (static_cast<double>(c.real) + 1.0)));
}

ErrorReport build_error_report(std::span<const Label> gold, std::span<const Prediction> predictions,
                               const Corpus& evaluated, const Corpus& reference,
                               std::span<const std::string> extra_keywords) {
  if (gold.size() != predictions.size()) throw DataError("error report: gold/prediction length mismatch");
  std::unordered_map<std::string_view, const Document*> by_id;
  for (const auto& doc : evaluated.documents) by_id.emplace(doc.id, &doc);

  std::vector<std::size_t> wrong;
  std::set<std::string> keywords(extra_keywords.begin(), extra_keywords.end());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].label == gold[i]) continue;
    wrong.push_back(i);
    if (auto it = by_id.find(predictions[i].doc_id); it != by_id.end()) {
      keywords.insert(it->second->tokens.begin(), it->second->tokens.end());
    }
  }

  ErrorReport report;
  const std::vector<std::string> keyword_list(keywords.begin(), keywords.end());
  report.keyword_table = keyword_class_counts(reference, keyword_list);

  for (std::size_t i : wrong) {
    const auto& p = predictions[i];
    MisclassifiedDoc m{p.doc_id, gold[i], p.label, p.probabilities[0], p.probabilities[1], {}};
    if (auto it = by_id.find(p.doc_id); it != by_id.end()) {
      std::set<std::string> distinct(it->second->tokens.begin(), it->second->tokens.end());
      for (const auto& t : distinct) {
        const auto& counts = report.keyword_table.at(t);
        m.top_tokens.push_back({t, counts, keyword_skew(counts)});
      }
      std::stable_sort(m.top_tokens.begin(), m.top_tokens.end(),
                       [](const TokenEvidence& a, const TokenEvidence& b) { return a.skew > b.skew; });
      if (m.top_tokens.size() > 5) m.top_tokens.resize(5);
    }
    report.misclassified.push_back(std::move(m));
  }
  return report;
}

nlohmann::ordered_json to_json(const ConfusionMatrix& m) {
  return nlohmann::ordered_json::array({{m.counts[0][0], m.counts[0][1]}, {m.counts[1][0], m.counts[1][1]}});
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["weighted_f1"] = r.f1;
  j["accuracy"] = r.accuracy;
  j["confusion"] = to_json(r.confusion);
  j["confusion_axes"] = {{"rows", "true"}, {"columns", "predicted"}, {"order", {"fake", "real"}}};
  nlohmann::ordered_json per_class;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& pc = r.per_class[c];
    per_class[std::string(label_name(static_cast<Label>(c)))] = {
        {"precision", pc.precision}, {"recall", pc.recall}, {"f1", pc.f1}, {"support", pc.support}};
  }
  j["per_class"] = per_class;
  return j;
}

nlohmann::ordered_json to_json(const ErrorReport& r) {
  nlohmann::ordered_json j;
  j["misclassified_count"] = r.misclassified.size();
  auto& list = j["misclassified"] = nlohmann::ordered_json::array();
  for (const auto& m : r.misclassified) {
    nlohmann::ordered_json e;
    e["doc_id"] = m.doc_id;
    e["true"] = label_name(m.gold);
    e["predicted"] = label_name(m.predicted);
    e["p_fake"] = m.p_fake;
    e["p_real"] = m.p_real;
    auto& toks = e["top_tokens"] = nlohmann::ordered_json::array();
    for (const auto& t : m.top_tokens) {
      toks.push_back({{"token", t.token}, {"count_fake", t.counts.fake}, {"count_real", t.counts.real},
                      {"skew", t.skew}});
    }
    list.push_back(std::move(e));
  }
  auto& table = j["keyword_table"] = nlohmann::ordered_json::object();
  for (const auto& [k, c] : r.keyword_table) table[k] = {{"count_fake", c.fake}, {"count_real", c.real}};
  return j;
}

std::string format_confusion_table(const ConfusionMatrix& m) {
  std::ostringstream os;
  std::size_t width = 9;
  for (const auto& row : m.counts) {
    for (auto v : row) width = std::max(width, std::to_string(v).size() + 2);
  }
  const auto w = static_cast<int>(width);
  os << std::left << std::setw(12) << "true\\pred" << std::right << std::setw(w) << "fake" << std::setw(w) << "real"
     << '\n';
  for (std::size_t t = 0; t < 2; ++t) {
    os << std::left << std::setw(12) << label_name(static_cast<Label>(t)) << std::right << std::setw(w)
       << m.counts[t][0] << std::setw(w) << m.counts[t][1] << '\n';
  }
  return os.str();
}

}  // namespace veritopic
