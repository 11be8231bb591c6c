#include "veritopic/prediction.hpp"

#include <cmath>

#include "veritopic/binio.hpp"
#include "veritopic/error.hpp"
#include "veritopic/tsv.hpp"

namespace veritopic {

std::string format_predictions_tsv(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += p.doc_id;
    out.push_back('\t');
    tsv::append_double(out, p.probabilities[0]);
    out.push_back('\t');
    tsv::append_double(out, p.probabilities[1]);
    out.push_back('\t');
    out += label_name(p.label);
    out.push_back('\n');
  }
  return out;
}

std::vector<Prediction> parse_predictions_tsv(std::string_view text) {
  std::vector<Prediction> out;
  tsv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const std::string where = "predictions line " + std::to_string(line_no);
    auto f = tsv::split_on(line, '\t');
    if (f.size() != 4) throw DataError(where + ": expected doc_id, p_fake, p_real, label");
    Prediction p;
    p.doc_id = std::string(f[0]);
    p.probabilities = {tsv::parse_double(f[1], where), tsv::parse_double(f[2], where)};
    for (double x : p.probabilities) {
      if (!std::isfinite(x) || x < 0.0 || x > 1.0) throw DataError(where + ": probability out of range");
    }
    if (std::abs(p.probabilities[0] + p.probabilities[1] - 1.0) > 1e-9) {
      throw DataError(where + ": probabilities do not sum to 1");
    }
    auto label = parse_label(f[3]);
    if (!label) throw DataError(where + ": bad label '" + std::string(f[3]) + "'");
    p.label = *label;
    out.push_back(std::move(p));
  });
  return out;
}

void write_predictions_tsv(std::span<const Prediction> predictions, const std::filesystem::path& path) {
  binio::write_text_file(path, format_predictions_tsv(predictions));
}

std::vector<Prediction> read_predictions_tsv(const std::filesystem::path& path) {
  try {
    return parse_predictions_tsv(binio::read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace veritopic
