#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veritopic/corpus.hpp"

namespace veritopic {

struct Prediction {
  std::string doc_id;
  std::array<double, 2> probabilities{};  // [p_fake, p_real]
  Label label = Label::kFake;
};

// Argmax over {fake, real}; an exact tie goes to fake.
inline Label label_from_probabilities(const std::array<double, 2>& p) {
  return p[1] > p[0] ? Label::kReal : Label::kFake;
}

// TSV rows: doc_id<TAB>p_fake<TAB>p_real<TAB>label
std::string format_predictions_tsv(std::span<const Prediction> predictions);
std::vector<Prediction> parse_predictions_tsv(std::string_view text);
void write_predictions_tsv(std::span<const Prediction> predictions, const std::filesystem::path& path);
std::vector<Prediction> read_predictions_tsv(const std::filesystem::path& path);

}  // namespace veritopic
