#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace veritopic {

enum class Label : std::uint8_t { kFake = 0, kReal = 1 };

std::string_view label_name(Label label);
// Case-insensitive "fake"/"real"; nullopt for anything else.
std::optional<Label> parse_label(std::string_view text);

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2, kUnsplit = 3 };

std::string_view split_name(Split split);
Split parse_split(std::string_view text);

struct Document {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;
  std::optional<Label> label;
};

struct ClassCounts {
  std::size_t fake = 0;
  std::size_t real = 0;
  std::size_t unlabeled = 0;
  std::size_t total() const { return fake + real + unlabeled; }
};

struct Corpus {
  std::vector<Document> documents;
  Split split = Split::kUnsplit;

  ClassCounts class_counts() const;
  std::size_t size() const { return documents.size(); }
};

using StopwordSet = std::unordered_set<std::string>;

// Reads a CSV with (at least) the columns id, tweet, label. Rows keep file
// order. Labels are required except for the unsplit split, where an empty
// label cell is allowed. Tokens are left empty; see preprocess_corpus.
Corpus load_dataset(const std::filesystem::path& path, Split split);
Corpus parse_dataset(std::string_view csv_text, Split split);

// One token per line; blank lines and lines starting with '#' are skipped.
StopwordSet load_stopwords(const std::filesystem::path& path);

// Cleaning pipeline, applied in order:
//   lowercase (ASCII; curly single quotes become ')
//   drop whitespace tokens that start with http or www, and cut glued
//     http:// / https:// URLs to the end of their token
//   drop @-mentions
//   strip '#' from hashtags
//   replace every character outside [a-z0-9'] with a space
//   split on whitespace, trim surrounding apostrophes, drop URL remnants,
//   stopwords and empty tokens
// The result is a fixed point: preprocessing the joined output again yields
// the same tokens.
std::vector<std::string> preprocess_text(std::string_view raw, const StopwordSet& stopwords);

void preprocess_corpus(Corpus& corpus, const StopwordSet& stopwords);

class Vocabulary {
 public:
  Vocabulary() = default;

  // Tokens with document frequency >= min_df, ids in lexicographic order.
  static Vocabulary build(const Corpus& corpus, std::size_t min_df = 1);
  static Vocabulary from_parts(std::vector<std::string> tokens, std::vector<std::uint32_t> doc_freq,
                               std::uint32_t num_docs);

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return id_to_token_.at(id); }
  std::uint32_t doc_freq(std::uint32_t id) const { return doc_freq_.at(id); }
  // Number of documents the frequencies were counted over.
  std::uint32_t num_docs() const { return num_docs_; }

  const std::vector<std::string>& tokens() const { return id_to_token_; }
  const std::vector<std::uint32_t>& doc_freqs() const { return doc_freq_; }
  // FNV-1a over the NUL-terminated tokens in id order.
  std::uint64_t fingerprint() const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::map<std::string, std::uint32_t, std::less<>> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::uint32_t> doc_freq_;
  std::uint32_t num_docs_ = 0;
};

using TokenIds = std::vector<std::uint32_t>;

// In-order ids; out-of-vocabulary tokens are dropped.
TokenIds encode_document(std::span<const std::string> tokens, const Vocabulary& vocab);

// Preprocessed corpus plus its integer encoding, as persisted in VCP1 files.
struct EncodedCorpus {
  Corpus corpus;
  Vocabulary vocab;
  std::vector<TokenIds> encoded;

  bool operator==(const EncodedCorpus& other) const;
};

EncodedCorpus encode_corpus(Corpus corpus, Vocabulary vocab);

inline constexpr std::uint8_t kCorpusFormatVersion = 1;

std::vector<std::uint8_t> serialize(const EncodedCorpus& corpus);
EncodedCorpus deserialize_corpus(std::span<const std::uint8_t> bytes);
void save_corpus(const EncodedCorpus& corpus, const std::filesystem::path& path);
EncodedCorpus load_corpus(const std::filesystem::path& path);

}  // namespace veritopic
