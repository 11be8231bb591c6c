#pragma once

// Contextual document vectors: the CEB1 interchange file, a training-free
// baseline encoder, and concatenation with topic distributions.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "veritopic/corpus.hpp"
#include "veritopic/topicmodel.hpp"

namespace veritopic {

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::uint32_t dim);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Throws on wrong length, non-finite values or a duplicate id.
  void insert(std::string doc_id, std::vector<float> vector);
  const std::vector<float>* find(std::string_view doc_id) const;

  // Sorted by doc_id.
  const std::map<std::string, std::vector<float>, std::less<>>& entries() const { return entries_; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::uint32_t dim_ = 0;
  std::map<std::string, std::vector<float>, std::less<>> entries_;
};

// CEB1 layout, little-endian:
//   "CEB1" | count u32 | dim u32 | count x (id_len u16 | id bytes | dim x f32)
// Records in lexicographic doc_id order.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);
void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embedding_file(const std::filesystem::path& path);

// Debug form: doc_id<TAB>v0,v1,...
EmbeddingMatrix parse_embedding_tsv(std::string_view text);
EmbeddingMatrix read_embedding_tsv(const std::filesystem::path& path);

// Smoothed TF-IDF, idf = ln((1 + N) / (1 + df)) + 1 with N and df taken from
// the vocabulary, feature-hashed into `dim` signed buckets and L2-normalized.
// Documents without in-vocabulary tokens map to the zero vector.
EmbeddingMatrix baseline_encode(const Corpus& corpus, const Vocabulary& vocab, std::uint32_t dim);

// Bucket and sign for a token under the baseline feature hash.
struct HashSlot {
  std::uint32_t bucket;
  float sign;
};
HashSlot hash_token(std::string_view token, std::uint32_t dim);

struct FusedFeatures {
  std::string doc_id;
  std::vector<double> vector;  // [CE (E values) ; theta (K values)]
  std::size_t embedding_dim = 0;
};

// One row per id, in the order of `ids`.
std::vector<FusedFeatures> fuse(const EmbeddingMatrix& ce, const std::map<std::string, TopicDistribution>& topics,
                                std::span<const std::string> ids);

}  // namespace veritopic
