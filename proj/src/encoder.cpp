#include "veritopic/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "veritopic/binio.hpp"
#include "veritopic/error.hpp"
#include "veritopic/rng.hpp"
#include "veritopic/tsv.hpp"

namespace veritopic {

namespace {

constexpr std::string_view kEmbeddingMagic = "CEB1";

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be >= 1");
}

void EmbeddingMatrix::insert(std::string doc_id, std::vector<float> vector) {
  if (vector.size() != dim_) {
    throw DataError("embedding for '" + doc_id + "' has length " + std::to_string(vector.size()) + ", expected " +
                    std::to_string(dim_));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) throw DataError("non-finite value in embedding for '" + doc_id + "'");
  }
  auto [it, inserted] = entries_.emplace(std::move(doc_id), std::move(vector));
  if (!inserted) throw DataError("duplicate embedding id '" + it->first + "'");
}

const std::vector<float>* EmbeddingMatrix::find(std::string_view doc_id) const {
  auto it = entries_.find(doc_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix) {
  if (matrix.empty()) throw std::invalid_argument("cannot write an empty embedding matrix");
  binio::Writer w;
  w.raw(kEmbeddingMagic);
  w.u32(static_cast<std::uint32_t>(matrix.size()));
  w.u32(matrix.dim());
  for (const auto& [id, vec] : matrix.entries()) {
    w.str16(id);
    for (float v : vec) w.f32(v);
  }
  return w.take();
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  try {
    if (r.raw(4) != kEmbeddingMagic) throw DataError("not an embedding file");
    count = r.u32();
    dim = r.u32();
  } catch (const binio::Truncated&) {
    throw DataError("not an embedding file");
  }
  if (dim == 0) throw DataError("embedding file: dim is 0");

  EmbeddingMatrix m(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id;
    std::vector<float> vec(dim);
    try {
      id = r.str16();
      for (auto& v : vec) v = r.f32();
    } catch (const binio::Truncated&) {
      throw DataError("corrupt at record " + std::to_string(i));
    }
    try {
      m.insert(std::move(id), std::move(vec));
    } catch (const DataError& e) {
      throw DataError("corrupt at record " + std::to_string(i) + ": " + e.what());
    }
  }
  if (r.remaining() != 0) throw DataError("embedding file: trailing bytes after record " + std::to_string(count));
  return m;
}

void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  binio::write_file(path, encode_embeddings(matrix));
}

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return decode_embeddings(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

EmbeddingMatrix parse_embedding_tsv(std::string_view text) {
  EmbeddingMatrix m;
  bool first = true;
  tsv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const std::string where = "embedding line " + std::to_string(line_no);
    auto fields = tsv::split_on(line, '\t');
    if (fields.size() != 2) throw DataError(where + ": expected doc_id<TAB>v0,v1,...");
    std::vector<float> vec;
    for (auto part : tsv::split_on(fields[1], ',')) vec.push_back(static_cast<float>(tsv::parse_double(part, where)));
    if (first) {
      m = EmbeddingMatrix(static_cast<std::uint32_t>(vec.size()));
      first = false;
    }
    try {
      m.insert(std::string(fields[0]), std::move(vec));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  });
  if (m.empty()) throw DataError("embedding TSV has no records");
  return m;
}

EmbeddingMatrix read_embedding_tsv(const std::filesystem::path& path) {
  try {
    return parse_embedding_tsv(binio::read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

HashSlot hash_token(std::string_view token, std::uint32_t dim) {
  const std::uint64_t h = fnv1a64(token);
  const auto bucket = static_cast<std::uint32_t>(h % dim);
  const float sign = (splitmix64(h) >> 63) != 0 ? -1.0f : 1.0f;
  return {bucket, sign};
}

EmbeddingMatrix baseline_encode(const Corpus& corpus, const Vocabulary& vocab, std::uint32_t dim) {
  EmbeddingMatrix m(dim);
  const double n = static_cast<double>(vocab.num_docs());

  std::vector<double> idf(vocab.size());
  std::vector<HashSlot> slots(vocab.size());
  for (std::uint32_t id = 0; id < vocab.size(); ++id) {
    idf[id] = std::log((1.0 + n) / (1.0 + vocab.doc_freq(id))) + 1.0;
    slots[id] = hash_token(vocab.token(id), dim);
  }

  std::vector<double> acc(dim);
  for (const auto& doc : corpus.documents) {
    std::map<std::uint32_t, std::uint32_t> tf;
    for (auto id : encode_document(doc.tokens, vocab)) ++tf[id];

    std::fill(acc.begin(), acc.end(), 0.0);
    for (auto [id, count] : tf) acc[slots[id].bucket] += slots[id].sign * static_cast<double>(count) * idf[id];
    double norm2 = 0.0;
    for (double x : acc) norm2 += x * x;

    std::vector<float> vec(dim, 0.0f);
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::uint32_t j = 0; j < dim; ++j) vec[j] = static_cast<float>(acc[j] * inv);
    }
    m.insert(doc.id, std::move(vec));
  }
  return m;
}

std::vector<FusedFeatures> fuse(const EmbeddingMatrix& ce, const std::map<std::string, TopicDistribution>& topics,
                                std::span<const std::string> ids) {
  std::vector<FusedFeatures> out;
  out.reserve(ids.size());
  std::size_t k = 0;
  for (const auto& id : ids) {
    const auto* emb = ce.find(id);
    if (emb == nullptr) throw DataError("missing embedding for " + id);
    auto it = topics.find(id);
    if (it == topics.end()) throw DataError("missing topic distribution for " + id);
    const auto& theta = it->second.theta;
    if (k == 0) k = theta.size();
    if (theta.size() != k || k == 0) throw DataError("inconsistent topic count for " + id);

    FusedFeatures f{id, {}, ce.dim()};
    f.vector.reserve(ce.dim() + k);
    f.vector.insert(f.vector.end(), emb->begin(), emb->end());
    f.vector.insert(f.vector.end(), theta.begin(), theta.end());
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace veritopic
