#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "veritopic/binio.hpp"
#include "veritopic/encoder.hpp"
#include "veritopic/error.hpp"
#include "veritopic/rng.hpp"

using namespace veritopic;

namespace {

// Independent encoder for the expected byte layout.
void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& b, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(b, bits);
}

Corpus tokens_corpus(std::vector<std::vector<std::string>> docs) {
  Corpus c;
  for (std::size_t i = 0; i < docs.size(); ++i) c.documents.push_back({"d" + std::to_string(i), "", docs[i], std::nullopt});
  return c;
}

EmbeddingMatrix random_matrix(Rng& rng) {
  const auto dim = static_cast<std::uint32_t>(1 + rng.below(16));
  EmbeddingMatrix m(dim);
  const auto n = 1 + rng.below(10);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1e6, 1e6));
    if (dim > 1) v[0] = -0.0f;
    std::string id = "doc-" + std::to_string(rng.below(1000000)) + (rng.below(2) ? "\xC3\xA9" : "");
    if (m.find(id) == nullptr) m.insert(id, v);
  }
  return m;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("CEB1 bytes for the documented single-record example") {
  EmbeddingMatrix m(2);
  m.insert("d1", {1.0f, 2.0f});
  const std::vector<std::uint8_t> expected{0x43, 0x45, 0x42, 0x31, 0x01, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00,
                                           0x02, 0x00, 0x64, 0x31, 0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40};
  CHECK(encode_embeddings(m) == expected);

  std::vector<std::uint8_t> independent{'C', 'E', 'B', '1'};
  put_u32(independent, 1);
  put_u32(independent, 2);
  independent.push_back(2);
  independent.push_back(0);
  independent.push_back('d');
  independent.push_back('1');
  put_f32(independent, 1.0f);
  put_f32(independent, 2.0f);
  CHECK(independent == expected);
}

TEST_CASE("CEB1 round-trips random matrices") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_matrix(rng);
    auto bytes = encode_embeddings(m);
    auto back = decode_embeddings(bytes);
    CHECK(back == m);
    CHECK(encode_embeddings(back) == bytes);
  }
}

TEST_CASE("records are written in doc_id order") {
  EmbeddingMatrix m(1);
  m.insert("b", {2.0f});
  m.insert("a", {1.0f});
  auto bytes = encode_embeddings(m);
  CHECK(bytes[14] == 'a');
}

TEST_CASE("CEB1 errors") {
  CHECK_THROWS_AS(encode_embeddings(EmbeddingMatrix(3)), std::invalid_argument);

  EmbeddingMatrix m(2);
  m.insert("d1", {1.0f, 2.0f});
  m.insert("d2", {3.0f, 4.0f});
  auto bytes = encode_embeddings(m);

  auto bad = bytes;
  std::memcpy(bad.data(), "XXXX", 4);
  CHECK_THROWS_WITH_AS(decode_embeddings(bad), "not an embedding file", DataError);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(decode_embeddings(truncated), doctest::Contains("corrupt at record 1"), DataError);

  auto nan = bytes;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 16, &q, 4);
  CHECK_THROWS_WITH_AS(decode_embeddings(nan), doctest::Contains("non-finite"), DataError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_embeddings(trailing), DataError);

  CHECK_THROWS_AS(m.insert("d3", {1.0f}), DataError);
  CHECK_THROWS_AS(m.insert("d1", {1.0f, 1.0f}), DataError);
}

TEST_CASE("encoder-sized file on disk") {
  EmbeddingMatrix m(768);
  Rng rng(1);
  for (const char* id : {"3", "1", "2"}) {
    std::vector<float> v(768);
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    m.insert(id, v);
  }
  const auto path = std::filesystem::temp_directory_path() / "veritopic_test_768.ceb";
  write_embedding_file(m, path);
  auto back = read_embedding_file(path);
  CHECK(back.dim() == 768);
  CHECK(back.size() == 3);
  CHECK(back == m);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_embedding_file(path), DataError);
}

TEST_CASE("debug TSV form") {
  auto m = parse_embedding_tsv("a\t1,2.5\nb\t-1,0\n");
  CHECK(m.dim() == 2);
  CHECK(*m.find("a") == std::vector<float>{1.0f, 2.5f});
  CHECK_THROWS_AS(parse_embedding_tsv("a\t1,2\nb\t1\n"), DataError);
  CHECK_THROWS_AS(parse_embedding_tsv(""), DataError);
}

TEST_CASE("baseline_encode") {
  auto corpus = tokens_corpus({{"virus", "cases", "cases"}, {"virus", "cases", "cases"}, {}, {"vaccine"}, {"zzz"}});
  auto vocab = Vocabulary::build(tokens_corpus({{"virus", "cases"}, {"vaccine", "cases"}, {"virus"}}), 1);
  auto m = baseline_encode(corpus, vocab, 64);
  CHECK(m.size() == 5);
  CHECK(*m.find("d0") == *m.find("d1"));
  for (const char* id : {"d2", "d4"}) {
    for (float x : *m.find(id)) CHECK(x == 0.0f);
  }
  for (const char* id : {"d0", "d3"}) {
    double n2 = 0;
    for (float x : *m.find(id)) n2 += static_cast<double>(x) * x;
    CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-6);
  }

  SUBCASE("idf weighting") {
    // tf-idf before hashing: cases tf 2, idf ln(4/3)+1; virus tf 1, idf ln(4/3)+1.
    const double idf = std::log(4.0 / 3.0) + 1.0;
    const auto cs = hash_token("cases", 64);
    const auto vs = hash_token("virus", 64);
    if (cs.bucket != vs.bucket) {
      const double norm = std::sqrt(4 * idf * idf + idf * idf);
      CHECK(std::abs((*m.find("d0"))[cs.bucket] - cs.sign * 2 * idf / norm) < 1e-6);
      CHECK(std::abs((*m.find("d0"))[vs.bucket] - vs.sign * idf / norm) < 1e-6);
    }
  }
  SUBCASE("document order does not matter") {
    Corpus reversed = corpus;
    std::reverse(reversed.documents.begin(), reversed.documents.end());
    CHECK(baseline_encode(reversed, vocab, 64) == m);
  }
}

TEST_CASE("fuse") {
  EmbeddingMatrix ce(4);
  ce.insert("a", {1, 2, 3, 4});
  ce.insert("b", {5, 6, 7, 8});
  std::map<std::string, TopicDistribution> topics{{"a", {"a", {0.7, 0.3}}}, {"b", {"b", {0.1, 0.9}}},
                                                  {"d42", {"d42", {0.5, 0.5}}}};
  std::vector<std::string> ids{"b", "a"};
  auto f = fuse(ce, topics, ids);
  REQUIRE(f.size() == 2);
  CHECK(f[1].vector == std::vector<double>{1, 2, 3, 4, 0.7, 0.3});
  CHECK(f[0].doc_id == "b");
  for (const auto& row : f) {
    CHECK(row.vector.size() == 6);
    CHECK(std::abs(row.vector[4] + row.vector[5] - 1.0) <= 1e-9);
  }
  std::vector<std::string> missing{"d42"};
  CHECK_THROWS_WITH_AS(fuse(ce, topics, missing), "missing embedding for d42", DataError);
  ce.insert("c", {0, 0, 0, 0});
  std::vector<std::string> no_topics{"c"};
  CHECK_THROWS_WITH_AS(fuse(ce, topics, no_topics), doctest::Contains("missing topic distribution for c"), DataError);
}

}  // TEST_SUITE
