#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "veritopic/error.hpp"
#include "veritopic/rng.hpp"
#include "veritopic/topicmodel.hpp"

using namespace veritopic;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

LdaConfig quick_config(std::uint32_t k, std::uint64_t seed = 1) {
  LdaConfig c;
  c.topics = k;
  c.iterations = 60;
  c.burn_in = 30;
  c.seed = seed;
  c.infer_iterations = 20;
  return c;
}

std::vector<TokenIds> small_docs() {
  return {{0, 1, 2, 1}, {3, 3, 4}, {0, 0, 1}, {}, {2, 4, 4, 4, 3}, {1}, {0, 2}, {4, 3, 2, 1, 0}, {2, 2}, {3}};
}

}  // namespace

TEST_SUITE("topicmodel") {

TEST_CASE("conditional_distribution examples") {
  SUBCASE("zero counts give the uniform distribution") {
    std::vector<std::int64_t> z(4, 0);
    auto p = conditional_distribution({z, z, z}, 10, 0.1, 0.01);
    for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("hand-computed K=2 case") {
    std::vector<std::int64_t> ndk{1, 0}, nkw{1, 0}, nk{2, 0};
    auto p = conditional_distribution({ndk, nkw, nk}, 2, 1.0, 1.0);
    CHECK(std::abs(p[0] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(p[1] - 1.0 / 3.0) < 1e-15);
  }
  SUBCASE("negative counts are rejected") {
    std::vector<std::int64_t> ok{1, 1}, bad{1, -1};
    CHECK_THROWS_AS(conditional_distribution({ok, bad, ok}, 2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(conditional_distribution({ok, ok, std::vector<std::int64_t>{1}}, 2, 1.0, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("conditional_distribution matches the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(6);
    const std::size_t v = 1 + rng.below(50);
    const double alpha = rng.uniform(0.01, 2.0);
    const double beta = rng.uniform(0.001, 1.0);
    std::vector<std::int64_t> ndk(k), nkw(k), nk(k);
    for (std::size_t t = 0; t < k; ++t) {
      ndk[t] = static_cast<std::int64_t>(rng.below(20));
      nkw[t] = static_cast<std::int64_t>(rng.below(30));
      nk[t] = nkw[t] + static_cast<std::int64_t>(rng.below(200));
    }
    auto got = conditional_distribution({ndk, nkw, nk}, v, alpha, beta);
    auto want = oracle::lda_conditional(ndk, nkw, nk, static_cast<double>(v), alpha, beta);
    double total = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      CHECK(std::abs(got[t] - want[t]) <= 1e-12);
      total += got[t];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("config validation") {
  LdaConfig c;
  CHECK_NOTHROW(c.validate());
  c.topics = 0;
  CHECK_THROWS(c.validate());
  c = LdaConfig{};
  c.alpha = 0.0;
  CHECK_THROWS(c.validate());
  c = LdaConfig{};
  c.burn_in = c.iterations + 1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("defaults") {
  LdaConfig c;
  CHECK(c.topics == 10);
  CHECK(c.alpha == 0.1);
  CHECK(c.beta == 0.01);
  CHECK(c.iterations == 500);
  CHECK(c.burn_in == 300);
  CHECK(c.infer_iterations == 50);
}

TEST_CASE("training on an empty corpus fails") {
  std::vector<TokenIds> none;
  CHECK_THROWS_WITH_AS(train_lda(none, 5, quick_config(2)), "no tokens to sample", DataError);
  std::vector<TokenIds> empties{{}, {}};
  CHECK_THROWS_WITH_AS(train_lda(empties, 5, quick_config(2)), "no tokens to sample", DataError);
}

TEST_CASE("single topic reduces to smoothed word frequencies") {
  auto docs = small_docs();
  auto cfg = quick_config(1);
  auto model = train_lda(docs, 5, cfg);
  std::vector<double> counts(5, 0.0);
  double n = 0;
  for (const auto& d : docs) {
    for (auto w : d) {
      counts[w] += 1;
      n += 1;
    }
  }
  for (std::size_t w = 0; w < 5; ++w) {
    CHECK(std::abs(model.phi()[w] - (counts[w] + cfg.beta) / (n + 5 * cfg.beta)) < 1e-12);
  }
  for (std::size_t d = 0; d < docs.size(); ++d) {
    auto td = infer_theta(model, "d" + std::to_string(d), docs[d]);
    REQUIRE(td.theta.size() == 1);
    CHECK(td.theta[0] == 1.0);
  }
}

TEST_CASE("count conservation after every sweep") {
  auto docs = small_docs();
  std::size_t total = 0;
  for (const auto& d : docs) total += d.size();
  std::uint32_t sweeps = 0;
  auto model = train_lda(docs, 5, quick_config(3), [&](const GibbsSampler& s, std::uint32_t) {
    ++sweeps;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto ndk = s.doc_topic(d);
      CHECK(std::accumulate(ndk.begin(), ndk.end(), std::int64_t{0}) == static_cast<std::int64_t>(docs[d].size()));
      for (auto c : ndk) CHECK(c >= 0);
    }
    auto nkw = s.topic_word_table();
    CHECK(std::accumulate(nkw.begin(), nkw.end(), std::int64_t{0}) == static_cast<std::int64_t>(total));
    for (std::size_t k = 0; k < s.topics(); ++k) {
      std::int64_t row = 0;
      for (std::size_t w = 0; w < s.vocab_size(); ++w) row += s.topic_word(k, w);
      CHECK(row == s.topic_totals()[k]);
    }
  });
  CHECK(sweeps == 60);
  for (std::size_t k = 0; k < model.topics(); ++k) CHECK(std::abs(sum(model.phi_row(k)) - 1.0) <= 1e-9);
}

TEST_CASE("training is deterministic per seed") {
  auto docs = small_docs();
  auto a = train_lda(docs, 5, quick_config(3, 42));
  auto b = train_lda(docs, 5, quick_config(3, 42));
  auto c = train_lda(docs, 5, quick_config(3, 43));
  CHECK(a == b);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) != serialize(c));
}

TEST_CASE("log_likelihood closed forms") {
  std::vector<TokenIds> none;
  std::vector<std::vector<std::uint32_t>> no_z;
  CHECK(log_likelihood(none, no_z, 3, 7, 0.1, 0.01) == 0.0);

  std::vector<TokenIds> one{{0}};
  std::vector<std::vector<std::uint32_t>> z{{0}};
  for (double v : {1.0, 4.0, 30.0}) {
    CHECK(std::abs(log_likelihood(one, z, 1, static_cast<std::size_t>(v), 0.5, 0.01) - std::log(1.0 / v)) < 1e-12);
  }
  std::vector<TokenIds> oov{{5}};
  CHECK_THROWS_AS(log_likelihood(oov, z, 1, 3, 0.5, 0.01), std::invalid_argument);
  std::vector<std::vector<std::uint32_t>> bad_z{{4}};
  CHECK_THROWS_AS(log_likelihood(one, bad_z, 1, 3, 0.5, 0.01), std::invalid_argument);
}

TEST_CASE("synthetic topic recovery") {
  auto tc = synthetic::three_topic_corpus();
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.seed = 7;
  std::vector<double> ll;
  auto model = train_lda(tc.docs, tc.vocab_size, cfg,
                         [&](const GibbsSampler& s, std::uint32_t) { ll.push_back(s.log_likelihood()); });

  auto align = synthetic::greedy_align(tc.phi, model.topics(), [&](std::size_t k) { return model.phi_row(k); });
  CHECK(align.mean_l1 <= 0.15);

  const double first = std::accumulate(ll.begin(), ll.begin() + 10, 0.0) / 10;
  const double last = std::accumulate(ll.end() - 10, ll.end(), 0.0) / 10;
  CHECK(last > first);

  SUBCASE("a document of topic-0 words is assigned to the aligned topic") {
    TokenIds doc;
    for (std::uint32_t w = 0; w < 10; ++w) doc.push_back(w);
    auto td = infer_theta(model, "probe", doc);
    auto argmax = static_cast<std::size_t>(std::max_element(td.theta.begin(), td.theta.end()) - td.theta.begin());
    CHECK(argmax == align.learned_for_true[0]);
  }
}

TEST_CASE("infer_theta") {
  auto docs = small_docs();
  auto model = train_lda(docs, 5, quick_config(4));
  const auto before = serialize(model);

  auto empty = infer_theta(model, "e", TokenIds{});
  for (double x : empty.theta) CHECK(x == 0.25);

  for (std::size_t d = 0; d < docs.size(); ++d) {
    auto td = infer_theta(model, "d" + std::to_string(d), docs[d]);
    CHECK(std::abs(sum(td.theta) - 1.0) <= 1e-9);
    for (double x : td.theta) CHECK(x >= 0.0);
    CHECK(infer_theta(model, "d" + std::to_string(d), docs[d]).theta == td.theta);
  }
  CHECK(serialize(model) == before);

  const TokenIds out_of_range{9};
  CHECK_THROWS_AS(infer_theta(model, "x", out_of_range), std::invalid_argument);
}

TEST_CASE("infer_corpus matches sequential inference") {
  auto docs = small_docs();
  auto model = train_lda(docs, 5, quick_config(3));
  EncodedCorpus ec;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    ec.corpus.documents.push_back({"doc" + std::to_string(d), "", {}, std::nullopt});
    ec.encoded.push_back(docs[d]);
  }
  auto all = infer_corpus(model, ec);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    CHECK(all[d].doc_id == ec.corpus.documents[d].id);
    CHECK(all[d].theta == infer_theta(model, all[d].doc_id, docs[d]).theta);
  }
}

TEST_CASE("model file") {
  auto model = train_lda(small_docs(), 5, quick_config(2));
  model.set_vocab_fingerprint(0x0123456789abcdefULL);
  auto bytes = serialize(model);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "VLDA");
  CHECK(bytes[4] == kModelFormatVersion);
  CHECK(deserialize_topic_model(bytes) == model);
  CHECK(serialize(deserialize_topic_model(bytes)) == bytes);
  CHECK(deserialize_topic_model(bytes).vocab_fingerprint() == 0x0123456789abcdefULL);

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(deserialize_topic_model(bad), DataError);
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_topic_model(bytes), DataError);
}

TEST_CASE("topic TSV round-trips exactly") {
  std::vector<TopicDistribution> rows{{"a", {0.1, 0.2, 0.7000000000000001}}, {"b", {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  auto text = format_topics_tsv(rows);
  auto parsed = parse_topics_tsv(text);
  CHECK(parsed.at("a").theta == rows[0].theta);
  CHECK(parsed.at("b").theta == rows[1].theta);
  CHECK_THROWS_AS(parse_topics_tsv("a\t0.5\t0.4\n"), DataError);
  CHECK_THROWS_AS(parse_topics_tsv("a\t0.5\t0.5\nb\t1\n"), DataError);
  CHECK_THROWS_AS(parse_topics_tsv("a\t1\na\t1\n"), DataError);
}

}  // TEST_SUITE
