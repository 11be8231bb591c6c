#include <doctest.h>

#include <filesystem>
#include <string>

#include "veritopic/corpus.hpp"
#include "veritopic/error.hpp"
#include "veritopic/rng.hpp"

using namespace veritopic;

namespace {

StopwordSet english() { return load_stopwords(std::filesystem::path(VERITOPIC_SOURCE_DIR) / "data/stopwords_en.txt"); }

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += t + " ";
  return s;
}

Corpus tokens_corpus(std::vector<std::vector<std::string>> docs) {
  Corpus c;
  for (std::size_t i = 0; i < docs.size(); ++i) c.documents.push_back({"d" + std::to_string(i), "", docs[i], Label::kReal});
  return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("dataset parsing") {
  SUBCASE("header only") {
    auto c = parse_dataset("id,tweet,label\n", Split::kTrain);
    CHECK(c.size() == 0);
    CHECK(c.class_counts().total() == 0);
  }
  SUBCASE("labels are case-insensitive and order is kept") {
    auto c = parse_dataset("id,tweet,label\r\n2,hello,Real\r\n1,bye,FAKE\r\n", Split::kTrain);
    REQUIRE(c.size() == 2);
    CHECK(c.documents[0].id == "2");
    CHECK(c.documents[0].label == Label::kReal);
    CHECK(c.documents[1].label == Label::kFake);
    CHECK(c.class_counts().real == 1);
    CHECK(c.class_counts().fake == 1);
  }
  SUBCASE("quoted fields with commas, quotes and newlines") {
    auto c = parse_dataset("id,tweet,label\n7,\"a, \"\"quoted\"\"\nline\",fake\n", Split::kTest);
    REQUIRE(c.size() == 1);
    CHECK(c.documents[0].raw_text == "a, \"quoted\"\nline");
  }
  SUBCASE("extra columns and a BOM are tolerated") {
    auto c = parse_dataset("\xEF\xBB\xBFid,tweet,label,source\n1,x,real,web\n", Split::kTrain);
    CHECK(c.size() == 1);
  }
  SUBCASE("missing column names the column") {
    CHECK_THROWS_WITH_AS(parse_dataset("id,text,label\n", Split::kTrain), doctest::Contains("tweet"), DataError);
  }
  SUBCASE("bad label reports the row") {
    CHECK_THROWS_WITH_AS(parse_dataset("id,tweet,label\n1,a,real\n2,b,maybe\n", Split::kTrain),
                         doctest::Contains("row 2"), DataError);
  }
  SUBCASE("duplicate id") {
    CHECK_THROWS_WITH_AS(parse_dataset("id,tweet,label\n1,a,real\n1,b,fake\n", Split::kTrain),
                         doctest::Contains("duplicate id"), DataError);
  }
  SUBCASE("unsplit rows may omit the label") {
    auto c = parse_dataset("id,tweet,label\n1,a,\n", Split::kUnsplit);
    CHECK_FALSE(c.documents[0].label.has_value());
    CHECK_THROWS_AS(parse_dataset("id,tweet,label\n1,a,\n", Split::kTrain), DataError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset("/nonexistent/x.csv", Split::kTrain), DataError); }
}

TEST_CASE("stopword file") {
  auto stop = english();
  CHECK(stop.size() == 179);
  CHECK(stop.contains("the"));
  CHECK(stop.contains("didn't"));
  CHECK_FALSE(stop.contains("claim"));
  CHECK_FALSE(stop.contains("people"));
}

TEST_CASE("preprocess_text") {
  const auto stop = english();
  CHECK(preprocess_text("Check @WHO https://t.co/abc #COVID19 \xF0\x9F\x98\xB7", stop) ==
        std::vector<std::string>{"check", "covid19"});
  CHECK(preprocess_text("", stop).empty());
  CHECK(preprocess_text("   \t\n", stop).empty());
  CHECK(preprocess_text("!!! ### @@@", stop).empty());

  SUBCASE("apostrophes survive inside words, curly quotes fold") {
    CHECK(preprocess_text("India\xE2\x80\x99s cases", stop) == std::vector<std::string>{"india's", "cases"});
    CHECK(preprocess_text("'claim'", stop) == std::vector<std::string>{"claim"});
  }
  SUBCASE("glued urls and mentions") {
    CHECK(preprocess_text("#CoronaCheck:https://t.co/x countries-@DrTedros", stop) ==
          std::vector<std::string>{"coronacheck", "countries"});
    CHECK(preprocess_text("symptom www", stop) == std::vector<std::string>{"symptom"});
  }
  SUBCASE("long fake tweet with links and quotes") {
    const std::string raw =
        "No Nobel Prize laureate Tasuku Honjo didn't say the coronavirus is \"not natural\" as a post on Facebook "
        "claims. In fact Professor Honjo said he's \"greatly saddened\" his name was used to spread misinformation. "
        "This and more in the latest #CoronaCheck: https://t.co/rLcTuIcIHO https://t.co/WdoocCiXFu";
    const std::vector<std::string> expected{"nobel",     "prize",     "laureate", "tasuku",    "honjo",
                                            "say",       "coronavirus", "natural", "post",     "facebook",
                                            "claims",    "fact",      "professor", "honjo",    "said",
                                            "he's",      "greatly",   "saddened", "name",      "used",
                                            "spread",    "misinformation", "latest", "coronacheck"};
    const auto got = preprocess_text(raw, stop);
    CHECK(got == expected);
    for (const auto& t : got) {
      CHECK(t.find("https") == std::string::npos);
      CHECK(t.find('#') == std::string::npos);
    }
  }
}

TEST_CASE("preprocess_text is idempotent and emits only whitelisted characters") {
  const auto stop = english();
  const std::vector<std::string> fragments{
      "Hello", "WORLD", "http://a.b/c", "https://t.co/Z", "www.x.org", "@user", "@", "#Tag", "#", "\xF0\x9F\x98\xB7",
      "don't", "'", "''", "India\xE2\x80\x99s", "(www.y.com)", "#httpish", "a-b", "x@y", "12,000", "&amp;", "\xC3\xA9t\xC3\xA9",
      "The", "COVID-19", "...", "'quoted'", "it's", "\t", "\n", ":https://z"};
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      raw += fragments[rng.below(fragments.size())];
      if (rng.below(3) != 0) raw += ' ';
    }
    const auto once = preprocess_text(raw, stop);
    CHECK_MESSAGE(preprocess_text(join(once), stop) == once, raw);
    for (const auto& t : once) {
      CHECK_FALSE(t.empty());
      for (char c : t) CHECK(((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\''));
      CHECK_FALSE(stop.contains(t));
    }
  }
}

TEST_CASE("vocabulary") {
  auto c = tokens_corpus({{"a", "b"}, {"b", "c"}});
  SUBCASE("lexicographic ids") {
    auto v = Vocabulary::build(c, 1);
    CHECK(v.size() == 3);
    CHECK(v.find("a") == 0u);
    CHECK(v.find("b") == 1u);
    CHECK(v.find("c") == 2u);
    CHECK(v.doc_freq(1) == 2);
    CHECK(v.num_docs() == 2);
  }
  SUBCASE("min_df") {
    auto v = Vocabulary::build(c, 2);
    CHECK(v.size() == 1);
    CHECK(v.token(0) == "b");
  }
  SUBCASE("empty vocabulary") {
    CHECK_THROWS_WITH_AS(Vocabulary::build(c, 3), "empty vocabulary", DataError);
    CHECK_THROWS_AS(Vocabulary::build(tokens_corpus({{}}), 1), DataError);
  }
  SUBCASE("deterministic and invertible") {
    auto v1 = Vocabulary::build(c, 1);
    auto v2 = Vocabulary::build(c, 1);
    CHECK(v1 == v2);
    CHECK(serialize(encode_corpus(c, v1)) == serialize(encode_corpus(c, v2)));
    for (std::uint32_t id = 0; id < v1.size(); ++id) CHECK(v1.find(v1.token(id)) == id);
  }
}

TEST_CASE("encode_document") {
  auto v = Vocabulary::build(tokens_corpus({{"a", "b"}}), 1);
  CHECK(encode_document(std::vector<std::string>{"a", "x"}, v) == TokenIds{0});
  CHECK(encode_document(std::vector<std::string>{}, v).empty());
  CHECK(encode_document(std::vector<std::string>{"b", "b"}, v) == TokenIds{1, 1});
}

TEST_CASE("VCP1 container round-trips random corpora") {
  Rng rng(3);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "india's", "covid19", "x"};
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    c.split = static_cast<Split>(rng.below(4));
    const auto n = 1 + rng.below(8);
    for (std::uint64_t d = 0; d < n; ++d) {
      Document doc{"id" + std::to_string(d), "raw, text \"" + std::to_string(trial) + "\"", {}, std::nullopt};
      const auto len = rng.below(6);
      for (std::uint64_t i = 0; i < len; ++i) doc.tokens.push_back(words[rng.below(words.size())]);
      if (rng.below(4) != 0) doc.label = static_cast<Label>(rng.below(2));
      c.documents.push_back(doc);
    }
    for (auto& d : c.documents) d.tokens.push_back("alpha");
    auto ec = encode_corpus(c, Vocabulary::build(c, 1 + rng.below(std::min<std::uint64_t>(2, n))));
    auto bytes = serialize(ec);
    CHECK(bytes[0] == 'V');
    CHECK(bytes[4] == kCorpusFormatVersion);
    CHECK(deserialize_corpus(bytes) == ec);
  }
}

TEST_CASE("VCP1 rejects bad input") {
  auto c = tokens_corpus({{"a"}});
  auto bytes = serialize(encode_corpus(c, Vocabulary::build(c, 1)));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_corpus(bad), doctest::Contains("bad magic"), DataError);
  bytes.pop_back();
  CHECK_THROWS_WITH_AS(deserialize_corpus(bytes), doctest::Contains("truncated"), DataError);
}

}  // TEST_SUITE
