#include "veritopic/corpus.hpp"

#include <algorithm>
#include <unordered_map>

#include "veritopic/binio.hpp"
#include "veritopic/csv.hpp"
#include "veritopic/error.hpp"

namespace veritopic {

std::string_view label_name(Label label) { return label == Label::kReal ? "real" : "fake"; }

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_kept(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\''; }

bool is_username_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

bool looks_like_url(std::string_view token) {
  return token.starts_with("http") || token.starts_with("www");
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Lowercases ASCII and folds U+2018/U+2019 to an apostrophe. Other bytes are
// passed through; the whitelist step removes them later.
std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i + 2 < raw.size() && static_cast<unsigned char>(raw[i]) == 0xE2 &&
        static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(raw[i + 2]) == 0x98 || static_cast<unsigned char>(raw[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 2;
      continue;
    }
    char c = raw[i];
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::string strip_token(std::string_view token) {
  // Glued URLs: "text:https://t.co/x" keeps only "text:".
  for (std::string_view scheme : {"http://", "https://"}) {
    auto pos = token.find(scheme);
    if (pos != std::string_view::npos) token = token.substr(0, pos);
  }
  std::string out;
  out.reserve(token.size());
  for (std::size_t i = 0; i < token.size(); ++i) {
    char c = token[i];
    if (c == '@' && (i + 1 < token.size() && is_username_char(token[i + 1]))) {
      while (i + 1 < token.size() && is_username_char(token[i + 1])) ++i;
      continue;
    }
    if (c == '#') continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::optional<Label> parse_label(std::string_view text) {
  std::string lower = ascii_lower(trim(text));
  if (lower == "fake") return Label::kFake;
  if (lower == "real") return Label::kReal;
  return std::nullopt;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
    case Split::kUnsplit:
      break;
  }
  return "unsplit";
}

Split parse_split(std::string_view text) {
  std::string lower = ascii_lower(trim(text));
  if (lower == "train") return Split::kTrain;
  if (lower == "validation" || lower == "val") return Split::kValidation;
  if (lower == "test") return Split::kTest;
  if (lower == "unsplit") return Split::kUnsplit;
  throw DataError("unknown split: " + std::string(text));
}

ClassCounts Corpus::class_counts() const {
  ClassCounts counts;
  for (const auto& doc : documents) {
    if (!doc.label) {
      ++counts.unlabeled;
    } else if (*doc.label == Label::kReal) {
      ++counts.real;
    } else {
      ++counts.fake;
    }
  }
  return counts;
}

Corpus parse_dataset(std::string_view csv_text, Split split) {
  auto records = csv::parse(csv_text);
  if (records.empty()) throw DataError("schema error: missing header row");

  const auto& header = records.front().fields;
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (ascii_lower(trim(header[i])) == name) return i;
    }
    throw DataError("schema error: missing column '" + std::string(name) + "'");
  };
  const std::size_t id_col = column("id");
  const std::size_t text_col = column("tweet");
  const std::size_t label_col = column("label");

  Corpus corpus;
  corpus.split = split;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(rec.line) + ")";
    if (rec.fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.fields.size()));
    }
    Document doc;
    doc.id = std::string(trim(rec.fields[id_col]));
    if (doc.id.empty()) throw DataError(where + ": empty id");
    doc.raw_text = rec.fields[text_col];
    std::string_view label_text = trim(rec.fields[label_col]);
    if (!(label_text.empty() && split == Split::kUnsplit)) {
      doc.label = parse_label(label_text);
      if (!doc.label) throw DataError(where + ": unparseable label '" + std::string(label_text) + "'");
    }
    if (auto [it, inserted] = seen.emplace(doc.id, r); !inserted) {
      throw DataError(where + ": duplicate id '" + doc.id + "' (first seen in row " + std::to_string(it->second) +
                      ")");
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_dataset(const std::filesystem::path& path, Split split) {
  std::string text = binio::read_text_file(path);
  try {
    return parse_dataset(text, split);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::string text = binio::read_text_file(path);
  StopwordSet words;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    if (!line.empty() && line.front() != '#') words.insert(ascii_lower(line));
    start = end + 1;
  }
  return words;
}

std::vector<std::string> preprocess_text(std::string_view raw, const StopwordSet& stopwords) {
  const std::string lowered = normalize(raw);

  std::string cleaned;
  cleaned.reserve(lowered.size());
  for (std::string_view token : split_ws(lowered)) {
    if (looks_like_url(token) || token.starts_with('@')) continue;
    for (char c : strip_token(token)) cleaned.push_back(is_kept(c) ? c : ' ');
    cleaned.push_back(' ');
  }

  std::vector<std::string> tokens;
  for (std::string_view token : split_ws(cleaned)) {
    while (!token.empty() && token.front() == '\'') token.remove_prefix(1);
    while (!token.empty() && token.back() == '\'') token.remove_suffix(1);
    if (token.empty() || looks_like_url(token)) continue;
    std::string t(token);
    if (stopwords.contains(t)) continue;
    tokens.push_back(std::move(t));
  }
  return tokens;
}

void preprocess_corpus(Corpus& corpus, const StopwordSet& stopwords) {
  for (auto& doc : corpus.documents) doc.tokens = preprocess_text(doc.raw_text, stopwords);
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t min_df) {
  if (min_df < 1) throw DataError("min_df must be >= 1");
  std::map<std::string, std::uint32_t, std::less<>> df;
  for (const auto& doc : corpus.documents) {
    std::vector<std::string_view> distinct(doc.tokens.begin(), doc.tokens.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto t : distinct) {
      auto it = df.find(t);
      if (it == df.end()) it = df.emplace(std::string(t), 0).first;
      ++it->second;
    }
  }
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> freqs;
  for (auto& [token, count] : df) {
    if (count >= min_df) {
      tokens.push_back(token);
      freqs.push_back(count);
    }
  }
  if (tokens.empty()) throw DataError("empty vocabulary");
  return from_parts(std::move(tokens), std::move(freqs), static_cast<std::uint32_t>(corpus.size()));
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> tokens, std::vector<std::uint32_t> doc_freq,
                                  std::uint32_t num_docs) {
  if (tokens.size() != doc_freq.size()) throw DataError("vocabulary: token/frequency count mismatch");
  Vocabulary v;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !(tokens[i - 1] < tokens[i])) {
      throw DataError("vocabulary: tokens not in strictly increasing order at id " + std::to_string(i));
    }
    v.token_to_id_.emplace(tokens[i], static_cast<std::uint32_t>(i));
  }
  v.id_to_token_ = std::move(tokens);
  v.doc_freq_ = std::move(doc_freq);
  v.num_docs_ = num_docs;
  return v;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token_) {
    for (unsigned char c : t) h = (h ^ c) * 0x100000001b3ULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenIds encode_document(std::span<const std::string> tokens, const Vocabulary& vocab) {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = vocab.find(t)) ids.push_back(*id);
  }
  return ids;
}

bool EncodedCorpus::operator==(const EncodedCorpus& other) const {
  if (corpus.split != other.corpus.split || corpus.size() != other.corpus.size()) return false;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& a = corpus.documents[i];
    const auto& b = other.corpus.documents[i];
    if (a.id != b.id || a.raw_text != b.raw_text || a.tokens != b.tokens || a.label != b.label) return false;
  }
  return vocab == other.vocab && encoded == other.encoded;
}

EncodedCorpus encode_corpus(Corpus corpus, Vocabulary vocab) {
  EncodedCorpus out{std::move(corpus), std::move(vocab), {}};
  out.encoded.reserve(out.corpus.size());
  for (const auto& doc : out.corpus.documents) out.encoded.push_back(encode_document(doc.tokens, out.vocab));
  return out;
}

namespace {

constexpr std::string_view kCorpusMagic = "VCP1";
constexpr std::uint8_t kNoLabel = 0xFF;

}  // namespace

std::vector<std::uint8_t> serialize(const EncodedCorpus& ec) {
  binio::Writer w;
  w.raw(kCorpusMagic);
  w.u8(kCorpusFormatVersion);
  w.u8(static_cast<std::uint8_t>(ec.corpus.split));

  w.u32(static_cast<std::uint32_t>(ec.vocab.size()));
  w.u32(ec.vocab.num_docs());
  for (std::uint32_t i = 0; i < ec.vocab.size(); ++i) {
    w.str16(ec.vocab.token(i));
    w.u32(ec.vocab.doc_freq(i));
  }

  w.u32(static_cast<std::uint32_t>(ec.corpus.size()));
  for (std::size_t d = 0; d < ec.corpus.size(); ++d) {
    const auto& doc = ec.corpus.documents[d];
    w.str16(doc.id);
    w.u8(doc.label ? static_cast<std::uint8_t>(*doc.label) : kNoLabel);
    w.u32(static_cast<std::uint32_t>(doc.raw_text.size()));
    w.raw(doc.raw_text);
    w.u32(static_cast<std::uint32_t>(doc.tokens.size()));
    for (const auto& t : doc.tokens) w.str16(t);
    const auto& ids = ec.encoded.at(d);
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (auto id : ids) w.u32(id);
  }
  return w.take();
}

EncodedCorpus deserialize_corpus(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  try {
    if (r.raw(4) != kCorpusMagic) throw DataError("not a corpus file (bad magic)");
    if (auto v = r.u8(); v != kCorpusFormatVersion) {
      throw DataError("unsupported corpus format version " + std::to_string(v));
    }
    EncodedCorpus ec;
    auto split = r.u8();
    if (split > static_cast<std::uint8_t>(Split::kUnsplit)) throw DataError("corpus file: bad split tag");
    ec.corpus.split = static_cast<Split>(split);

    const std::uint32_t vsize = r.u32();
    const std::uint32_t num_docs = r.u32();
    std::vector<std::string> tokens;
    std::vector<std::uint32_t> freqs;
    for (std::uint32_t i = 0; i < vsize; ++i) {
      tokens.push_back(r.str16());
      freqs.push_back(r.u32());
    }
    ec.vocab = Vocabulary::from_parts(std::move(tokens), std::move(freqs), num_docs);

    const std::uint32_t ndocs = r.u32();
    for (std::uint32_t d = 0; d < ndocs; ++d) {
      Document doc;
      doc.id = r.str16();
      auto label = r.u8();
      if (label == 0 || label == 1) {
        doc.label = static_cast<Label>(label);
      } else if (label != kNoLabel) {
        throw DataError("corpus file: bad label tag in document " + std::to_string(d));
      }
      doc.raw_text = r.raw(r.u32());
      const std::uint32_t ntok = r.u32();
      for (std::uint32_t i = 0; i < ntok; ++i) doc.tokens.push_back(r.str16());
      TokenIds ids(r.u32());
      for (auto& id : ids) {
        id = r.u32();
        if (id >= vsize) throw DataError("corpus file: token id out of range in document " + std::to_string(d));
      }
      ec.corpus.documents.push_back(std::move(doc));
      ec.encoded.push_back(std::move(ids));
    }
    if (r.remaining() != 0) throw DataError("corpus file: trailing bytes");
    return ec;
  } catch (const binio::Truncated&) {
    throw DataError("corpus file truncated at byte " + std::to_string(r.position()));
  }
}

void save_corpus(const EncodedCorpus& corpus, const std::filesystem::path& path) {
  binio::write_file(path, serialize(corpus));
}

EncodedCorpus load_corpus(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return deserialize_corpus(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace veritopic
