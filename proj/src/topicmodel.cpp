#include "veritopic/topicmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "veritopic/binio.hpp"
#include "veritopic/error.hpp"
#include "veritopic/tsv.hpp"

namespace veritopic {

namespace {

inline double gibbs_weight(double n_dk, double n_kw, double n_k, double alpha, double beta, double vbeta) {
  return (n_dk + alpha) * (n_kw + beta) / (n_k + vbeta);
}

// Index of the first cumulative weight exceeding u * total.
std::size_t sample_index(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

void normalize_rows(std::vector<double>& m, std::size_t cols) {
  for (std::size_t off = 0; off < m.size(); off += cols) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += m[off + j];
    for (std::size_t j = 0; j < cols; ++j) m[off + j] /= s;
  }
}

}  // namespace

void LdaConfig::validate() const {
  if (topics < 1) throw std::invalid_argument("LDA: topics must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("LDA: alpha must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("LDA: beta must be > 0");
  if (iterations < burn_in) throw std::invalid_argument("LDA: iterations must be >= burn_in");
  if (infer_iterations < 1) throw std::invalid_argument("LDA: infer_iterations must be >= 1");
}

std::vector<double> conditional_distribution(const TokenCounts& counts, std::size_t vocab_size, double alpha,
                                             double beta) {
  const std::size_t k = counts.doc_topic.size();
  if (k == 0 || counts.topic_word.size() != k || counts.topic_total.size() != k) {
    throw std::invalid_argument("conditional_distribution: count vectors must have equal non-zero length");
  }
  if (vocab_size == 0) throw std::invalid_argument("conditional_distribution: vocab_size must be >= 1");
  auto negative = [](std::span<const std::int64_t> s) {
    return std::any_of(s.begin(), s.end(), [](std::int64_t c) { return c < 0; });
  };
  if (negative(counts.doc_topic) || negative(counts.topic_word) || negative(counts.topic_total)) {
    throw std::invalid_argument("conditional_distribution: negative count");
  }
  const double vbeta = static_cast<double>(vocab_size) * beta;
  std::vector<double> p(k);
  double total = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    p[t] = gibbs_weight(static_cast<double>(counts.doc_topic[t]), static_cast<double>(counts.topic_word[t]),
                        static_cast<double>(counts.topic_total[t]), alpha, beta, vbeta);
    total += p[t];
  }
  for (auto& x : p) x /= total;
  return p;
}

GibbsSampler::GibbsSampler(std::span<const TokenIds> docs, std::size_t vocab_size, const LdaConfig& config)
    : docs_(docs),
      vocab_size_(vocab_size),
      topics_(config.topics),
      alpha_(config.alpha),
      beta_(config.beta),
      rng_(config.seed),
      z_(docs.size()),
      n_dk_(docs.size() * config.topics, 0),
      n_kw_(config.topics * vocab_size, 0),
      n_k_(config.topics, 0),
      weights_(config.topics) {
  config.validate();
  if (vocab_size == 0) throw std::invalid_argument("LDA: vocabulary size must be >= 1");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z_[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const std::uint32_t w = docs[d][i];
      if (w >= vocab_size) throw std::invalid_argument("LDA: token id out of range in document " + std::to_string(d));
      const auto k = static_cast<std::uint32_t>(rng_.below(topics_));
      z_[d][i] = k;
      ++n_dk_[d * topics_ + k];
      ++n_kw_[k * vocab_size_ + w];
      ++n_k_[k];
      ++num_tokens_;
    }
  }
}

void GibbsSampler::sweep() {
  const double vbeta = static_cast<double>(vocab_size_) * beta_;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    std::int64_t* ndk = n_dk_.data() + d * topics_;
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const std::uint32_t w = docs_[d][i];
      std::uint32_t k = z_[d][i];
      --ndk[k];
      --n_kw_[k * vocab_size_ + w];
      --n_k_[k];

      double cum = 0.0;
      for (std::size_t t = 0; t < topics_; ++t) {
        cum += gibbs_weight(static_cast<double>(ndk[t]), static_cast<double>(n_kw_[t * vocab_size_ + w]),
                            static_cast<double>(n_k_[t]), alpha_, beta_, vbeta);
        weights_[t] = cum;
      }
      k = static_cast<std::uint32_t>(sample_index(weights_, rng_.uniform()));

      z_[d][i] = k;
      ++ndk[k];
      ++n_kw_[k * vocab_size_ + w];
      ++n_k_[k];
    }
  }
}

double GibbsSampler::log_likelihood() const {
  return veritopic::log_likelihood(docs_, z_, topics_, vocab_size_, alpha_, beta_);
}

std::vector<double> GibbsSampler::phi_sample() const {
  std::vector<double> phi(topics_ * vocab_size_);
  const double vbeta = static_cast<double>(vocab_size_) * beta_;
  for (std::size_t k = 0; k < topics_; ++k) {
    const double denom = static_cast<double>(n_k_[k]) + vbeta;
    for (std::size_t w = 0; w < vocab_size_; ++w) {
      phi[k * vocab_size_ + w] = (static_cast<double>(n_kw_[k * vocab_size_ + w]) + beta_) / denom;
    }
  }
  return phi;
}

double log_likelihood(std::span<const TokenIds> docs, std::span<const std::vector<std::uint32_t>> assignments,
                      std::size_t topics, std::size_t vocab_size, double alpha, double beta) {
  if (assignments.size() != docs.size()) throw std::invalid_argument("log_likelihood: assignments/docs mismatch");
  std::vector<std::int64_t> n_kw(topics * vocab_size, 0);
  std::vector<std::int64_t> n_k(topics, 0);
  std::vector<std::int64_t> n_dk(topics);
  const double k_alpha = static_cast<double>(topics) * alpha;
  const double v_beta = static_cast<double>(vocab_size) * beta;

  double ll = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (assignments[d].size() != docs[d].size()) {
      throw std::invalid_argument("log_likelihood: assignment length mismatch in document " + std::to_string(d));
    }
    std::fill(n_dk.begin(), n_dk.end(), 0);
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto k = assignments[d][i];
      if (k >= topics || docs[d][i] >= vocab_size) {
        throw std::invalid_argument("log_likelihood: topic or word id out of range in document " + std::to_string(d));
      }
      ++n_dk[k];
      ++n_kw[k * vocab_size + docs[d][i]];
      ++n_k[k];
    }
    ll += std::lgamma(k_alpha) - static_cast<double>(topics) * std::lgamma(alpha);
    for (std::size_t k = 0; k < topics; ++k) ll += std::lgamma(static_cast<double>(n_dk[k]) + alpha);
    ll -= std::lgamma(static_cast<double>(docs[d].size()) + k_alpha);
  }
  if (docs.empty()) return 0.0;
  const double lg_beta = std::lgamma(beta);
  for (std::size_t k = 0; k < topics; ++k) {
    ll += std::lgamma(v_beta) - std::lgamma(static_cast<double>(n_k[k]) + v_beta);
    for (std::size_t w = 0; w < vocab_size; ++w) {
      const auto c = n_kw[k * vocab_size + w];
      if (c != 0) ll += std::lgamma(static_cast<double>(c) + beta) - lg_beta;
    }
  }
  return ll;
}

TopicModel::TopicModel(LdaConfig config, std::size_t vocab_size, std::vector<std::int64_t> topic_word,
                       std::vector<double> phi)
    : config_(config), vocab_size_(vocab_size), n_kw_(std::move(topic_word)), phi_(std::move(phi)) {
  config_.validate();
  const std::size_t cells = static_cast<std::size_t>(config_.topics) * vocab_size_;
  if (n_kw_.size() != cells || phi_.size() != cells) throw std::invalid_argument("TopicModel: table size mismatch");
  n_k_.assign(config_.topics, 0);
  for (std::size_t k = 0; k < config_.topics; ++k) {
    for (std::size_t w = 0; w < vocab_size_; ++w) {
      const auto c = n_kw_[k * vocab_size_ + w];
      if (c < 0) throw std::invalid_argument("TopicModel: negative count");
      n_k_[k] += c;
    }
  }
}

TopicModel train_lda(std::span<const TokenIds> docs, std::size_t vocab_size, const LdaConfig& config,
                     const SweepObserver& observer) {
  config.validate();
  GibbsSampler sampler(docs, vocab_size, config);
  if (sampler.num_tokens() == 0) throw DataError("no tokens to sample");

  std::vector<double> phi_sum(static_cast<std::size_t>(config.topics) * vocab_size, 0.0);
  std::uint32_t averaged = 0;
  for (std::uint32_t s = 1; s <= config.iterations; ++s) {
    sampler.sweep();
    if (s > config.burn_in) {
      auto phi = sampler.phi_sample();
      for (std::size_t i = 0; i < phi.size(); ++i) phi_sum[i] += phi[i];
      ++averaged;
    }
    if (observer) observer(sampler, s);
  }
  if (averaged == 0) {
    phi_sum = sampler.phi_sample();
  } else {
    for (auto& x : phi_sum) x /= averaged;
  }
  normalize_rows(phi_sum, vocab_size);

  std::vector<std::int64_t> n_kw(sampler.topic_word_table().begin(), sampler.topic_word_table().end());
  return TopicModel(config, vocab_size, std::move(n_kw), std::move(phi_sum));
}

TopicDistribution infer_theta(const TopicModel& model, std::string_view doc_id, std::span<const std::uint32_t> doc) {
  if (!model.trained()) throw std::invalid_argument("infer_theta: model not trained");
  const auto& cfg = model.config();
  const std::size_t k_count = cfg.topics;
  const double k_alpha = static_cast<double>(k_count) * cfg.alpha;
  TopicDistribution out{std::string(doc_id), std::vector<double>(k_count, 1.0 / static_cast<double>(k_count))};
  if (doc.empty()) return out;

  for (auto w : doc) {
    if (w >= model.vocab_size()) throw std::invalid_argument("infer_theta: token id out of range");
  }
  const auto phi = model.phi();
  const std::size_t v = model.vocab_size();
  Rng rng = Rng::derived(cfg.seed, doc_id);

  std::vector<std::uint32_t> z(doc.size());
  std::vector<std::int64_t> n_dk(k_count, 0);
  for (auto& zi : z) {
    zi = static_cast<std::uint32_t>(rng.below(k_count));
    ++n_dk[zi];
  }

  std::vector<double> cumulative(k_count);
  std::vector<double> theta_sum(k_count, 0.0);
  std::uint32_t averaged = 0;
  const double norm = static_cast<double>(doc.size()) + k_alpha;
  for (std::uint32_t s = 1; s <= cfg.infer_iterations; ++s) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      --n_dk[z[i]];
      double cum = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        cum += (static_cast<double>(n_dk[k]) + cfg.alpha) * phi[k * v + doc[i]];
        cumulative[k] = cum;
      }
      z[i] = static_cast<std::uint32_t>(sample_index(cumulative, rng.uniform()));
      ++n_dk[z[i]];
    }
    if (s > cfg.infer_burn_in()) {
      for (std::size_t k = 0; k < k_count; ++k) theta_sum[k] += (static_cast<double>(n_dk[k]) + cfg.alpha) / norm;
      ++averaged;
    }
  }
  double total = 0.0;
  for (auto x : theta_sum) total += x;
  for (std::size_t k = 0; k < k_count; ++k) out.theta[k] = theta_sum[k] / total;
  return out;
}

std::vector<TopicDistribution> infer_corpus(const TopicModel& model, const EncodedCorpus& corpus) {
  const std::size_t n = corpus.corpus.size();
  std::vector<TopicDistribution> out(n);
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += workers) {
          out[i] = infer_theta(model, corpus.corpus.documents[i].id, corpus.encoded[i]);
        }
      });
    }
  }
  return out;
}

namespace {

constexpr std::string_view kModelMagic = "VLDA";

}  // namespace

std::vector<std::uint8_t> serialize(const TopicModel& model) {
  if (!model.trained()) throw std::invalid_argument("cannot serialize an untrained topic model");
  const auto& c = model.config();
  binio::Writer w;
  w.raw(kModelMagic);
  w.u8(kModelFormatVersion);
  w.str16(kRngAlgorithmId);
  w.u32(c.topics);
  w.f64(c.alpha);
  w.f64(c.beta);
  w.u32(c.iterations);
  w.u32(c.burn_in);
  w.u64(c.seed);
  w.u32(c.infer_iterations);
  w.u32(static_cast<std::uint32_t>(model.vocab_size()));
  w.u64(model.vocab_fingerprint());
  for (auto n : model.topic_word()) w.u64(static_cast<std::uint64_t>(n));
  for (auto p : model.phi()) w.f64(p);
  return w.take();
}

TopicModel deserialize_topic_model(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  try {
    if (r.raw(4) != kModelMagic) throw DataError("not a topic model file (bad magic)");
    if (auto v = r.u8(); v != kModelFormatVersion) {
      throw DataError("unsupported topic model format version " + std::to_string(v));
    }
    if (auto id = r.str16(); id != kRngAlgorithmId) {
      throw DataError("topic model was produced with RNG '" + id + "', expected '" + std::string(kRngAlgorithmId) +
                      "'");
    }
    LdaConfig c;
    c.topics = r.u32();
    c.alpha = r.f64();
    c.beta = r.f64();
    c.iterations = r.u32();
    c.burn_in = r.u32();
    c.seed = r.u64();
    c.infer_iterations = r.u32();
    const std::size_t v = r.u32();
    const std::uint64_t fingerprint = r.u64();
    const std::size_t cells = static_cast<std::size_t>(c.topics) * v;
    if (cells * 16 != r.remaining()) throw DataError("topic model file: table size does not match header");
    std::vector<std::int64_t> n_kw(cells);
    for (auto& n : n_kw) n = static_cast<std::int64_t>(r.u64());
    std::vector<double> phi(cells);
    for (auto& p : phi) p = r.f64();
    try {
      TopicModel model(c, v, std::move(n_kw), std::move(phi));
      model.set_vocab_fingerprint(fingerprint);
      return model;
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("topic model file: ") + e.what());
    }
  } catch (const binio::Truncated&) {
    throw DataError("topic model file truncated");
  }
}

void save_topic_model(const TopicModel& model, const std::filesystem::path& path) {
  binio::write_file(path, serialize(model));
}

TopicModel load_topic_model(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return deserialize_topic_model(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_topics_tsv(std::span<const TopicDistribution> rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.doc_id;
    for (double p : row.theta) {
      out.push_back('\t');
      tsv::append_double(out, p);
    }
    out.push_back('\n');
  }
  return out;
}

std::map<std::string, TopicDistribution> parse_topics_tsv(std::string_view text) {
  std::map<std::string, TopicDistribution> rows;
  std::size_t expected_k = 0;
  tsv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const std::string where = "topics line " + std::to_string(line_no);
    auto fields = tsv::split_on(line, '\t');
    if (fields.size() < 2) throw DataError(where + ": expected doc_id and at least one probability");
    TopicDistribution td{std::string(fields[0]), {}};
    double sum = 0.0;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double p = tsv::parse_double(fields[i], where);
      if (!std::isfinite(p) || p < 0.0) throw DataError(where + ": probability out of range");
      td.theta.push_back(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError(where + ": probabilities do not sum to 1");
    if (expected_k == 0) expected_k = td.theta.size();
    if (td.theta.size() != expected_k) throw DataError(where + ": inconsistent topic count");
    if (rows.contains(td.doc_id)) throw DataError(where + ": duplicate doc_id '" + td.doc_id + "'");
    rows.emplace(td.doc_id, std::move(td));
  });
  return rows;
}

void write_topics_tsv(std::span<const TopicDistribution> rows, const std::filesystem::path& path) {
  binio::write_text_file(path, format_topics_tsv(rows));
}

std::map<std::string, TopicDistribution> read_topics_tsv(const std::filesystem::path& path) {
  try {
    return parse_topics_tsv(binio::read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace veritopic
