#pragma once

// Latent Dirichlet allocation trained by collapsed Gibbs sampling, plus
// fold-in inference of document-topic distributions for unseen documents.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "veritopic/corpus.hpp"
#include "veritopic/rng.hpp"

namespace veritopic {

struct LdaConfig {
  std::uint32_t topics = 10;
  double alpha = 0.1;  // symmetric document-topic pseudo-count
  double beta = 0.01;  // symmetric topic-word pseudo-count
  std::uint32_t iterations = 500;
  std::uint32_t burn_in = 300;
  std::uint64_t seed = 0;
  std::uint32_t infer_iterations = 50;

  // Throws std::invalid_argument on an invalid combination.
  void validate() const;
  // Fold-in sweeps discarded before averaging: half of infer_iterations.
  std::uint32_t infer_burn_in() const { return infer_iterations / 2; }

  bool operator==(const LdaConfig&) const = default;
};

// Counts seen by one token with its own assignment removed.
struct TokenCounts {
  std::span<const std::int64_t> doc_topic;    // n_dk, length K
  std::span<const std::int64_t> topic_word;   // n_kw for this word, length K
  std::span<const std::int64_t> topic_total;  // n_k, length K
};

// Normalized full conditional p(z = k | rest), proportional to
// (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta).
// Throws std::invalid_argument on negative counts or mismatched lengths.
std::vector<double> conditional_distribution(const TokenCounts& counts, std::size_t vocab_size, double alpha,
                                             double beta);

// Sampler state over an encoded corpus. Owns the topic assignments and all
// three count tables.
class GibbsSampler {
 public:
  GibbsSampler(std::span<const TokenIds> docs, std::size_t vocab_size, const LdaConfig& config);

  // One sequential pass resampling every token.
  void sweep();

  // log p(w, z | alpha, beta) under the current assignments.
  double log_likelihood() const;

  // Current single-sample estimate (n_kw + beta) / (n_k + V beta), row-major K x V.
  std::vector<double> phi_sample() const;

  std::size_t topics() const { return topics_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_docs() const { return docs_.size(); }
  std::size_t num_tokens() const { return num_tokens_; }
  std::span<const std::int64_t> doc_topic(std::size_t d) const {
    return {n_dk_.data() + d * topics_, topics_};
  }
  std::int64_t topic_word(std::size_t k, std::size_t w) const { return n_kw_[k * vocab_size_ + w]; }
  std::span<const std::int64_t> topic_word_table() const { return n_kw_; }
  std::span<const std::int64_t> topic_totals() const { return n_k_; }
  std::span<const TokenIds> documents() const { return docs_; }
  std::span<const std::uint32_t> assignments(std::size_t d) const { return z_[d]; }

 private:
  std::span<const TokenIds> docs_;
  std::size_t vocab_size_;
  std::size_t topics_;
  double alpha_;
  double beta_;
  Rng rng_;
  std::size_t num_tokens_ = 0;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<std::int64_t> n_dk_;  // D x K
  std::vector<std::int64_t> n_kw_;  // K x V
  std::vector<std::int64_t> n_k_;   // K
  std::vector<double> weights_;
};

struct TopicDistribution {
  std::string doc_id;
  std::vector<double> theta;
};

class TopicModel {
 public:
  TopicModel() = default;
  TopicModel(LdaConfig config, std::size_t vocab_size, std::vector<std::int64_t> topic_word,
             std::vector<double> phi);

  const LdaConfig& config() const { return config_; }
  std::size_t topics() const { return config_.topics; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const std::int64_t> topic_word() const { return n_kw_; }
  std::span<const std::int64_t> topic_totals() const { return n_k_; }
  // Row-major K x V; each row sums to 1.
  std::span<const double> phi() const { return phi_; }
  std::span<const double> phi_row(std::size_t k) const { return {phi_.data() + k * vocab_size_, vocab_size_}; }
  bool trained() const { return !phi_.empty(); }
  // Identifies the vocabulary the model was trained on; 0 when unknown.
  std::uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }
  void set_vocab_fingerprint(std::uint64_t fp) { vocab_fingerprint_ = fp; }

  bool operator==(const TopicModel&) const = default;

 private:
  LdaConfig config_;
  std::size_t vocab_size_ = 0;
  std::vector<std::int64_t> n_kw_;
  std::vector<std::int64_t> n_k_;
  std::vector<double> phi_;
  std::uint64_t vocab_fingerprint_ = 0;
};

// Called after every sweep with the 1-based sweep number.
using SweepObserver = std::function<void(const GibbsSampler&, std::uint32_t sweep)>;

// phi is the mean of the per-sweep estimates over sweeps burn_in+1..iterations
// (the final sample when there are none). Deterministic for a fixed seed.
TopicModel train_lda(std::span<const TokenIds> docs, std::size_t vocab_size, const LdaConfig& config,
                     const SweepObserver& observer = {});

// Fold-in Gibbs with phi frozen. The random stream depends only on
// (config.seed, doc_id). Empty documents get the prior mean.
TopicDistribution infer_theta(const TopicModel& model, std::string_view doc_id, std::span<const std::uint32_t> doc);

// Same as calling infer_theta per document; runs documents in parallel.
std::vector<TopicDistribution> infer_corpus(const TopicModel& model, const EncodedCorpus& corpus);

// Joint log-likelihood of a corpus under fixed assignments; `assignments`
// parallels `docs`.
double log_likelihood(std::span<const TokenIds> docs, std::span<const std::vector<std::uint32_t>> assignments,
                      std::size_t topics, std::size_t vocab_size, double alpha, double beta);

inline constexpr std::uint8_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize(const TopicModel& model);
TopicModel deserialize_topic_model(std::span<const std::uint8_t> bytes);
void save_topic_model(const TopicModel& model, const std::filesystem::path& path);
TopicModel load_topic_model(const std::filesystem::path& path);

// TSV rows: doc_id<TAB>p_0<TAB>...<TAB>p_{K-1}, values printed round-trip exact.
std::string format_topics_tsv(std::span<const TopicDistribution> rows);
std::map<std::string, TopicDistribution> parse_topics_tsv(std::string_view text);
void write_topics_tsv(std::span<const TopicDistribution> rows, const std::filesystem::path& path);
std::map<std::string, TopicDistribution> read_topics_tsv(const std::filesystem::path& path);

}  // namespace veritopic
