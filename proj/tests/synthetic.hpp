#pragma once

// Synthetic data with known structure, shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "veritopic/corpus.hpp"
#include "veritopic/encoder.hpp"

namespace synthetic {

struct TopicCorpus {
  std::size_t vocab_size = 0;
  std::size_t topics = 0;
  std::vector<std::vector<double>> phi;  // generating topic-word rows
  std::vector<veritopic::TokenIds> docs;
};

// Topic t owns words [10t, 10t + 10) with weights proportional to 1/(j+1).
inline TopicCorpus three_topic_corpus(std::size_t num_docs = 200, std::size_t doc_len = 50, unsigned seed = 11) {
  TopicCorpus tc;
  tc.topics = 3;
  tc.vocab_size = 30;
  for (std::size_t t = 0; t < tc.topics; ++t) {
    std::vector<double> row(tc.vocab_size, 0.0);
    double z = 0.0;
    for (std::size_t j = 0; j < 10; ++j) z += 1.0 / static_cast<double>(j + 1);
    for (std::size_t j = 0; j < 10; ++j) row[10 * t + j] = 1.0 / static_cast<double>(j + 1) / z;
    tc.phi.push_back(row);
  }
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  std::uniform_int_distribution<std::size_t> len_jitter(0, 10);
  for (std::size_t d = 0; d < num_docs; ++d) {
    std::vector<double> theta(tc.topics);
    for (auto& x : theta) x = gamma(gen) + 1e-12;
    std::discrete_distribution<std::size_t> pick_topic(theta.begin(), theta.end());
    veritopic::TokenIds doc;
    const std::size_t len = doc_len - 5 + len_jitter(gen);
    for (std::size_t i = 0; i < len; ++i) {
      const auto& row = tc.phi[pick_topic(gen)];
      std::discrete_distribution<std::uint32_t> pick_word(row.begin(), row.end());
      doc.push_back(pick_word(gen));
    }
    tc.docs.push_back(std::move(doc));
  }
  return tc;
}

inline double l1(const std::vector<double>& a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

struct Alignment {
  std::vector<std::size_t> learned_for_true;  // learned topic index per true topic
  double mean_l1 = 0.0;
};

// Repeatedly match the closest remaining (true, learned) pair under L1.
template <typename RowFn>
Alignment greedy_align(const std::vector<std::vector<double>>& truth, std::size_t learned_topics, RowFn learned_row) {
  Alignment a;
  a.learned_for_true.assign(truth.size(), SIZE_MAX);
  std::vector<bool> used(learned_topics, false);
  double total = 0.0;
  for (std::size_t round = 0; round < truth.size(); ++round) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bt = 0, bl = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (a.learned_for_true[t] != SIZE_MAX) continue;
      for (std::size_t k = 0; k < learned_topics; ++k) {
        if (used[k]) continue;
        const double dist = l1(truth[t], learned_row(k));
        if (dist < best) {
          best = dist;
          bt = t;
          bl = k;
        }
      }
    }
    a.learned_for_true[bt] = bl;
    used[bl] = true;
    total += best;
  }
  a.mean_l1 = total / static_cast<double>(truth.size());
  return a;
}

struct Blobs {
  std::vector<veritopic::FusedFeatures> features;
  std::vector<veritopic::Label> labels;
};

// Two 2-D clusters separated by a gap of `margin` along the first axis, each
// point fused with a topic distribution.
inline Blobs separable_blobs(std::size_t n = 400, double margin = 1.0, unsigned seed = 5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  veritopic::EmbeddingMatrix ce(2);
  std::map<std::string, veritopic::TopicDistribution> topics;
  std::vector<std::string> ids;
  Blobs b;
  for (std::size_t i = 0; i < n; ++i) {
    const bool real = i % 2 == 1;
    const double x0 = real ? margin / 2 + u(gen) : -margin / 2 - u(gen);
    const double x1 = 2.0 * u(gen) - 1.0;
    const std::string id = "p" + std::to_string(i);
    ce.insert(id, {static_cast<float>(x0), static_cast<float>(x1)});
    const double t = u(gen);
    topics.emplace(id, veritopic::TopicDistribution{id, {t, 1.0 - t}});
    ids.push_back(id);
    b.labels.push_back(real ? veritopic::Label::kReal : veritopic::Label::kFake);
  }
  b.features = veritopic::fuse(ce, topics, ids);
  return b;
}

}  // namespace synthetic
