#pragma once

// Two dense layers with a rectifier in between and a 2-way softmax output,
// trained with mini-batch Adam on softmax cross-entropy.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "veritopic/corpus.hpp"
#include "veritopic/encoder.hpp"
#include "veritopic/prediction.hpp"

namespace veritopic {

struct TrainConfig {
  double learning_rate = 2e-5;
  double adam_epsilon = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::uint32_t epochs = 15;
  std::uint32_t batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> early_stop_patience;
  std::uint32_t hidden_dim = 128;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

class MlpClassifier {
 public:
  static constexpr std::size_t kClasses = 2;

  MlpClassifier() = default;
  // All parameters zero.
  MlpClassifier(std::size_t input_dim, std::size_t hidden_dim);
  // Glorot-uniform weights, zero biases; a pure function of (seed, dims).
  static MlpClassifier initialized(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  // Flat layout: W1 (H x D, row-major) | b1 (H) | W2 (2 x H) | b2 (2).
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> w1() { return {params_.data(), hidden_dim_ * input_dim_}; }
  std::span<double> b1() { return {params_.data() + b1_offset(), hidden_dim_}; }
  std::span<double> w2() { return {params_.data() + w2_offset(), kClasses * hidden_dim_}; }
  std::span<double> b2() { return {params_.data() + b2_offset(), kClasses}; }
  std::span<const double> w1() const { return {params_.data(), hidden_dim_ * input_dim_}; }
  std::span<const double> b1() const { return {params_.data() + b1_offset(), hidden_dim_}; }
  std::span<const double> w2() const { return {params_.data() + w2_offset(), kClasses * hidden_dim_}; }
  std::span<const double> b2() const { return {params_.data() + b2_offset(), kClasses}; }

  std::size_t b1_offset() const { return hidden_dim_ * input_dim_; }
  std::size_t w2_offset() const { return b1_offset() + hidden_dim_; }
  std::size_t b2_offset() const { return w2_offset() + kClasses * hidden_dim_; }

  bool operator==(const MlpClassifier&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<double> params_;
};

// Max-subtracted softmax over two logits.
std::array<double, 2> softmax2(const std::array<double, 2>& logits);

std::array<double, 2> logits(const MlpClassifier& model, std::span<const double> x);
std::array<double, 2> forward(const MlpClassifier& model, std::span<const double> x);

struct LabeledExample {
  std::span<const double> x;
  Label label;
};

struct LossAndGradients {
  double loss = 0.0;               // mean cross-entropy over the batch
  std::vector<double> gradients;   // same layout as MlpClassifier::parameters()
};

LossAndGradients loss_and_gradients(const MlpClassifier& model, std::span<const LabeledExample> batch);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// Bias-corrected Adam. A fresh (empty) state is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& config);

struct EpochLog {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_f1;
};

struct LabeledSet {
  std::span<const FusedFeatures> features;
  std::span<const Label> labels;
};

struct TrainResult {
  MlpClassifier model;
  std::vector<EpochLog> log;
  std::uint32_t best_epoch = 0;  // epoch whose weights were returned
};

// With early stopping, the weights of the best validation epoch are returned
// once `patience` epochs pass without improvement.
TrainResult train_classifier(const LabeledSet& train, const TrainConfig& config,
                             std::optional<LabeledSet> validation = std::nullopt);

std::vector<Prediction> predict(const MlpClassifier& model, std::span<const FusedFeatures> features);

struct Checkpoint {
  MlpClassifier model;
  TrainConfig config;
  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint8_t kCheckpointFormatVersion = 1;

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace veritopic
