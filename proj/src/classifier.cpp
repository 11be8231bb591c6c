#include "veritopic/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "veritopic/binio.hpp"
#include "veritopic/error.hpp"
#include "veritopic/evaluation.hpp"
#include "veritopic/rng.hpp"

namespace veritopic {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw std::invalid_argument("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw std::invalid_argument("adam_beta2 must be in (0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
}

MlpClassifier::MlpClassifier(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      params_(hidden_dim * input_dim + hidden_dim + kClasses * hidden_dim + kClasses, 0.0) {
  if (input_dim == 0 || hidden_dim == 0) throw std::invalid_argument("MLP dimensions must be >= 1");
}

MlpClassifier MlpClassifier::initialized(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  MlpClassifier m(input_dim, hidden_dim);
  Rng rng = Rng::derived(seed, "mlp-init");
  const double r1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (auto& w : m.w1()) w = rng.uniform(-r1, r1);
  const double r2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + kClasses));
  for (auto& w : m.w2()) w = rng.uniform(-r2, r2);
  return m;
}

std::array<double, 2> softmax2(const std::array<double, 2>& z) {
  const double mx = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - mx);
  const double e1 = std::exp(z[1] - mx);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

namespace {

void check_input(const MlpClassifier& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(model.input_dim()));
  }
}

// Fills `hidden` with relu(W1 x + b1) and returns the output logits.
std::array<double, 2> forward_hidden(const MlpClassifier& model, std::span<const double> x, std::vector<double>& hidden) {
  const std::size_t d = model.input_dim();
  const std::size_t h = model.hidden_dim();
  const auto w1 = model.w1();
  const auto b1 = model.b1();
  const auto w2 = model.w2();
  const auto b2 = model.b2();
  hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = w1.data() + j * d;
    double a = b1[j];
    for (std::size_t i = 0; i < d; ++i) a += row[i] * x[i];
    hidden[j] = a > 0.0 ? a : 0.0;
  }
  std::array<double, 2> z{b2[0], b2[1]};
  for (std::size_t c = 0; c < 2; ++c) {
    const double* row = w2.data() + c * h;
    for (std::size_t j = 0; j < h; ++j) z[c] += row[j] * hidden[j];
  }
  return z;
}

}  // namespace

std::array<double, 2> logits(const MlpClassifier& model, std::span<const double> x) {
  check_input(model, x);
  std::vector<double> hidden;
  return forward_hidden(model, x, hidden);
}

std::array<double, 2> forward(const MlpClassifier& model, std::span<const double> x) {
  return softmax2(logits(model, x));
}

LossAndGradients loss_and_gradients(const MlpClassifier& model, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradients: empty batch");
  const std::size_t d = model.input_dim();
  const std::size_t h = model.hidden_dim();
  const auto w2 = model.w2();

  LossAndGradients out;
  out.gradients.assign(model.parameters().size(), 0.0);
  double* g_w1 = out.gradients.data();
  double* g_b1 = out.gradients.data() + model.b1_offset();
  double* g_w2 = out.gradients.data() + model.w2_offset();
  double* g_b2 = out.gradients.data() + model.b2_offset();

  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> hidden;
  std::vector<double> d_hidden(h);
  for (const auto& ex : batch) {
    check_input(model, ex.x);
    const auto z = forward_hidden(model, ex.x, hidden);
    // log-softmax computed directly for accuracy near saturation
    const double mx = std::max(z[0], z[1]);
    const double lse = mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
    const auto y = static_cast<std::size_t>(ex.label);
    out.loss -= (z[y] - lse) * scale;

    const auto p = softmax2(z);
    std::array<double, 2> dz{p[0] * scale, p[1] * scale};
    dz[y] -= scale;

    for (std::size_t c = 0; c < 2; ++c) {
      g_b2[c] += dz[c];
      for (std::size_t j = 0; j < h; ++j) g_w2[c * h + j] += dz[c] * hidden[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      // hidden[j] > 0 exactly when the pre-activation is positive
      d_hidden[j] = hidden[j] > 0.0 ? dz[0] * w2[j] + dz[1] * w2[h + j] : 0.0;
    }
    for (std::size_t j = 0; j < h; ++j) {
      if (d_hidden[j] == 0.0) continue;
      g_b1[j] += d_hidden[j];
      double* row = g_w1 + j * d;
      for (std::size_t i = 0; i < d; ++i) row[i] += d_hidden[j] * ex.x[i];
    }
  }
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& config) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient/parameter shape mismatch");
  if (state.m.empty() && state.v.empty() && state.t == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  }
  ++state.t;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
  }
}

namespace {

void check_set(const LabeledSet& set, std::size_t input_dim, const char* name) {
  if (set.features.size() != set.labels.size()) {
    throw DataError(std::string(name) + ": features and labels differ in length");
  }
  for (const auto& f : set.features) {
    if (f.vector.size() != input_dim) throw DataError(std::string(name) + ": inconsistent feature dimension at " + f.doc_id);
  }
}

double weighted_f1_of(const MlpClassifier& model, const LabeledSet& set) {
  auto preds = predict(model, set.features);
  std::vector<Label> predicted;
  predicted.reserve(preds.size());
  for (const auto& p : preds) predicted.push_back(p.label);
  return weighted_prf(confusion_matrix(set.labels, predicted)).f1;
}

}  // namespace

TrainResult train_classifier(const LabeledSet& train, const TrainConfig& config, std::optional<LabeledSet> validation) {
  config.validate();
  if (train.features.empty()) throw DataError("training set is empty");
  const std::size_t input_dim = train.features.front().vector.size();
  check_set(train, input_dim, "training set");
  const bool has_fake = std::find(train.labels.begin(), train.labels.end(), Label::kFake) != train.labels.end();
  const bool has_real = std::find(train.labels.begin(), train.labels.end(), Label::kReal) != train.labels.end();
  if (!has_fake || !has_real) throw DataError("training set must contain both classes");
  if (validation) check_set(*validation, input_dim, "validation set");
  if (config.early_stop_patience && !validation) {
    throw std::invalid_argument("early stopping requires a validation set");
  }

  TrainResult result;
  result.model = MlpClassifier::initialized(input_dim, config.hidden_dim, config.seed);
  AdamState adam;
  Rng shuffle_rng = Rng::derived(config.seed, "mlp-shuffle");

  std::vector<std::size_t> order(train.features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledExample> batch;
  batch.reserve(config.batch_size);

  std::optional<double> best_f1;
  MlpClassifier best_model = result.model;
  std::uint32_t since_best = 0;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back({train.features[order[i]].vector, train.labels[order[i]]});
      }
      auto lg = loss_and_gradients(result.model, batch);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      adam_step(result.model.parameters(), lg.gradients, adam, config);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    {
      auto preds = predict(result.model, train.features);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].label == train.labels[i] ? 1 : 0;
      entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
    }
    if (validation) entry.validation_f1 = weighted_f1_of(result.model, *validation);
    result.log.push_back(entry);

    if (config.early_stop_patience) {
      if (!best_f1 || *entry.validation_f1 > *best_f1) {
        best_f1 = entry.validation_f1;
        best_model = result.model;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= *config.early_stop_patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (config.early_stop_patience && best_f1) result.model = std::move(best_model);
  return result;
}

std::vector<Prediction> predict(const MlpClassifier& model, std::span<const FusedFeatures> features) {
  std::vector<Prediction> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    Prediction p;
    p.doc_id = f.doc_id;
    p.probabilities = forward(model, f.vector);
    p.label = label_from_probabilities(p.probabilities);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

constexpr std::string_view kCheckpointMagic = "VMLP";
constexpr std::uint8_t kActivationRelu = 0;

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ck) {
  const auto& m = ck.model;
  const auto& c = ck.config;
  binio::Writer w;
  w.raw(kCheckpointMagic);
  w.u8(kCheckpointFormatVersion);
  w.u32(static_cast<std::uint32_t>(m.input_dim()));
  w.u32(static_cast<std::uint32_t>(m.hidden_dim()));
  w.u8(kActivationRelu);
  w.f64(c.learning_rate);
  w.f64(c.adam_epsilon);
  w.f64(c.adam_beta1);
  w.f64(c.adam_beta2);
  w.u32(c.epochs);
  w.u32(c.batch_size);
  w.u64(c.seed);
  w.i32(c.early_stop_patience ? static_cast<std::int32_t>(*c.early_stop_patience) : -1);
  w.u32(c.hidden_dim);
  w.u64(m.parameters().size());
  for (double p : m.parameters()) w.f64(p);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  try {
    if (r.raw(4) != kCheckpointMagic) throw DataError("not a classifier checkpoint (bad magic)");
    if (auto v = r.u8(); v != kCheckpointFormatVersion) {
      throw DataError("unsupported checkpoint format version " + std::to_string(v));
    }
    const std::size_t input_dim = r.u32();
    const std::size_t hidden_dim = r.u32();
    if (input_dim == 0 || hidden_dim == 0) throw DataError("checkpoint: zero dimension");
    if (r.u8() != kActivationRelu) throw DataError("checkpoint: unknown activation");
    Checkpoint ck{MlpClassifier(input_dim, hidden_dim), {}};
    auto& c = ck.config;
    c.learning_rate = r.f64();
    c.adam_epsilon = r.f64();
    c.adam_beta1 = r.f64();
    c.adam_beta2 = r.f64();
    c.epochs = r.u32();
    c.batch_size = r.u32();
    c.seed = r.u64();
    if (auto patience = r.i32(); patience >= 0) c.early_stop_patience = static_cast<std::uint32_t>(patience);
    c.hidden_dim = r.u32();
    auto params = ck.model.parameters();
    if (r.u64() != params.size()) throw DataError("checkpoint: parameter count does not match dimensions");
    for (auto& p : params) {
      p = r.f64();
      if (!std::isfinite(p)) throw DataError("checkpoint: non-finite parameter");
    }
    if (r.remaining() != 0) throw DataError("checkpoint: trailing bytes");
    return ck;
  } catch (const binio::Truncated&) {
    throw DataError("checkpoint truncated");
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  binio::write_file(path, serialize(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto bytes = binio::read_file(path);
  try {
    return deserialize_checkpoint(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace veritopic
