#include "veritopic/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "veritopic/binio.hpp"
#include "veritopic/classifier.hpp"
#include "veritopic/corpus.hpp"
#include "veritopic/encoder.hpp"
#include "veritopic/error.hpp"
#include "veritopic/evaluation.hpp"
#include "veritopic/manifest.hpp"
#include "veritopic/topicmodel.hpp"
#include "veritopic/version.hpp"

namespace veritopic::cli {

namespace {

using Path = std::filesystem::path;

struct SeedChoice {
  std::uint64_t value = 0;
  std::string source = "default";
};

SeedChoice resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return {*flag, "flag"};
  if (const char* env = std::getenv("VERITOPIC_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || errno != 0) throw std::invalid_argument("VERITOPIC_SEED is not an unsigned integer");
    return {v, "env"};
  }
  return {0, "default"};
}

nlohmann::ordered_json snapshot(const CLI::App& sub) {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_type_size() == 0) {
        cfg[name] = true;
      } else if (results.size() == 1) {
        cfg[name] = results.front();
      } else {
        cfg[name] = results;
      }
    } else if (opt->get_type_size() == 0) {
      cfg[name] = false;
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    } else {
      cfg[name] = nullptr;
    }
  }
  return cfg;
}

struct GoldRow {
  std::string id;
  Label label;
};

// Labels from a dataset CSV or a VCP1 corpus file (detected by magic).
std::vector<GoldRow> load_gold(const Path& path) {
  auto bytes = binio::read_file(path);
  std::vector<GoldRow> rows;
  auto take = [&](const Corpus& corpus) {
    for (const auto& doc : corpus.documents) {
      if (!doc.label) throw DataError(path.string() + ": document '" + doc.id + "' has no label");
      rows.push_back({doc.id, *doc.label});
    }
  };
  if (bytes.size() >= 4 && std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) == "VCP1") {
    take(load_corpus(path).corpus);
  } else {
    take(load_dataset(path, Split::kTest));
  }
  if (rows.empty()) throw DataError(path.string() + ": no labeled documents");
  return rows;
}

EmbeddingMatrix load_embeddings(const Path& path, bool tsv) {
  return tsv ? read_embedding_tsv(path) : read_embedding_file(path);
}

struct LabeledFeatures {
  std::vector<FusedFeatures> features;
  std::vector<Label> labels;
};

LabeledFeatures labeled_features(const Path& emb, bool emb_tsv, const Path& topics, const Path& gold) {
  const auto rows = load_gold(gold);
  std::vector<std::string> ids;
  LabeledFeatures out;
  for (const auto& r : rows) {
    ids.push_back(r.id);
    out.labels.push_back(r.label);
  }
  out.features = fuse(load_embeddings(emb, emb_tsv), read_topics_tsv(topics), ids);
  return out;
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << format_confusion_table(r.confusion);
  out << std::fixed << std::setprecision(4) << "precision " << r.precision << "  recall " << r.recall
      << "  weighted_f1 " << r.f1 << "  accuracy " << r.accuracy << '\n';
  out.unsetf(std::ios::floatfield);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(',', start);
    if (pos == std::string::npos) pos = s.size();
    if (pos > start) out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"veritopic: topic-fused fake news classification toolkit", "veritopic"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // prep
  struct {
    Path input, stopwords, out, vocab;
    std::string split = "train";
    std::size_t min_df = 1;
  } prep;
  auto* prep_cmd = app.add_subcommand("prep", "CSV dataset -> preprocessed, encoded corpus (VCP1)");
  prep_cmd->add_option("--input", prep.input, "Dataset CSV with columns id,tweet,label")->required();
  prep_cmd->add_option("--stopwords", prep.stopwords, "Stopword file, one token per line")->required();
  prep_cmd->add_option("--split", prep.split, "train | validation | test | unsplit");
  prep_cmd->add_option("--min-df", prep.min_df, "Minimum document frequency for the vocabulary");
  prep_cmd->add_option("--vocab", prep.vocab, "Reuse the vocabulary of an existing corpus file");
  prep_cmd->add_option("--out", prep.out, "Output corpus file")->required();

  // lda train / lda infer
  auto* lda_cmd = app.add_subcommand("lda", "Topic model");
  lda_cmd->require_subcommand(1);
  LdaConfig lda_cfg;
  std::optional<std::uint64_t> lda_seed;
  Path lda_corpus, lda_out;
  std::uint32_t lda_log_every = 50;
  auto* lda_train = lda_cmd->add_subcommand("train", "Train LDA by collapsed Gibbs sampling");
  lda_train->add_option("--corpus", lda_corpus, "Encoded training corpus")->required();
  lda_train->add_option("--topics", lda_cfg.topics, "Number of topics K");
  lda_train->add_option("--alpha", lda_cfg.alpha, "Symmetric document-topic prior");
  lda_train->add_option("--beta", lda_cfg.beta, "Symmetric topic-word prior");
  lda_train->add_option("--iters", lda_cfg.iterations, "Gibbs sweeps");
  lda_train->add_option("--burn-in", lda_cfg.burn_in, "Sweeps before phi averaging starts");
  lda_train->add_option("--infer-iters", lda_cfg.infer_iterations, "Fold-in sweeps used by lda infer");
  lda_train->add_option("--seed", lda_seed, "RNG seed (default: $VERITOPIC_SEED, else 0)");
  lda_train->add_option("--log-every", lda_log_every, "Print the log-likelihood every N sweeps (0 = never)");
  lda_train->add_option("--out", lda_out, "Output model file")->required();

  Path infer_model, infer_corpus_path, infer_out;
  auto* lda_infer = lda_cmd->add_subcommand("infer", "Document-topic distributions as TSV");
  lda_infer->add_option("--model", infer_model, "Trained model file")->required();
  lda_infer->add_option("--corpus", infer_corpus_path, "Encoded corpus (same vocabulary as training)")->required();
  lda_infer->add_option("--out", infer_out, "Output TSV")->required();

  // embed baseline / embed validate
  auto* embed_cmd = app.add_subcommand("embed", "Document embeddings");
  embed_cmd->require_subcommand(1);
  Path base_corpus, base_vocab, base_out;
  std::uint32_t base_dim = 512;
  auto* embed_base = embed_cmd->add_subcommand("baseline", "Hashed TF-IDF document vectors (CEB1)");
  embed_base->add_option("--corpus", base_corpus, "Encoded corpus")->required();
  embed_base->add_option("--vocab", base_vocab, "Take vocabulary and idf from this corpus file instead");
  embed_base->add_option("--dim", base_dim, "Number of hash buckets")->check(CLI::PositiveNumber);
  embed_base->add_option("--out", base_out, "Output CEB1 file")->required();

  Path validate_path;
  bool validate_tsv = false;
  std::optional<std::uint32_t> validate_dim;
  auto* embed_validate = embed_cmd->add_subcommand("validate", "Check a CEB1 embedding file");
  embed_validate->add_option("--emb", validate_path, "Embedding file")->required();
  embed_validate->add_flag("--tsv", validate_tsv, "Input is the debug TSV form");
  embed_validate->add_option("--expect-dim", validate_dim, "Fail unless the dimension matches");

  // train
  TrainConfig train_cfg;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::uint32_t> train_patience;
  Path tr_emb, tr_topics, tr_gold, tr_val_emb, tr_val_topics, tr_val_gold, tr_out;
  bool tr_tsv = false;
  auto* train_cmd = app.add_subcommand("train", "Train the classification head on fused features");
  train_cmd->add_option("--emb", tr_emb, "Training embeddings")->required();
  train_cmd->add_option("--topics", tr_topics, "Training topic TSV")->required();
  train_cmd->add_option("--gold", tr_gold, "Training labels (dataset CSV or corpus file)")->required();
  train_cmd->add_option("--val-emb", tr_val_emb, "Validation embeddings");
  train_cmd->add_option("--val-topics", tr_val_topics, "Validation topic TSV");
  train_cmd->add_option("--val-gold", tr_val_gold, "Validation labels");
  train_cmd->add_option("--hidden", train_cfg.hidden_dim, "Hidden layer width");
  train_cmd->add_option("--lr", train_cfg.learning_rate, "Adam learning rate");
  train_cmd->add_option("--eps", train_cfg.adam_epsilon, "Adam epsilon");
  train_cmd->add_option("--beta1", train_cfg.adam_beta1, "Adam first-moment decay");
  train_cmd->add_option("--beta2", train_cfg.adam_beta2, "Adam second-moment decay");
  train_cmd->add_option("--epochs", train_cfg.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_cfg.batch_size, "Mini-batch size");
  train_cmd->add_option("--patience", train_patience, "Early-stopping patience on validation weighted F1");
  train_cmd->add_option("--seed", train_seed, "RNG seed (default: $VERITOPIC_SEED, else 0)");
  train_cmd->add_flag("--emb-tsv", tr_tsv, "Embedding inputs are debug TSV");
  train_cmd->add_option("--out", tr_out, "Output checkpoint")->required();

  // eval
  Path ev_model, ev_emb, ev_topics, ev_gold, ev_report, ev_predictions;
  bool ev_tsv = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--model", ev_model, "Classifier checkpoint")->required();
  eval_cmd->add_option("--emb", ev_emb, "Embeddings")->required();
  eval_cmd->add_option("--topics", ev_topics, "Topic TSV")->required();
  eval_cmd->add_option("--gold", ev_gold, "Gold labels (dataset CSV or corpus file)")->required();
  eval_cmd->add_option("--report", ev_report, "Output JSON report")->required();
  eval_cmd->add_option("--predictions", ev_predictions, "Also write predictions TSV");
  eval_cmd->add_flag("--emb-tsv", ev_tsv, "Embedding input is debug TSV");

  // ensemble
  Path en_a, en_b, en_out, en_gold, en_report;
  auto* ens_cmd = app.add_subcommand("ensemble", "Average two prediction files");
  ens_cmd->add_option("--a", en_a, "First predictions TSV")->required();
  ens_cmd->add_option("--b", en_b, "Second predictions TSV")->required();
  ens_cmd->add_option("--out", en_out, "Output predictions TSV")->required();
  ens_cmd->add_option("--gold", en_gold, "Gold labels; enables --report");
  ens_cmd->add_option("--report", en_report, "Output JSON report (needs --gold)");

  // analyze errors
  auto* analyze_cmd = app.add_subcommand("analyze", "Error analysis");
  analyze_cmd->require_subcommand(1);
  Path an_preds, an_gold, an_corpus, an_out;
  std::vector<Path> an_reference;
  std::string an_keywords;
  auto* an_errors = analyze_cmd->add_subcommand("errors", "Misclassified documents with keyword class counts");
  an_errors->add_option("--predictions", an_preds, "Predictions TSV")->required();
  an_errors->add_option("--corpus", an_corpus, "Encoded corpus of the evaluated documents")->required();
  an_errors->add_option("--reference", an_reference, "Corpus files to count keywords over (repeatable)")->required();
  an_errors->add_option("--gold", an_gold, "Gold labels (default: labels stored in --corpus)");
  an_errors->add_option("--keywords", an_keywords, "Comma-separated keywords always added to the table");
  an_errors->add_option("--out", an_out, "Output JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string started = utc_timestamp();
  auto command_line = [&] {
    std::string s = "veritopic";
    for (const auto& a : args) s += " " + a;
    return s;
  };

  try {
    if (*prep_cmd) {
      Corpus corpus = load_dataset(prep.input, parse_split(prep.split));
      preprocess_corpus(corpus, load_stopwords(prep.stopwords));
      const auto counts = corpus.class_counts();
      Vocabulary vocab = prep.vocab.empty() ? Vocabulary::build(corpus, prep.min_df) : load_corpus(prep.vocab).vocab;
      auto encoded = encode_corpus(std::move(corpus), std::move(vocab));
      save_corpus(encoded, prep.out);
      out << "prep: " << counts.total() << " documents (" << counts.real << " real, " << counts.fake << " fake, "
          << counts.unlabeled << " unlabeled), vocabulary " << encoded.vocab.size() << '\n';
      RunManifest m{command_line(), snapshot(*prep_cmd), {prep.input, prep.stopwords}, {prep.out}, 0, "none", started};
      if (!prep.vocab.empty()) m.inputs.push_back(prep.vocab);
      m.write();
    } else if (*lda_train) {
      const auto seed = resolve_seed(lda_seed);
      lda_cfg.seed = seed.value;
      lda_cfg.validate();
      const auto corpus = load_corpus(lda_corpus);
      auto model = train_lda(corpus.encoded, corpus.vocab.size(), lda_cfg,
                             [&](const GibbsSampler& s, std::uint32_t sweep) {
                               if (lda_log_every != 0 && (sweep % lda_log_every == 0 || sweep == lda_cfg.iterations)) {
                                 out << "sweep " << sweep << "  log-likelihood " << s.log_likelihood() << '\n';
                               }
                             });
      model.set_vocab_fingerprint(corpus.vocab.fingerprint());
      save_topic_model(model, lda_out);
      auto cfg = snapshot(*lda_train);
      cfg["seed"] = seed.value;
      RunManifest{command_line(), cfg, {lda_corpus}, {lda_out}, seed.value, seed.source, started}.write();
    } else if (*lda_infer) {
      const auto model = load_topic_model(infer_model);
      const auto corpus = load_corpus(infer_corpus_path);
      if (corpus.vocab.size() != model.vocab_size() ||
          (model.vocab_fingerprint() != 0 && corpus.vocab.fingerprint() != model.vocab_fingerprint())) {
        throw DataError("corpus vocabulary differs from the one the model was trained on"
                        " (prep it with --vocab <training corpus>)");
      }
      write_topics_tsv(infer_corpus(model, corpus), infer_out);
      out << "lda infer: " << corpus.corpus.size() << " documents, K=" << model.topics() << '\n';
      RunManifest{command_line(),        snapshot(*lda_infer), {infer_model, infer_corpus_path}, {infer_out},
                  model.config().seed, "model",              started}
          .write();
    } else if (*embed_base) {
      const auto corpus = load_corpus(base_corpus);
      const Vocabulary vocab = base_vocab.empty() ? corpus.vocab : load_corpus(base_vocab).vocab;
      const auto matrix = baseline_encode(corpus.corpus, vocab, base_dim);
      write_embedding_file(matrix, base_out);
      out << "embed baseline: " << matrix.size() << " documents, dim " << matrix.dim() << '\n';
      RunManifest m{command_line(), snapshot(*embed_base), {base_corpus}, {base_out}, 0, "none", started};
      if (!base_vocab.empty()) m.inputs.push_back(base_vocab);
      m.write();
    } else if (*embed_validate) {
      const auto matrix = load_embeddings(validate_path, validate_tsv);
      if (validate_dim && *validate_dim != matrix.dim()) {
        throw DataError("dimension " + std::to_string(matrix.dim()) + " != expected " + std::to_string(*validate_dim));
      }
      out << "ok: " << matrix.size() << " records, dim " << matrix.dim() << '\n';
    } else if (*train_cmd) {
      const auto seed = resolve_seed(train_seed);
      train_cfg.seed = seed.value;
      train_cfg.early_stop_patience = train_patience;
      train_cfg.validate();
      const auto train_set = labeled_features(tr_emb, tr_tsv, tr_topics, tr_gold);
      std::optional<LabeledFeatures> val_set;
      const bool any_val = !tr_val_emb.empty() || !tr_val_topics.empty() || !tr_val_gold.empty();
      if (any_val) {
        if (tr_val_emb.empty() || tr_val_topics.empty() || tr_val_gold.empty()) {
          throw std::invalid_argument("--val-emb, --val-topics and --val-gold must be given together");
        }
        val_set = labeled_features(tr_val_emb, tr_tsv, tr_val_topics, tr_val_gold);
      }
      std::optional<LabeledSet> val_view;
      if (val_set) val_view = LabeledSet{val_set->features, val_set->labels};
      auto result = train_classifier({train_set.features, train_set.labels}, train_cfg, val_view);
      for (const auto& e : result.log) {
        out << "epoch " << e.epoch << "  loss " << e.train_loss << "  train_acc " << e.train_accuracy;
        if (e.validation_f1) out << "  val_weighted_f1 " << *e.validation_f1;
        out << '\n';
      }
      save_checkpoint({result.model, train_cfg}, tr_out);
      auto cfg = snapshot(*train_cmd);
      cfg["seed"] = seed.value;
      RunManifest m{command_line(), cfg, {tr_emb, tr_topics, tr_gold}, {tr_out}, seed.value, seed.source, started};
      if (val_set) m.inputs.insert(m.inputs.end(), {tr_val_emb, tr_val_topics, tr_val_gold});
      m.write();
    } else if (*eval_cmd) {
      const auto ck = load_checkpoint(ev_model);
      const auto set = labeled_features(ev_emb, ev_tsv, ev_topics, ev_gold);
      if (set.features.front().vector.size() != ck.model.input_dim()) {
        throw DataError("fused features have dimension " + std::to_string(set.features.front().vector.size()) +
                        ", checkpoint expects " + std::to_string(ck.model.input_dim()));
      }
      const auto preds = predict(ck.model, set.features);
      std::vector<Label> predicted;
      for (const auto& p : preds) predicted.push_back(p.label);
      const auto report = weighted_prf(confusion_matrix(set.labels, predicted));
      binio::write_text_file(ev_report, to_json(report).dump(2) + "\n");
      print_report(out, report);
      RunManifest m{command_line(), snapshot(*eval_cmd), {ev_model, ev_emb, ev_topics, ev_gold}, {ev_report},
                    ck.config.seed, "model", started};
      if (!ev_predictions.empty()) {
        write_predictions_tsv(preds, ev_predictions);
        m.outputs.push_back(ev_predictions);
        RunManifest pm = m;
        pm.outputs = {ev_predictions};
        pm.write();
      }
      m.write();
    } else if (*ens_cmd) {
      if (!en_report.empty() && en_gold.empty()) throw std::invalid_argument("--report needs --gold");
      const auto merged = ensemble_predictions(read_predictions_tsv(en_a), read_predictions_tsv(en_b));
      write_predictions_tsv(merged, en_out);
      RunManifest m{command_line(), snapshot(*ens_cmd), {en_a, en_b}, {en_out}, 0, "none", started};
      if (!en_gold.empty()) {
        std::unordered_map<std::string, Label> gold;
        for (const auto& r : load_gold(en_gold)) gold.emplace(r.id, r.label);
        std::vector<Label> g, p;
        for (const auto& pr : merged) {
          auto it = gold.find(pr.doc_id);
          if (it == gold.end()) throw DataError("no gold label for " + pr.doc_id);
          g.push_back(it->second);
          p.push_back(pr.label);
        }
        const auto report = weighted_prf(confusion_matrix(g, p));
        print_report(out, report);
        m.inputs.push_back(en_gold);
        if (!en_report.empty()) {
          binio::write_text_file(en_report, to_json(report).dump(2) + "\n");
          RunManifest rm = m;
          rm.outputs = {en_report};
          rm.write();
        }
      }
      m.write();
    } else if (*an_errors) {
      const auto preds = read_predictions_tsv(an_preds);
      const auto evaluated = load_corpus(an_corpus).corpus;
      std::unordered_map<std::string, Label> gold;
      if (an_gold.empty()) {
        for (const auto& d : evaluated.documents) {
          if (d.label) gold.emplace(d.id, *d.label);
        }
      } else {
        for (const auto& r : load_gold(an_gold)) gold.emplace(r.id, r.label);
      }
      std::vector<Label> g;
      for (const auto& p : preds) {
        auto it = gold.find(p.doc_id);
        if (it == gold.end()) throw DataError("no gold label for " + p.doc_id);
        g.push_back(it->second);
      }
      Corpus reference;
      for (const auto& path : an_reference) {
        auto c = load_corpus(path).corpus;
        for (auto& d : c.documents) reference.documents.push_back(std::move(d));
      }
      const auto keywords = split_list(an_keywords);
      const auto report = build_error_report(g, preds, evaluated, reference, keywords);
      binio::write_text_file(an_out, to_json(report).dump(2) + "\n");
      out << "analyze errors: " << report.misclassified.size() << " misclassified of " << preds.size() << '\n';
      RunManifest m{command_line(), snapshot(*an_errors), {an_preds, an_corpus}, {an_out}, 0, "none", started};
      m.inputs.insert(m.inputs.end(), an_reference.begin(), an_reference.end());
      if (!an_gold.empty()) m.inputs.push_back(an_gold);
      m.write();
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace veritopic::cli
