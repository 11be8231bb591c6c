#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "veritopic/classifier.hpp"
#include "veritopic/cli.hpp"
#include "veritopic/corpus.hpp"
#include "veritopic/encoder.hpp"
#include "veritopic/error.hpp"
#include "veritopic/evaluation.hpp"
#include "veritopic/topicmodel.hpp"
#include "veritopic/version.hpp"

namespace py = pybind11;
using namespace veritopic;

namespace {

using EmbeddingDict = std::map<std::string, std::vector<float>>;

EmbeddingMatrix to_matrix(const EmbeddingDict& d) {
  if (d.empty()) throw std::invalid_argument("empty embedding mapping");
  EmbeddingMatrix m(static_cast<std::uint32_t>(d.begin()->second.size()));
  for (const auto& [id, v] : d) m.insert(id, v);
  return m;
}

EmbeddingDict to_dict(const EmbeddingMatrix& m) {
  return EmbeddingDict(m.entries().begin(), m.entries().end());
}

Corpus corpus_from_tokens(const std::vector<std::string>& ids, const std::vector<std::vector<std::string>>& tokens) {
  if (ids.size() != tokens.size()) throw std::invalid_argument("ids and tokens differ in length");
  Corpus c;
  for (std::size_t i = 0; i < ids.size(); ++i) c.documents.push_back({ids[i], "", tokens[i], std::nullopt});
  return c;
}

Label to_label(int v) {
  if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 (fake) or 1 (real)");
  return static_cast<Label>(v);
}

Prediction to_prediction(const std::tuple<std::string, double, double>& t) {
  Prediction p{std::get<0>(t), {std::get<1>(t), std::get<2>(t)}, Label::kFake};
  p.label = label_from_probabilities(p.probabilities);
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the veritopic toolkit";
  m.attr("__version__") = kVersion;
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.def("preprocess_text", [](const std::string& raw, const std::set<std::string>& stop) {
    return preprocess_text(raw, StopwordSet(stop.begin(), stop.end()));
  }, py::arg("raw"), py::arg("stopwords") = std::set<std::string>{});
  m.def("load_stopwords", [](const std::filesystem::path& p) {
    auto s = load_stopwords(p);
    return std::set<std::string>(s.begin(), s.end());
  });

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("__len__", &Vocabulary::size)
      .def("find", &Vocabulary::find)
      .def("token", &Vocabulary::token)
      .def("doc_freq", &Vocabulary::doc_freq)
      .def_property_readonly("num_docs", &Vocabulary::num_docs)
      .def_property_readonly("tokens", &Vocabulary::tokens);
  m.def("build_vocabulary", [](const std::vector<std::vector<std::string>>& docs, std::size_t min_df) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < docs.size(); ++i) ids.push_back(std::to_string(i));
    return Vocabulary::build(corpus_from_tokens(ids, docs), min_df);
  }, py::arg("docs"), py::arg("min_df") = 1);
  m.def("encode_document", [](const std::vector<std::string>& tokens, const Vocabulary& v) {
    return encode_document(tokens, v);
  });

  py::class_<LdaConfig>(m, "LdaConfig")
      .def(py::init<>())
      .def_readwrite("topics", &LdaConfig::topics)
      .def_readwrite("alpha", &LdaConfig::alpha)
      .def_readwrite("beta", &LdaConfig::beta)
      .def_readwrite("iterations", &LdaConfig::iterations)
      .def_readwrite("burn_in", &LdaConfig::burn_in)
      .def_readwrite("seed", &LdaConfig::seed)
      .def_readwrite("infer_iterations", &LdaConfig::infer_iterations);

  py::class_<TopicModel>(m, "TopicModel")
      .def_property_readonly("topics", &TopicModel::topics)
      .def_property_readonly("vocab_size", &TopicModel::vocab_size)
      .def_property_readonly("config", &TopicModel::config)
      .def_property_readonly("phi", [](const TopicModel& tm) {
        py::array_t<double> a({tm.topics(), tm.vocab_size()});
        std::copy(tm.phi().begin(), tm.phi().end(), a.mutable_data());
        return a;
      })
      .def("to_bytes", [](const TopicModel& tm) {
        auto b = serialize(tm);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def("conditional_distribution",
        [](std::vector<std::int64_t> n_dk, std::vector<std::int64_t> n_kw, std::vector<std::int64_t> n_k,
           std::size_t vocab_size, double alpha, double beta) {
          return conditional_distribution({n_dk, n_kw, n_k}, vocab_size, alpha, beta);
        },
        py::arg("doc_topic"), py::arg("topic_word"), py::arg("topic_total"), py::arg("vocab_size"), py::arg("alpha"),
        py::arg("beta"));
  m.def("train_lda", [](const std::vector<TokenIds>& docs, std::size_t vocab_size, const LdaConfig& cfg) {
    py::gil_scoped_release release;
    return train_lda(docs, vocab_size, cfg);
  });
  m.def("infer_theta", [](const TopicModel& tm, const std::string& id, const TokenIds& doc) {
    return infer_theta(tm, id, doc).theta;
  });

  m.def("write_embedding_file", [](const EmbeddingDict& d, const std::filesystem::path& p) {
    write_embedding_file(to_matrix(d), p);
  });
  m.def("read_embedding_file", [](const std::filesystem::path& p) { return to_dict(read_embedding_file(p)); });
  m.def("baseline_encode", [](const std::vector<std::string>& ids, const std::vector<std::vector<std::string>>& tokens,
                               const Vocabulary& v, std::uint32_t dim) {
    return to_dict(baseline_encode(corpus_from_tokens(ids, tokens), v, dim));
  });
  m.def("fuse", [](const EmbeddingDict& ce, const std::map<std::string, std::vector<double>>& topics,
                   const std::vector<std::string>& ids) {
    std::map<std::string, TopicDistribution> tds;
    for (const auto& [id, theta] : topics) tds.emplace(id, TopicDistribution{id, theta});
    std::vector<std::vector<double>> rows;
    for (auto& f : fuse(to_matrix(ce), tds, ids)) rows.push_back(std::move(f.vector));
    return rows;
  });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("adam_epsilon", &TrainConfig::adam_epsilon)
      .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
      .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim);

  py::class_<MlpClassifier>(m, "MlpClassifier")
      .def(py::init<std::size_t, std::size_t>(), py::arg("input_dim"), py::arg("hidden_dim"))
      .def_static("initialized", &MlpClassifier::initialized)
      .def_property_readonly("input_dim", &MlpClassifier::input_dim)
      .def_property_readonly("hidden_dim", &MlpClassifier::hidden_dim)
      .def_property(
          "parameters",
          [](const MlpClassifier& c) { return std::vector<double>(c.parameters().begin(), c.parameters().end()); },
          [](MlpClassifier& c, const std::vector<double>& p) {
            if (p.size() != c.parameters().size()) throw std::invalid_argument("parameter count mismatch");
            std::copy(p.begin(), p.end(), c.parameters().begin());
          });
  m.def("forward", [](const MlpClassifier& c, const std::vector<double>& x) { return forward(c, x); });
  m.def("loss_and_gradients", [](const MlpClassifier& c, const std::vector<std::vector<double>>& xs,
                                  const std::vector<int>& labels) {
    if (xs.size() != labels.size()) throw std::invalid_argument("xs and labels differ in length");
    std::vector<LabeledExample> batch;
    for (std::size_t i = 0; i < xs.size(); ++i) batch.push_back({xs[i], to_label(labels[i])});
    auto lg = loss_and_gradients(c, batch);
    return py::make_tuple(lg.loss, lg.gradients);
  });
  m.def("adam_step", [](std::vector<double> params, const std::vector<double>& grads, int steps,
                         const TrainConfig& cfg) {
    AdamState state;
    for (int i = 0; i < steps; ++i) adam_step(params, grads, state, cfg);
    return params;
  }, py::arg("params"), py::arg("grads"), py::arg("steps") = 1, py::arg("config") = TrainConfig{});
  m.def("train_classifier", [](const std::vector<std::vector<double>>& xs, const std::vector<int>& labels,
                                const TrainConfig& cfg) {
    std::vector<FusedFeatures> feats;
    std::vector<Label> ls;
    for (std::size_t i = 0; i < xs.size(); ++i) feats.push_back({std::to_string(i), xs[i], 0});
    for (int l : labels) ls.push_back(to_label(l));
    py::gil_scoped_release release;
    return train_classifier({feats, ls}, cfg).model;
  });

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("precision", &EvalReport::precision)
      .def_readonly("recall", &EvalReport::recall)
      .def_readonly("weighted_f1", &EvalReport::f1)
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_property_readonly("confusion", [](const EvalReport& r) { return r.confusion.counts; })
      .def("to_json", [](const EvalReport& r) { return to_json(r).dump(); });
  m.def("confusion_matrix", [](const std::vector<int>& gold, const std::vector<int>& pred) {
    std::vector<Label> g, p;
    for (int v : gold) g.push_back(to_label(v));
    for (int v : pred) p.push_back(to_label(v));
    return confusion_matrix(g, p).counts;
  });
  m.def("weighted_prf", [](const std::vector<int>& gold, const std::vector<int>& pred) {
    std::vector<Label> g, p;
    for (int v : gold) g.push_back(to_label(v));
    for (int v : pred) p.push_back(to_label(v));
    return weighted_prf(confusion_matrix(g, p));
  });
  m.def("ensemble_predictions", [](const std::vector<std::tuple<std::string, double, double>>& a,
                                    const std::vector<std::tuple<std::string, double, double>>& b) {
    std::vector<Prediction> pa, pb;
    for (const auto& t : a) pa.push_back(to_prediction(t));
    for (const auto& t : b) pb.push_back(to_prediction(t));
    std::vector<std::tuple<std::string, double, double, std::string>> out;
    for (const auto& p : ensemble_predictions(pa, pb)) {
      out.emplace_back(p.doc_id, p.probabilities[0], p.probabilities[1], std::string(label_name(p.label)));
    }
    return out;
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
