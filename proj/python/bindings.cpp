// Python bindings: tokenizer, metrics, CRF inference, training and inference
// on checkpoints. Structured results cross the boundary as plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>
#include <sstream>

#include "jointnlu/error.hpp"
#include "jointnlu/pipeline.hpp"

namespace py = pybind11;
using namespace jointnlu;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Tensor matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("empty emission matrix");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw ShapeError("ragged emission matrix");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor::from_values({rows.size(), rows.front().size()}, std::move(flat));
}

CrfParams crf_params(const std::vector<std::vector<double>>& transitions,
                     const std::vector<double>& start, const std::vector<double>& end) {
  const auto l = start.size();
  CrfParams p;
  p.transitions = matrix(transitions);
  p.start_scores = Tensor::from_values({l}, start);
  p.end_scores = Tensor::from_values({end.size()}, end);
  if (p.transitions.rows() != l || p.transitions.cols() != l || end.size() != l) {
    throw ShapeError("CRF parameters must be L x L, L and L");
  }
  return p;
}

nlohmann::json prediction_json(const Prediction& p, const std::vector<std::string>& words) {
  return {{"words", words},
          {"intent", p.intent},
          {"intent_probability", p.intent_probability},
          {"slots", p.slots}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint intent classification and slot filling";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  m.def("split_words", [](const std::string& text) { return split_words(text); },
        "Whitespace split and lowercase.");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
      .def_static("load", &Vocabulary::load, py::arg("path"))
      .def("save", &Vocabulary::save, py::arg("path"))
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def("__len__", &Vocabulary::size)
      .def(
          "tokenize",
          [](const Vocabulary& v, const std::string& word) { return tokenize_word(word, v); },
          py::arg("word"), "Greedy longest-match WordPiece split of one word.");

  m.def(
      "build_vocab",
      [](const std::vector<std::vector<std::string>>& corpus, std::size_t size) {
        return build_vocab(corpus, size);
      },
      py::arg("corpus"), py::arg("target_size"));

  m.def(
      "extract_chunks",
      [](const std::vector<std::string>& tags) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& c : extract_chunks(tags)) out.emplace_back(c.type, c.start, c.end);
        return out;
      },
      py::arg("tags"), "Labelled spans as (type, start, end) with inclusive ends.");
  m.def(
      "slot_f1",
      [](const std::vector<TagSequence>& gold, const std::vector<TagSequence>& predicted) {
        const auto s = slot_f1(gold, predicted);
        return py::dict(py::arg("precision") = s.precision, py::arg("recall") = s.recall,
                        py::arg("f1") = s.f1, py::arg("gold_chunks") = s.gold_chunks,
                        py::arg("predicted_chunks") = s.predicted_chunks,
                        py::arg("correct_chunks") = s.correct_chunks);
      },
      py::arg("gold"), py::arg("predicted"));
  m.def(
      "intent_accuracy",
      [](const std::vector<std::string>& g, const std::vector<std::string>& p) {
        return intent_accuracy(g, p);
      },
      py::arg("gold"), py::arg("predicted"));
  m.def(
      "frame_accuracy",
      [](const std::vector<std::string>& gi, const std::vector<std::string>& pi,
         const std::vector<TagSequence>& gt, const std::vector<TagSequence>& pt) {
        return frame_accuracy(gi, pi, gt, pt);
      },
      py::arg("gold_intents"), py::arg("predicted_intents"), py::arg("gold_tags"),
      py::arg("predicted_tags"));

  m.def(
      "crf_log_partition",
      [](const std::vector<std::vector<double>>& emissions,
         const std::vector<std::vector<double>>& transitions, const std::vector<double>& start,
         const std::vector<double>& end) {
        return log_partition(matrix(emissions), crf_params(transitions, start, end));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"), py::arg("end"));
  m.def(
      "crf_viterbi",
      [](const std::vector<std::vector<double>>& emissions,
         const std::vector<std::vector<double>>& transitions, const std::vector<double>& start,
         const std::vector<double>& end) {
        const auto r = viterbi_decode(matrix(emissions), crf_params(transitions, start, end));
        return std::pair{r.labels, r.score};
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"), py::arg("end"),
      "Best labeling and its score.");

  m.def(
      "dataset_stats",
      [](const std::filesystem::path& dir) {
        const auto s = compute_stats(load_dataset(dir));
        return py::dict(py::arg("train") = s.train_size, py::arg("dev") = s.dev_size,
                        py::arg("test") = s.test_size,
                        py::arg("slot_labels") = s.train_slot_labels,
                        py::arg("intents") = s.train_intents);
      },
      py::arg("data_dir"));

  m.def(
      "train",
      [](const py::dict& config, bool verbose) {
        const auto run = apply_config_json(from_python(config), RunConfig{});
        std::ostringstream quiet;
        TrainOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_train(run, verbose ? std::cout : quiet);
        }
        py::list history;
        for (const auto& r : outcome.result.history) {
          py::dict row(py::arg("epoch") = r.epoch, py::arg("train_loss") = r.train_loss);
          if (r.dev) row["dev"] = to_python(to_json(*r.dev));
          history.append(row);
        }
        return py::dict(py::arg("checkpoint") = outcome.checkpoint.string(),
                        py::arg("best_epoch") = outcome.result.best_epoch,
                        py::arg("history") = history);
      },
      py::arg("config"), py::arg("verbose") = false,
      "Train from a config dict with the same keys as the JSON config file.");

  py::class_<Checkpoint>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_checkpoint(p); },
          py::arg("path"))
      .def_property_readonly("intents",
                             [](const Checkpoint& c) { return c.labels.intents.labels(); })
      .def_property_readonly("slot_labels",
                             [](const Checkpoint& c) { return c.labels.slots.labels(); })
      .def_property_readonly("variant",
                             [](const Checkpoint& c) { return to_string(c.model.variant()); })
      .def_property_readonly("vocab", [](const Checkpoint& c) { return c.vocab; })
      .def(
          "predict",
          [](const Checkpoint& c, const std::string& text) {
            const auto words = split_words(text);
            return to_python(prediction_json(run_predict(c, text), words));
          },
          py::arg("text"))
      .def(
          "evaluate",
          [](const Checkpoint& c, const std::filesystem::path& data_dir, const std::string& split,
             std::size_t threads) {
            Metrics metrics;
            {
              py::gil_scoped_release release;
              const auto records = load_split(data_dir, split);
              const auto set =
                  make_eval_set(records, c.vocab, c.labels, c.model.config().max_len);
              metrics = evaluate(c.model, set, c.labels, threads);
            }
            return to_python(to_json(metrics));
          },
          py::arg("data_dir"), py::arg("split") = "test", py::arg("threads") = 0,
          "Scores as percentages under the keys Intent, Slot and Sent.");
}
