#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "factsearch/agent.hpp"
#include "factsearch/analysis.hpp"
#include "factsearch/corpus.hpp"
#include "factsearch/domains.hpp"
#include "factsearch/errors.hpp"
#include "factsearch/metrics.hpp"
#include "factsearch/runner.hpp"
#include "factsearch/search.hpp"
#include "factsearch/verdicts.hpp"

namespace py = pybind11;
using namespace factsearch;

namespace {

Corpus load_corpus_py(const std::filesystem::path& path, const std::string& format) {
    CorpusFormat f = format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
    return load_corpus(path, f);
}

py::dict verdict_to_dict(const Verdict& v) {
    py::dict d;
    d["parsable"] = v.parsable;
    d["prediction"] = v.prediction ? py::cast(*v.prediction) : py::none();
    d["matched_text"] = v.matched_text ? py::cast(*v.matched_text) : py::none();
    return d;
}

py::dict run_experiment_py(const std::filesystem::path& config_path, bool force) {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    RunResult result = run_experiment(cfg, force);
    MetricsReport report = build_metrics_report(result.records, cfg.ece_bins);
    py::dict d;
    d["run_id"] = cfg.run_id;
    d["executed"] = result.executed;
    d["skipped"] = result.skipped;
    d["backend_errors"] = result.backend_errors;
    d["n_records"] = result.records.size();
    d["parsed_rate"] = report.parsed_rate;
    d["macro_f1_mean"] = report.macro_f1_mean;
    d["ci95"] = py::make_tuple(report.ci95.low, report.ci95.high);
    d["per_class_f1"] = py::make_tuple(report.per_class.class0, report.per_class.class1);
    if (report.ece_score) d["ece"] = *report.ece_score;
    if (report.brier_score) d["brier"] = *report.brier_score;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Retrieval-augmented fact checking core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<Statement>(m, "Statement")
        .def(py::init<>())
        .def_readwrite("id", &Statement::id)
        .def_readwrite("text", &Statement::text)
        .def_readwrite("label", &Statement::label)
        .def("__repr__", [](const Statement& s) {
            return "Statement(id='" + s.id + "', label=" + std::to_string(s.label) + ")";
        });

    py::class_<Corpus>(m, "Corpus")
        .def_readonly("name", &Corpus::name)
        .def_readonly("statements", &Corpus::statements)
        .def("__len__", &Corpus::size)
        .def("label_counts", &Corpus::label_counts);

    m.def("binarize_label", [](const std::string& raw) { return binarize_label(raw); },
          py::arg("raw_label"), "Map a six-way label to its binary value.");
    m.def("load_corpus", &load_corpus_py, py::arg("path"), py::arg("format") = "jsonl");
    m.def("subsample", &subsample, py::arg("corpus"), py::arg("n"), py::arg("seed"),
          "Seeded deterministic subsample (shuffle + prefix).");

    m.def("parse_search_directive",
          [](const std::string& text) -> py::object {
              auto q = parse_search_directive(text);
              return q ? py::cast(*q) : py::none();
          },
          py::arg("text"), "Extract the query following the first SEARCH: marker, if any.");

    m.def("extract_prediction",
          [](const std::string& text) { return verdict_to_dict(extract_prediction(text)); },
          py::arg("final_text"), "Last 'Factuality: 0/1' verdict in the text.");

    m.def("majority_vote",
          [](const std::vector<py::object>& trials) -> py::object {
              std::vector<Verdict> verdicts;
              for (const auto& t : trials) {
                  Verdict v;
                  if (!t.is_none()) {
                      v.parsable = true;
                      v.prediction = t.cast<int>();
                  }
                  verdicts.push_back(v);
              }
              auto result = majority_vote(verdicts);
              return result ? py::cast(*result) : py::none();
          },
          py::arg("predictions"),
          "Majority over a list of 0/1/None trial predictions; None on ties.");

    m.def("macro_f1",
          [](const std::vector<int>& preds, const std::vector<int>& labels) {
              return macro_f1(preds, labels);
          },
          py::arg("preds"), py::arg("labels"));
    m.def("per_class_f1",
          [](const std::vector<int>& preds, const std::vector<int>& labels) {
              auto f1 = per_class_f1(preds, labels);
              return py::make_tuple(f1.class0, f1.class1);
          },
          py::arg("preds"), py::arg("labels"));
    m.def("ci95_over_trials",
          [](const std::vector<double>& scores) {
              auto ci = ci95_over_trials(scores);
              return py::make_tuple(ci.low, ci.high);
          },
          py::arg("f1_scores"));
    m.def("ece", &ece, py::arg("confidences"), py::arg("correct"), py::arg("n_bins") = 10);
    m.def("brier", &brier, py::arg("confidences"), py::arg("correct"));

    m.def("cache_key",
          [](const std::string& model, const std::vector<std::pair<std::string, std::string>>& messages,
             double temperature, const std::string& salt) {
              ChatRequest request;
              request.model_id = model;
              request.temperature = temperature;
              for (const auto& [role, content] : messages)
                  request.messages.push_back({parse_role(role), content});
              return cache_key(request, salt);
          },
          py::arg("model"), py::arg("messages"), py::arg("temperature") = 1.0, py::arg("salt") = "");

    m.def("normalize_domain", [](const std::string& url) { return normalize_domain(url); },
          py::arg("host_or_url"));
    m.def("registered_domain",
          [](const std::string& host) {
              static const PublicSuffixList psl = PublicSuffixList::builtin();
              return psl.registered_domain(host);
          },
          py::arg("host"));

    m.def("run_experiment", &run_experiment_py, py::arg("config_path"), py::arg("force") = false,
          "Execute (or resume) an experiment config and return summary metrics.");

    m.def("verify_statement",
          [](const std::string& text, const std::filesystem::path& config_path) {
              ExperimentConfig cfg = ExperimentConfig::load(config_path);
              cfg.validate();
              return verify_statement(text, cfg);
          },
          py::arg("text"), py::arg("config_path"),
          "One agent loop on an ad-hoc statement; returns the printed report.");
}
