#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cliniseq/checkpoint.hpp"
#include "cliniseq/commands.hpp"
#include "cliniseq/error.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/losses.hpp"
#include "cliniseq/svm.hpp"
#include "cliniseq/synth.hpp"
#include "cliniseq/text.hpp"

namespace py = pybind11;
using namespace cliniseq;

namespace {

py::list tensor_rows(const Tensor& t) {
  py::list out;
  if (t.rank() == 1) {
    for (double v : t.values()) out.append(v);
    return out;
  }
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    out.append(py::cast(std::vector<double>(row.begin(), row.end())));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clinical note sequence models";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<CompatibilityError>(m, "CompatibilityError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a cliniseq subcommand; returns (exit_code, stdout, stderr).");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) -> std::optional<double> {
        std::vector<std::uint8_t> y(labels.begin(), labels.end());
        return eval::auc(scores, y);
      },
      py::arg("scores"), py::arg("labels"), "Mann-Whitney AUC, None when a class is absent.");

  m.def(
      "normalize_text",
      [](const std::string& text, bool stop_words) {
        return corpus::normalize_text(text, stop_words ? corpus::StopWords::onix() : corpus::StopWords::none());
      },
      py::arg("text"), py::arg("stop_words") = true);

  m.def("weighted_ce", &weighted_ce, py::arg("p"), py::arg("q"), py::arg("cfn"));
  m.def("categorical_ce",
        [](const std::vector<double>& pred, const std::vector<double>& target) {
          return categorical_ce(pred, target);
        },
        py::arg("pred"), py::arg("target"));

  m.def(
      "fit_lda",
      [](const std::vector<lda::Document>& docs, std::size_t V, std::size_t K, std::optional<double> alpha,
         double beta, std::size_t iterations, std::uint64_t seed) {
        lda::LdaModel model;
        {
          py::gil_scoped_release release;
          model = lda::fit_gibbs(docs, V, K, alpha.value_or(lda::default_alpha(K)), beta, iterations, seed);
        }
        return tensor_rows(model.phi);
      },
      py::arg("docs"), py::arg("V"), py::arg("K"), py::arg("alpha") = py::none(),
      py::arg("beta") = lda::kDefaultBeta, py::arg("iterations") = 200, py::arg("seed") = 1,
      "Collapsed Gibbs LDA; returns phi as K rows over V words.");

  py::class_<svm::SvmModel>(m, "SvmModel")
      .def_readonly("w", &svm::SvmModel::w)
      .def_readonly("b", &svm::SvmModel::b)
      .def_readonly("C", &svm::SvmModel::C)
      .def_readonly("pos_weight", &svm::SvmModel::pos_weight)
      .def("score", [](const svm::SvmModel& s, const std::vector<double>& x) { return svm::svm_score(s, x); });

  m.def(
      "train_svm",
      [](const std::vector<Vec>& x, const std::vector<int>& y, double C, double pos_weight, std::size_t epochs,
         std::uint64_t seed) { return svm::train_svm(x, y, C, pos_weight, epochs, seed); },
      py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("pos_weight") = 1.0,
      py::arg("epochs") = svm::kDefaultEpochs, py::arg("seed") = 1, "Linear SVM; labels are +1 / -1.");
  m.def(
      "svm_objective",
      [](const Vec& w, double b, const std::vector<Vec>& x, const std::vector<int>& y, double C, double pos_weight) {
        return svm::objective(w, b, x, y, C, pos_weight);
      },
      py::arg("w"), py::arg("b"), py::arg("x"), py::arg("y"), py::arg("C"), py::arg("pos_weight"));

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        auto c = ckpt::load_checkpoint(path);
        py::dict tensors;
        for (const auto& [name, t] : c.tensors) tensors[py::str(name)] = py::make_tuple(t.dims(), tensor_rows(t));
        return py::make_tuple(c.metadata, tensors);
      },
      py::arg("path"), "Returns (metadata, {name: (dims, values)}).");

  m.def(
      "planted_phi", [](std::size_t K, std::size_t V) { return tensor_rows(synth::planted_phi(K, V)); },
      py::arg("K"), py::arg("V"));
  m.def("planted_documents",
        [](std::size_t K, std::size_t V, std::size_t n_docs, std::size_t doc_len, double concentration,
           std::uint64_t seed) {
          return synth::planted_documents(synth::planted_phi(K, V), n_docs, doc_len, concentration, seed);
        },
        py::arg("K"), py::arg("V"), py::arg("n_docs"), py::arg("doc_len"), py::arg("concentration") = 0.1,
        py::arg("seed") = 1);

  m.def("knn_overlap", &eval::knn_overlap_reference, py::arg("candidate"), py::arg("reference"), py::arg("k"));
  m.def("knn_overlap_groups", &eval::knn_overlap_groups, py::arg("latents"), py::arg("groups"), py::arg("k"));
}
