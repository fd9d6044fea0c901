// SPDX-License-Identifier: Apache-2.0
// Python bindings: the CLI verbs plus a few numeric building blocks on numpy arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tarn/attention.hpp"
#include "tarn/commands.hpp"
#include "tarn/comparison.hpp"
#include "tarn/data.hpp"
#include "tarn/episodic.hpp"
#include "tarn/relation.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

tarn::Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return tarn::Matrix(1, a.shape(0), std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw tarn::ShapeError("expected a 1-D or 2-D array");
  return tarn::Matrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const tarn::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

struct CommandResult {
  int code;
  std::string out;
  std::string err;
};

template <typename Fn>
CommandResult capture(Fn&& fn) {
  std::ostringstream out, err;
  const int code = fn(out, err);
  return {code, out.str(), err.str()};
}

tarn::AttentionParams attention_params(const Array& W, const Array& b) {
  tarn::ParameterSet params;
  tarn::Rng rng(0);
  const tarn::Matrix w = to_matrix(W);
  auto p = tarn::AttentionParams::create(params, "a", w.rows(), tarn::Init::kZeros, rng);
  p.W.mutable_value() = w;
  p.b.mutable_value() = to_matrix(b);
  return p;
}

}  // namespace

PYBIND11_MODULE(_tarn, m) {
  m.doc() = "Temporal attentive relation network core";

  py::register_exception<tarn::Error>(m, "TarnError");

  py::class_<CommandResult>(m, "CommandResult")
      .def_readonly("code", &CommandResult::code)
      .def_readonly("out", &CommandResult::out)
      .def_readonly("err", &CommandResult::err);

  m.def("synth", [](const std::string& spec, const std::string& out_dir) {
    return capture([&](auto& o, auto& e) { return tarn::cli::cmd_synth(json::parse(spec), out_dir, o, e); });
  }, py::arg("spec_json"), py::arg("out_dir"));
  m.def("train", [](const std::string& config) {
    py::gil_scoped_release release;
    return capture([&](auto& o, auto& e) { return tarn::cli::cmd_train(json::parse(config), o, e); });
  }, py::arg("config_json"));
  m.def("eval", [](const std::string& config, const std::string& checkpoint, std::size_t threads) {
    py::gil_scoped_release release;
    return capture([&](auto& o, auto& e) { return tarn::cli::cmd_eval(json::parse(config), checkpoint, o, e, threads); });
  }, py::arg("config_json"), py::arg("checkpoint"), py::arg("threads") = 1);
  m.def("gradcheck", [](const std::string& config, std::optional<std::string> fault) {
    return capture([&](auto& o, auto& e) { return tarn::cli::cmd_gradcheck(json::parse(config), o, e, fault); });
  }, py::arg("config_json"), py::arg("inject_fault") = py::none());

  m.def("load_dataset", [](const std::string& path) {
    const tarn::Dataset ds = tarn::load_dataset(path);
    py::list videos;
    for (const auto& v : ds.videos) {
      videos.append(py::dict(py::arg("video_id") = v.video_id, py::arg("class_id") = v.class_id,
                             py::arg("features") = to_array(v.features)));
    }
    return py::dict(py::arg("feature_size") = ds.feature_size, py::arg("videos") = videos);
  }, py::arg("path"));

  m.def("attention", [](const Array& S, const Array& Q, const Array& W, const Array& b) {
    const auto p = attention_params(W, b);
    const auto a = tarn::align(tarn::ad::constant(to_matrix(S)), tarn::ad::constant(to_matrix(Q)), p);
    return py::make_tuple(to_array(a.weights.value()), to_array(a.aligned.value()));
  }, py::arg("sample"), py::arg("query"), py::arg("W"), py::arg("b"),
     "Returns (A, H): column-softmax weights N x M and aligned sample M x d.");

  m.def("compare", [](const std::string& measure, const Array& q, const Array& h, std::optional<Array> W,
                      std::optional<Array> b) {
    const tarn::Matrix Q = to_matrix(q), H = to_matrix(h);
    const tarn::Measure kind = tarn::parse_measure(measure);
    const std::size_t hidden = W ? static_cast<std::size_t>(W->shape(1)) : 1;
    tarn::ParameterSet params;
    tarn::Rng rng(0);
    const auto cmp = tarn::Comparator::create(params, "c", kind, Q.cols(), hidden, tarn::Init::kZeros, rng);
    if (params.size() == 2) {
      if (!W || !b) throw tarn::SpecError(measure + " needs W and b");
      params.entries()[0].var.mutable_value() = to_matrix(*W);
      params.entries()[1].var.mutable_value() = to_matrix(*b);
    }
    return to_array(cmp.compare(tarn::ad::constant(Q), tarn::ad::constant(H)).value());
  }, py::arg("measure"), py::arg("query"), py::arg("aligned"), py::arg("W") = py::none(), py::arg("b") = py::none());

  m.def("episode_loss", [](const Array& raw, std::size_t truth) {
    return tarn::episode_loss(tarn::ad::constant(to_matrix(raw)), truth).item();
  }, py::arg("raw"), py::arg("true_class"));

  m.def("predict", [](const Array& raw) {
    const auto s = tarn::aggregate_and_predict(to_matrix(raw));
    return py::make_tuple(s.predicted, s.class_probs);
  }, py::arg("raw"), "Returns (predicted class, softmax of shot-mean scores).");
}
