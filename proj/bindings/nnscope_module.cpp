#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "nnscope/bench.hpp"
#include "nnscope/engine.hpp"
#include "nnscope/errors.hpp"

namespace py = pybind11;

namespace {

using nnscope::Dataset;
using nnscope::DatasetOptions;
using nnscope::ModelSpec;
using nnscope::ParsedModel;

py::object json_to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<long long>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(json_to_py(v));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = json_to_py(v);
      return out;
    }
    default: return py::none();
  }
}

ModelSpec spec_from_arg(const std::string& spec) {
  // A JSON document or a path to one.
  if (!spec.empty() && spec.front() == '{') return ModelSpec::from_json_text(spec);
  return ModelSpec::from_file(spec);
}

DatasetOptions options_from_args(const std::vector<std::size_t>& label_cols,
                                 bool one_hot, const std::string& normalize) {
  DatasetOptions options;
  options.label_cols = label_cols;
  options.one_hot = one_hot;
  if (normalize == "minmax") {
    options.normalize = nnscope::NormalizeMethod::minmax;
  } else if (normalize == "standardize") {
    options.normalize = nnscope::NormalizeMethod::standardize;
  } else if (!normalize.empty()) {
    throw nnscope::ConfigError("normalize must be '', 'minmax' or 'standardize'");
  }
  return options;
}

py::dict train(const std::string& spec_arg, const std::string& data_source,
               const std::string& monitor, py::object seed,
               const std::string& normalize, bool one_hot,
               const std::vector<std::size_t>& label_cols) {
  ModelSpec spec = spec_from_arg(spec_arg);
  Dataset data = nnscope::load_dataset(
      data_source, options_from_args(label_cols, one_hot, normalize));
  ParsedModel parsed = seed.is_none()
                           ? spec.build()
                           : spec.build_with_seed(seed.cast<std::uint64_t>());

  std::vector<std::unique_ptr<nnscope::Observer>> owned;
  if (monitor == "all") {
    owned.push_back(nnscope::make_monitor("deeplocalize", parsed, data.x.dim(0)));
    owned.push_back(nnscope::make_monitor("terminate-on-nan", parsed, data.x.dim(0)));
    owned.push_back(nnscope::make_monitor("early-stop-loss", parsed, data.x.dim(0)));
    if (parsed.model.task != nnscope::TaskKind::none) {
      owned.push_back(nnscope::make_monitor("early-stop-acc", parsed, data.x.dim(0)));
    }
  } else if (monitor != "none") {
    owned.push_back(nnscope::make_monitor(monitor, parsed, data.x.dim(0)));
  }
  std::vector<nnscope::Observer*> observers;
  for (auto& o : owned) observers.push_back(o.get());

  nnscope::TrainOutcome outcome =
      nnscope::fit(parsed.model, data.x, data.y, parsed.train, observers);

  py::dict out;
  out["verdict"] =
      json_to_py(nlohmann::json::parse(nnscope::verdict_to_json(outcome.verdict)));
  out["final_loss"] = outcome.final_loss;
  out["final_accuracy"] = outcome.final_accuracy
                              ? py::object(py::float_(*outcome.final_accuracy))
                              : py::object(py::none());
  out["batches_executed"] = outcome.batches_executed;
  out["elapsed_seconds"] = outcome.elapsed_seconds;
  return out;
}

py::dict mutate_spec(const std::string& spec_arg, const std::string& op) {
  ModelSpec spec = spec_from_arg(spec_arg);
  nnscope::Mutation mutation = nnscope::parse_mutation(op);
  nnscope::MutationResult result = nnscope::mutate(spec, mutation);
  py::dict out;
  out["spec"] = result.spec.serialize(2);
  py::dict truth;
  truth["expected_detectable"] = result.truth.expected_detectable;
  py::list phases;
  for (nnscope::Phase p : result.truth.expected_phases) {
    phases.append(nnscope::phase_name(p));
  }
  truth["expected_phases"] = phases;
  truth["expected_layer"] = result.truth.expected_layer
                                ? py::object(py::int_(*result.truth.expected_layer))
                                : py::object(py::none());
  out["ground_truth"] = truth;
  return out;
}

py::dict builtin_dataset_py(const std::string& name) {
  Dataset d = nnscope::builtin_dataset(name);
  auto rows_of = [](const nnscope::Tensor& t) {
    py::list rows;
    std::size_t cols = t.size() / t.dim(0);
    for (std::size_t r = 0; r < t.dim(0); ++r) {
      py::list row;
      for (std::size_t c = 0; c < cols; ++c) row.append(t[r * cols + c]);
      rows.append(row);
    }
    return rows;
  };
  py::dict out;
  out["x"] = rows_of(d.x);
  out["y"] = rows_of(d.y);
  out["feature_names"] = d.feature_names;
  return out;
}

}  // namespace

PYBIND11_MODULE(_nnscope, m) {
  m.doc() = "white-box neural network training with fault localization";

  py::register_exception<nnscope::ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<nnscope::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<nnscope::SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<nnscope::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<nnscope::IoError>(m, "IoError", PyExc_OSError);

  m.def("train", &train, py::arg("spec"), py::arg("data"),
        py::arg("monitor") = "deeplocalize", py::arg("seed") = py::none(),
        py::arg("normalize") = "", py::arg("one_hot") = false,
        py::arg("label_cols") = std::vector<std::size_t>{},
        "Train a model spec (JSON text or path) on a dataset "
        "(csv path or builtin:<name>) and return the report dict.");
  m.def("mutate", &mutate_spec, py::arg("spec"), py::arg("op"),
        "Apply a seeded bug (e.g. 'wrong_loss=mse') and return the mutated "
        "spec text plus its ground truth.");
  m.def("builtin_dataset", &builtin_dataset_py, py::arg("name"),
        "Rows of a builtin dataset (xor, blobs, blobs255, linreg).");
}
