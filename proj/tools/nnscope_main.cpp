#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nnscope/bench.hpp"
#include "nnscope/engine.hpp"
#include "nnscope/errors.hpp"
#include "nnscope/trace.hpp"

namespace {

using nnscope::Verdict;
using nnscope::VerdictCode;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFault = 2;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw nnscope::IoError("cannot write '" + path + "'");
  out << content;
}

std::string report_json(const nnscope::TrainOutcome& outcome,
                        const std::string& monitor) {
  nlohmann::json j;
  j["verdict"] = nlohmann::json::parse(nnscope::verdict_to_json(outcome.verdict));
  j["monitor"] = monitor;
  j["final_loss"] = outcome.final_loss;
  if (outcome.final_accuracy) {
    j["final_accuracy"] = *outcome.final_accuracy;
  } else {
    j["final_accuracy"] = nullptr;
  }
  j["history_lengths"] = {
      {"loss", outcome.batches_executed},
      {"accuracy", outcome.final_accuracy ? outcome.batches_executed : 0}};
  j["batches_executed"] = outcome.batches_executed;
  return j.dump(2) + "\n";
}

int run_train(const std::string& model_path, const std::string& data_source,
              const std::vector<std::size_t>& label_cols, bool one_hot,
              const std::string& normalize, const std::string& monitor_name,
              std::optional<std::uint64_t> seed, const std::string& out_path,
              const std::string& trace_path) {
  nnscope::ModelSpec spec = nnscope::ModelSpec::from_file(model_path);

  nnscope::DatasetOptions options;
  options.label_cols = label_cols;
  options.one_hot = one_hot;
  if (normalize == "minmax") {
    options.normalize = nnscope::NormalizeMethod::minmax;
  } else if (normalize == "standardize") {
    options.normalize = nnscope::NormalizeMethod::standardize;
  } else if (!normalize.empty()) {
    throw nnscope::ConfigError("--normalize must be minmax or standardize");
  }
  nnscope::Dataset data = nnscope::load_dataset(data_source, options);

  nnscope::ParsedModel parsed =
      seed ? spec.build_with_seed(*seed) : spec.build();

  std::vector<std::unique_ptr<nnscope::Observer>> owned;
  // The trace writer goes first so the verdict batch still gets traced.
  if (!trace_path.empty()) {
    owned.push_back(std::make_unique<nnscope::TraceWriter>(trace_path));
  }
  if (monitor_name == "all") {
    owned.push_back(nnscope::make_monitor("deeplocalize", parsed, data.x.dim(0)));
    owned.push_back(nnscope::make_monitor("terminate-on-nan", parsed, data.x.dim(0)));
    owned.push_back(nnscope::make_monitor("early-stop-loss", parsed, data.x.dim(0)));
    if (parsed.model.task != nnscope::TaskKind::none) {
      owned.push_back(nnscope::make_monitor("early-stop-acc", parsed, data.x.dim(0)));
    }
  } else if (monitor_name != "none") {
    owned.push_back(nnscope::make_monitor(monitor_name, parsed, data.x.dim(0)));
  }
  std::vector<nnscope::Observer*> observers;
  observers.reserve(owned.size());
  for (auto& o : owned) observers.push_back(o.get());

  nnscope::TrainOutcome outcome =
      nnscope::fit(parsed.model, data.x, data.y, parsed.train, observers);

  const Verdict& v = outcome.verdict;
  std::cout << nnscope::verdict_code_name(v.code);
  if (v.layer) std::cout << " at layer " << *v.layer;
  std::cout << " (" << nnscope::phase_name(v.phase) << "), epoch " << v.epoch
            << ", batch " << v.batch << ", iteration " << v.global_iteration
            << "\n  " << v.message << "\n";
  std::cout << "final loss " << outcome.final_loss;
  if (outcome.final_accuracy) {
    std::cout << ", final accuracy " << *outcome.final_accuracy;
  }
  std::cout << ", batches " << outcome.batches_executed << "\n";

  if (!out_path.empty()) {
    write_file(out_path, report_json(outcome, monitor_name));
  }
  return v.code == VerdictCode::CM ? kExitOk : kExitFault;
}

int run_mutate(const std::string& model_path, const std::string& op,
               const std::string& out_path) {
  nnscope::ModelSpec spec = nnscope::ModelSpec::from_file(model_path);
  nnscope::Mutation mutation = nnscope::parse_mutation(op);
  nnscope::MutationResult result = nnscope::mutate(spec, mutation);
  write_file(out_path, result.spec.serialize(2) + "\n");

  nlohmann::json truth;
  truth["mutation"] = nnscope::mutation_label(mutation);
  truth["expected_detectable"] = result.truth.expected_detectable;
  nlohmann::json phases = nlohmann::json::array();
  for (nnscope::Phase p : result.truth.expected_phases) {
    phases.push_back(nnscope::phase_name(p));
  }
  truth["expected_phases"] = phases;
  truth["expected_layer"] = result.truth.expected_layer
                                ? nlohmann::json(*result.truth.expected_layer)
                                : nlohmann::json(nullptr);
  if (result.truth.expected_code) {
    truth["expected_code"] = nnscope::verdict_code_name(*result.truth.expected_code);
  }
  std::cout << truth.dump(2) << "\n";
  return kExitOk;
}

int run_bench_cmd(const std::string& suite_path, const std::string& out_path) {
  nnscope::Suite suite = nnscope::load_suite(suite_path);
  nnscope::BenchReport report = nnscope::run_bench(suite.cases, suite.monitors);
  if (!out_path.empty()) write_file(out_path, report.to_csv());
  std::cout << report.to_table();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"white-box neural network training with fault localization"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model spec with monitors");
  std::string model_path, data_source, normalize, out_path, trace_path;
  std::string monitor = "deeplocalize";
  std::vector<std::size_t> label_cols;
  bool one_hot = false;
  std::optional<std::uint64_t> seed;
  train->add_option("--model", model_path, "model spec JSON")->required();
  train->add_option("--data", data_source, "CSV path or builtin:<name>")->required();
  train->add_option("--label-cols", label_cols, "0-based label column indices");
  train->add_flag("--one-hot", one_hot, "one-hot encode the label column");
  train->add_option("--normalize", normalize, "minmax or standardize");
  train
      ->add_option("--monitor", monitor,
                   "none|deeplocalize|terminate-on-nan|early-stop-loss|"
                   "early-stop-acc|all")
      ->required();
  train->add_option("--seed", seed, "override the spec seed");
  train->add_option("--out", out_path, "write the report JSON here");
  train->add_option("--trace-out", trace_path, "write per-batch JSONL summaries");

  // mutate
  auto* mutate_cmd = app.add_subcommand("mutate", "apply a seeded bug to a spec");
  std::string mutate_model, mutate_op, mutate_out;
  mutate_cmd->add_option("--model", mutate_model, "model spec JSON")->required();
  mutate_cmd->add_option("--op", mutate_op, "mutation, e.g. wrong_loss=mse")->required();
  mutate_cmd->add_option("--out", mutate_out, "write the mutated spec here")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  std::string suite_path, bench_out;
  bench_cmd->add_option("--suite", suite_path, "suite JSON")->required();
  bench_cmd->add_option("--out", bench_out, "write the results CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return run_train(model_path, data_source, label_cols, one_hot, normalize,
                       monitor, seed, out_path, trace_path);
    }
    if (mutate_cmd->parsed()) {
      return run_mutate(mutate_model, mutate_op, mutate_out);
    }
    if (bench_cmd->parsed()) {
      return run_bench_cmd(suite_path, bench_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
