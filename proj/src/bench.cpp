#include "nnscope/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nnscope/engine.hpp"
#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

using nlohmann::json;

std::uint64_t planned_iterations(const TrainConfig& train, std::size_t rows) {
  std::size_t per_epoch = (rows + train.batch_size - 1) / train.batch_size;
  return static_cast<std::uint64_t>(train.epochs) * per_epoch;
}

}  // namespace

std::unique_ptr<Observer> make_monitor(const std::string& name,
                                       const ParsedModel& parsed,
                                       std::size_t dataset_rows) {
  if (name == "deeplocalize") {
    return std::make_unique<Detector>(DetectorConfig{},
                                      planned_iterations(parsed.train, dataset_rows));
  }
  if (name == "terminate-on-nan") return std::make_unique<TerminateOnNaN>();
  if (name == "early-stop-loss") {
    return std::make_unique<EarlyStopping>(EarlyStopping::Monitor::loss);
  }
  if (name == "early-stop-acc") {
    if (parsed.model.task == TaskKind::none) {
      throw ConfigError("early-stop-acc requires a model with an accuracy metric");
    }
    return std::make_unique<EarlyStopping>(EarlyStopping::Monitor::accuracy);
  }
  throw ConfigError("unknown monitor '" + name +
                    "' (available: deeplocalize, terminate-on-nan, "
                    "early-stop-loss, early-stop-acc)");
}

BenchReport run_bench(const std::vector<BenchCase>& cases,
                      const std::vector<std::string>& monitors) {
  BenchReport report;
  for (const std::string& m : monitors) {
    report.aggregates.push_back({m, 0, 0, 0, 0});
  }

  for (const BenchCase& bench_case : cases) {
    ModelSpec effective = bench_case.spec;
    GroundTruth truth;
    double data_scale = 1.0;
    bool buggy = bench_case.mutation.has_value();
    std::string mutation_text = "-";
    std::string case_error;

    if (buggy) {
      mutation_text = mutation_label(*bench_case.mutation);
      try {
        MutationResult res = mutate(bench_case.spec, *bench_case.mutation);
        effective = std::move(res.spec);
        truth = std::move(res.truth);
        if (bench_case.mutation->op == MutationOp::denormalize_input) {
          data_scale = bench_case.mutation->factor;
        }
      } catch (const std::exception& e) {
        case_error = e.what();
      }
    }

    for (std::size_t mi = 0; mi < monitors.size(); ++mi) {
      const std::string& monitor_name = monitors[mi];
      CaseRow row;
      row.case_id = bench_case.id;
      row.mutation = mutation_text;
      row.monitor = monitor_name;
      if (!case_error.empty()) {
        row.failed = true;
        row.error = case_error;
        report.rows.push_back(std::move(row));
        continue;
      }
      try {
        Dataset data = load_dataset(bench_case.data.source, bench_case.data.options);
        if (data_scale != 1.0) data = scale_features(data, data_scale);
        ParsedModel parsed = effective.build();
        std::unique_ptr<Observer> monitor =
            make_monitor(monitor_name, parsed, data.x.dim(0));
        TrainOutcome outcome =
            fit(parsed.model, data.x, data.y, parsed.train, {monitor.get()});
        bool detected = outcome.verdict.code != VerdictCode::CM;
        row.ib = buggy ? detected : !detected;
        if (buggy) {
          bool localized = false;
          if (monitor->localizes() && detected) {
            localized = phase_matches(truth, outcome.verdict) &&
                        (!truth.expected_layer ||
                         (outcome.verdict.layer &&
                          *outcome.verdict.layer == *truth.expected_layer));
          }
          row.fl = localized;
        }
        row.verdict = std::move(outcome.verdict);
        MonitorAggregate& agg = report.aggregates[mi];
        agg.cases += 1;
        if (row.ib) agg.ib += 1;
        if (buggy) {
          agg.fl_applicable += 1;
          if (row.fl && *row.fl) agg.fl += 1;
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }

  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const CaseRow& a, const CaseRow& b) {
                     return a.case_id < b.case_id;
                   });
  return report;
}

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  os << "case_id,mutation,monitor,ib,fl,verdict,layer,phase,epoch,batch,iteration\n";
  for (const CaseRow& row : rows) {
    os << row.case_id << "," << row.mutation << "," << row.monitor << ",";
    if (row.failed) {
      os << ",,ERROR,,,,,\n";
      continue;
    }
    os << (row.ib ? "1" : "0") << ",";
    if (row.fl) os << (*row.fl ? "1" : "0");
    os << "," << verdict_code_name(row.verdict->code) << ",";
    if (row.verdict->layer) os << *row.verdict->layer;
    os << "," << phase_name(row.verdict->phase) << "," << row.verdict->epoch
       << "," << row.verdict->batch << "," << row.verdict->global_iteration
       << "\n";
  }
  return os.str();
}

std::string BenchReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(22) << "case" << std::setw(28) << "mutation"
     << std::setw(18) << "monitor" << std::setw(4) << "IB" << std::setw(4)
     << "FL" << std::setw(9) << "verdict" << std::setw(7) << "layer"
     << std::setw(10) << "phase" << std::setw(7) << "epoch" << std::setw(10)
     << "iter" << "elapsed[s]" << "\n";
  for (const CaseRow& row : rows) {
    os << std::left << std::setw(22) << row.case_id << std::setw(28)
       << row.mutation << std::setw(18) << row.monitor;
    if (row.failed) {
      os << "ERROR: " << row.error << "\n";
      continue;
    }
    os << std::setw(4) << (row.ib ? "y" : "n") << std::setw(4)
       << (row.fl ? (*row.fl ? "y" : "n") : "-") << std::setw(9)
       << verdict_code_name(row.verdict->code) << std::setw(7)
       << (row.verdict->layer ? std::to_string(*row.verdict->layer) : "-")
       << std::setw(10) << phase_name(row.verdict->phase) << std::setw(7)
       << row.verdict->epoch << std::setw(10) << row.verdict->global_iteration
       << std::fixed << std::setprecision(3) << row.verdict->elapsed_seconds
       << "\n";
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
  }
  for (const MonitorAggregate& agg : aggregates) {
    os << "monitor " << agg.monitor << ": IB " << agg.ib << "/" << agg.cases
       << ", FL " << agg.fl << "/" << agg.fl_applicable << "\n";
  }
  return os.str();
}

Suite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open suite '" + path + "'");
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw IoError("suite '" + path + "' is not valid JSON");
  if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array()) {
    throw IoError("suite needs a 'cases' array");
  }

  Suite suite;
  if (doc.contains("monitors")) {
    for (const auto& m : doc["monitors"]) {
      suite.monitors.push_back(m.get<std::string>());
    }
  } else {
    suite.monitors = {"deeplocalize"};
  }

  std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (const auto& c : doc["cases"]) {
    if (!c.is_object() || !c.contains("id") || !c.contains("spec") ||
        !c.contains("data")) {
      throw IoError("every case needs id, spec and data fields");
    }
    BenchCase bench_case{
        c.at("id").get<std::string>(),
        ModelSpec::from_file((base / c.at("spec").get<std::string>()).string()),
        BenchDataSpec{c.at("data").get<std::string>(), {}},
        std::nullopt};
    if (c.contains("options")) {
      const json& o = c.at("options");
      if (o.contains("one_hot")) bench_case.data.options.one_hot = o.at("one_hot").get<bool>();
      if (o.contains("label_cols")) {
        for (const auto& v : o.at("label_cols")) {
          bench_case.data.options.label_cols.push_back(v.get<std::size_t>());
        }
      }
      if (o.contains("normalize")) {
        std::string n = o.at("normalize").get<std::string>();
        if (n == "minmax") {
          bench_case.data.options.normalize = NormalizeMethod::minmax;
        } else if (n == "standardize") {
          bench_case.data.options.normalize = NormalizeMethod::standardize;
        } else {
          throw IoError("unknown normalize method '" + n + "' in suite");
        }
      }
    }
    if (c.contains("mutation")) {
      const json& m = c.at("mutation");
      Mutation mut;
      std::string op = m.at("op").get<std::string>();
      std::string arg;
      if (m.contains("to")) arg = m.at("to").get<std::string>();
      if (m.contains("layer")) arg = std::to_string(m.at("layer").get<int>());
      if (m.contains("factor")) arg = std::to_string(m.at("factor").get<double>());
      bench_case.mutation = parse_mutation(arg.empty() ? op : op + "=" + arg);
    }
    suite.cases.push_back(std::move(bench_case));
  }
  return suite;
}

}  // namespace nnscope
