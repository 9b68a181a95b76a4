#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnscope/dataset.hpp"
#include "nnscope/mutation.hpp"

namespace nnscope {

struct BenchDataSpec {
  std::string source;  // builtin:<name> or csv path
  DatasetOptions options;
};

struct BenchCase {
  std::string id;
  ModelSpec spec;
  BenchDataSpec data;
  std::optional<Mutation> mutation;  // absent = correct case
};

struct Suite {
  std::vector<BenchCase> cases;
  std::vector<std::string> monitors;
};

struct CaseRow {
  std::string case_id;
  std::string mutation;  // "-" for correct cases
  std::string monitor;
  bool failed = false;
  std::string error;
  bool ib = false;
  std::optional<bool> fl;  // absent where localization is not applicable
  std::optional<Verdict> verdict;
};

struct MonitorAggregate {
  std::string monitor;
  std::size_t cases = 0;
  std::size_t ib = 0;
  std::size_t fl_applicable = 0;
  std::size_t fl = 0;
};

struct BenchReport {
  std::vector<CaseRow> rows;  // sorted by case id, monitors in given order
  std::vector<MonitorAggregate> aggregates;

  // Deterministic: no wall-clock columns, byte-identical across runs.
  std::string to_csv() const;
  // Human-readable aligned table, including elapsed seconds.
  std::string to_table() const;
};

// Runs every (case x monitor) combination with exactly that one monitor
// attached. Case build errors become per-case failures, not a suite abort.
BenchReport run_bench(const std::vector<BenchCase>& cases,
                      const std::vector<std::string>& monitors);

// Suite document: {"monitors": [...], "cases": [{"id", "spec", "data",
// "options"?, "mutation"?}]}. Spec paths resolve relative to the suite file.
Suite load_suite(const std::string& path);

// Monitor factory; total iterations feed the detector's zero threshold.
std::unique_ptr<Observer> make_monitor(const std::string& name,
                                       const ParsedModel& parsed,
                                       std::size_t dataset_rows);

}  // namespace nnscope
