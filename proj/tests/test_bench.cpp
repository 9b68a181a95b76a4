#include <doctest.h>

#include "nnscope/bench.hpp"
#include "nnscope/errors.hpp"

using namespace nnscope;

#ifndef NNSCOPE_BENCH_DIR
#define NNSCOPE_BENCH_DIR "benchmarks"
#endif

namespace {

const std::string kBenchDir = NNSCOPE_BENCH_DIR;

BenchCase make_case(const std::string& id, const std::string& spec_file,
                    const std::string& data,
                    std::optional<Mutation> mutation = std::nullopt) {
  return BenchCase{id, ModelSpec::from_file(kBenchDir + "/" + spec_file),
                   BenchDataSpec{data, {}}, std::move(mutation)};
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("empty suite yields an empty report") {
  BenchReport report = run_bench({}, {"deeplocalize"});
  CHECK(report.rows.empty());
  CHECK(report.to_csv() ==
        "case_id,mutation,monitor,ib,fl,verdict,layer,phase,epoch,batch,iteration\n");
  REQUIRE(report.aggregates.size() == 1);
  CHECK(report.aggregates[0].cases == 0);
}

TEST_CASE("a correct case passes IB with no FL column") {
  BenchReport report =
      run_bench({make_case("xor-ok", "xor_mlp.json", "builtin:xor")},
                {"deeplocalize"});
  REQUIRE(report.rows.size() == 1);
  const CaseRow& row = report.rows[0];
  CHECK_FALSE(row.failed);
  CHECK(row.ib);
  CHECK_FALSE(row.fl.has_value());
  CHECK(row.verdict->code == VerdictCode::CM);
  CHECK(report.aggregates[0].ib == 1);
  CHECK(report.aggregates[0].fl_applicable == 0);
}

TEST_CASE("the baseline misses a frozen run that deeplocalize catches") {
  Mutation zero = parse_mutation("zero_lr");
  BenchReport report = run_bench(
      {make_case("blobs-frozen", "blobs_classifier.json", "builtin:blobs", zero)},
      {"terminate-on-nan", "deeplocalize"});
  REQUIRE(report.rows.size() == 2);
  const CaseRow* tnan = nullptr;
  const CaseRow* dl = nullptr;
  for (const CaseRow& row : report.rows) {
    if (row.monitor == "terminate-on-nan") tnan = &row;
    if (row.monitor == "deeplocalize") dl = &row;
  }
  REQUIRE(tnan);
  REQUIRE(dl);
  // loss stays finite, so the baseline trains to completion and misses
  CHECK(tnan->verdict->code == VerdictCode::CM);
  CHECK_FALSE(tnan->ib);
  REQUIRE(tnan->fl.has_value());
  CHECK_FALSE(*tnan->fl);  // baselines never localize, by construction
  CHECK(dl->ib);
  CHECK(dl->verdict->code == VerdictCode::EBW);
  CHECK(*dl->verdict->layer == 2);
  CHECK(*dl->fl);
}

TEST_CASE("case build failures do not abort the suite") {
  Mutation bad = parse_mutation("drop_activation=7");
  BenchReport report = run_bench(
      {make_case("broken", "xor_mlp.json", "builtin:xor", bad),
       make_case("fine", "xor_mlp.json", "builtin:xor")},
      {"deeplocalize"});
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].case_id == "broken");
  CHECK(report.rows[0].failed);
  CHECK_FALSE(report.rows[0].error.empty());
  CHECK(report.rows[1].case_id == "fine");
  CHECK(report.rows[1].ib);
}

TEST_CASE("canonical suite loads with twelve cases and four monitors") {
  Suite suite = load_suite(kBenchDir + "/suite.json");
  CHECK(suite.cases.size() == 12);
  CHECK(suite.monitors.size() == 4);
  std::size_t mutants = 0;
  for (const auto& c : suite.cases) {
    if (c.mutation) ++mutants;
  }
  CHECK(mutants == 9);
}

TEST_CASE("aggregates equal the sum of row flags and FL implies IB") {
  Suite suite = load_suite(kBenchDir + "/suite.json");
  // two monitors keep the runtime small; full matrix runs in acceptance
  BenchReport report = run_bench(suite.cases, {"deeplocalize", "early-stop-loss"});
  for (const MonitorAggregate& agg : report.aggregates) {
    std::size_t ib = 0, fl = 0, cases = 0;
    for (const CaseRow& row : report.rows) {
      if (row.monitor != agg.monitor || row.failed) continue;
      ++cases;
      if (row.ib) ++ib;
      if (row.fl && *row.fl) {
        ++fl;
        CHECK(row.ib);  // FL implies IB
      }
    }
    CHECK(agg.cases == cases);
    CHECK(agg.ib == ib);
    CHECK(agg.fl == fl);
    CHECK(agg.fl <= agg.fl_applicable);
  }
}

TEST_CASE("csv output is deterministic across runs") {
  Suite suite = load_suite(kBenchDir + "/suite.json");
  std::vector<BenchCase> subset;
  subset.push_back(std::move(suite.cases[0]));
  subset.push_back(std::move(suite.cases[3]));
  BenchReport a = run_bench(subset, {"deeplocalize"});
  BenchReport b = run_bench(subset, {"deeplocalize"});
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_csv().find("04-blobs-zero-lr") != std::string::npos);
}

TEST_CASE("unknown monitors are per-case errors") {
  BenchReport report = run_bench(
      {make_case("xor-ok", "xor_mlp.json", "builtin:xor")}, {"banana"});
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].failed);
  CHECK(report.rows[0].error.find("unknown monitor") != std::string::npos);
}

}  // TEST_SUITE
