#include <bit>
#include <cmath>

#include <doctest.h>

#include "nnscope/bench.hpp"
#include "nnscope/dataset.hpp"
#include "nnscope/engine.hpp"
#include "nnscope/errors.hpp"
#include "nnscope/model_spec.hpp"

using namespace nnscope;

#ifndef NNSCOPE_BENCH_DIR
#define NNSCOPE_BENCH_DIR "benchmarks"
#endif

namespace {

const std::string kBenchDir = NNSCOPE_BENCH_DIR;

struct CountingObserver : Observer {
  std::size_t snapshots = 0;
  std::uint64_t fire_at;
  explicit CountingObserver(std::uint64_t at) : fire_at(at) {}
  std::optional<Verdict> on_batch_end(const BatchSnapshot& s) override {
    ++snapshots;
    if (s.global_iteration == fire_at) {
      Verdict v;
      v.code = VerdictCode::MDL;
      v.phase = Phase::metric;
      v.global_iteration = s.global_iteration;
      v.epoch = s.epoch;
      v.batch = s.batch;
      v.elapsed_seconds = 1e-9;
      v.message = "synthetic stop";
      return v;
    }
    return std::nullopt;
  }
  std::string name() const override { return "counting"; }
};

struct SnapshotKeeper : Observer {
  std::vector<BatchSnapshot> seen;
  std::optional<Verdict> on_batch_end(const BatchSnapshot& s) override {
    seen.push_back(s);
    return std::nullopt;
  }
  std::string name() const override { return "keeper"; }
};

bool tensors_bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("xor trains to a correct-model verdict with perfect accuracy") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/xor_mlp.json");
  Dataset data = builtin_dataset("xor");
  ParsedModel pm = spec.build();
  auto monitor = make_monitor("deeplocalize", pm, data.x.dim(0));
  TrainOutcome out = fit(pm.model, data.x, data.y, pm.train, {monitor.get()});
  CHECK(out.verdict.code == VerdictCode::CM);
  CHECK(out.batches_executed == 150);
  Tensor p = predict(pm.model, data.x);
  CHECK(*accuracy(p, data.y, TaskKind::binary) == doctest::Approx(1.0));
  // every prediction lands on the right side of 0.5
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((p[i] > 0.5) == (data.y[i] > 0.5));
  }
}

TEST_CASE("probes do not perturb the math") {
  // Reference loop: same layer objects driven directly, no instrumentation.
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/xor_mlp.json");
  Dataset data = builtin_dataset("xor");

  ParsedModel instrumented = spec.build();
  SnapshotKeeper keeper;
  fit(instrumented.model, data.x, data.y, instrumented.train, {&keeper});

  ParsedModel reference = spec.build();
  for (std::size_t epoch = 0; epoch < reference.train.epochs; ++epoch) {
    Tensor cur = data.x;
    for (UserLayer& ul : reference.model.layers) {
      cur = ul.core->forward(cur, true, reference.model.rng);
      if (ul.activation) cur = ul.activation->forward(cur, true, reference.model.rng);
    }
    Tensor dy = loss_grad(reference.model.loss, cur, data.y);
    for (auto it = reference.model.layers.rbegin();
         it != reference.model.layers.rend(); ++it) {
      if (it->activation) dy = it->activation->backward(dy, reference.model.optimizer).dx;
      dy = it->core->backward(dy, reference.model.optimizer).dx;
    }
  }

  REQUIRE(instrumented.model.layers.size() == reference.model.layers.size());
  for (std::size_t i = 0; i < reference.model.layers.size(); ++i) {
    CHECK(tensors_bit_equal(instrumented.model.layers[i].core->params_flat(),
                            reference.model.layers[i].core->params_flat()));
  }
}

TEST_CASE("training is bit-reproducible from the seed") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/blobs_classifier.json");
  Dataset data = builtin_dataset("blobs");
  auto run = [&]() {
    ParsedModel pm = spec.build();
    auto monitor = make_monitor("deeplocalize", pm, data.x.dim(0));
    TrainOutcome out = fit(pm.model, data.x, data.y, pm.train, {monitor.get()});
    std::vector<Tensor> params;
    for (auto& ul : pm.model.layers) params.push_back(ul.core->params_flat());
    return std::make_pair(out, params);
  };
  auto [out1, params1] = run();
  auto [out2, params2] = run();
  CHECK(out1.verdict.code == out2.verdict.code);
  CHECK(out1.verdict.global_iteration == out2.verdict.global_iteration);
  CHECK(std::bit_cast<std::uint64_t>(out1.final_loss) ==
        std::bit_cast<std::uint64_t>(out2.final_loss));
  for (std::size_t i = 0; i < params1.size(); ++i) {
    CHECK(tensors_bit_equal(params1[i], params2[i]));
  }
}

TEST_CASE("a firing observer halts training immediately") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/blobs_classifier.json");
  Dataset data = builtin_dataset("blobs");
  ParsedModel pm = spec.build();
  CountingObserver obs(7);
  TrainOutcome out = fit(pm.model, data.x, data.y, pm.train, {&obs});
  CHECK(out.verdict.code == VerdictCode::MDL);
  CHECK(obs.snapshots == 8);  // exactly t + 1 snapshots
  CHECK(out.batches_executed == 8);
}

TEST_CASE("batch partition covers the dataset with a short final batch") {
  // n = 5, batch 2: slices 2/2/1; the short batch is still batch-mean
  Model model;
  model.rng = Rng(1);
  UserLayer ul;
  ul.user_index = 1;
  ul.core = std::make_unique<DenseLayer>(Tensor::matrix({{1.0}}), Tensor({1}));
  model.layers.push_back(std::move(ul));
  model.loss = LossKind::mse;
  model.optimizer.lr = 0.0;
  model.task = TaskKind::none;

  Tensor x = Tensor::matrix({{1}, {2}, {3}, {4}, {10}});
  Tensor y = Tensor::matrix({{0}, {0}, {0}, {0}, {0}});
  TrainConfig tc;
  tc.batch_size = 2;
  tc.epochs = 1;
  SnapshotKeeper keeper;
  TrainOutcome out = fit(model, x, y, tc, {&keeper});
  CHECK(out.batches_executed == 3);
  REQUIRE(keeper.seen.size() == 3);
  // last batch holds one sample (value 10, weight 1): mse = 100
  CHECK(keeper.seen[2].loss == doctest::Approx(100.0));
  CHECK(out.verdict.code == VerdictCode::CM);
}

TEST_CASE("fit rejects malformed inputs before training") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/xor_mlp.json");
  ParsedModel pm = spec.build();
  Tensor before = pm.model.layers[0].core->params_flat();

  Tensor x = Tensor::matrix({{1, 2}, {3, 4}});
  Tensor y_bad = Tensor::matrix({{1}});
  CHECK_THROWS_AS(fit(pm.model, x, y_bad, pm.train, {}), ShapeError);

  Tensor x_bad = Tensor::matrix({{1, 2, 3}, {1, 2, 3}});
  Tensor y = Tensor::matrix({{1}, {0}});
  CHECK_THROWS_AS(fit(pm.model, x_bad, y, pm.train, {}), ShapeError);

  CHECK_THROWS_AS(fit(pm.model, Tensor(), Tensor(), pm.train, {}), ContractError);

  TrainConfig big;
  big.batch_size = 10;
  big.epochs = 1;
  CHECK_THROWS_AS(fit(pm.model, x, y, big, {}), ContractError);

  // weights untouched by any of the rejected calls
  CHECK(tensors_bit_equal(before, pm.model.layers[0].core->params_flat()));
}

TEST_CASE("predict ignores dropout and rejects empty input") {
  Model model;
  model.rng = Rng(2);
  UserLayer ul;
  ul.user_index = 1;
  ul.core = std::make_unique<DropoutLayer>(0.9);
  model.layers.push_back(std::move(ul));

  Tensor x = Tensor::matrix({{1, 2}, {3, 4}});
  Tensor y = predict(model, x);
  CHECK(tensors_bit_equal(x, y));
  CHECK_THROWS_AS(predict(model, Tensor()), ContractError);
}

TEST_CASE("a layer without activation records AF equal to FW") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/linreg_regressor.json");
  Dataset data = builtin_dataset("linreg");
  ParsedModel pm = spec.build();
  SnapshotKeeper keeper;
  TrainConfig one_batch = pm.train;
  one_batch.epochs = 1;
  fit(pm.model, data.x, data.y, one_batch, {&keeper});
  REQUIRE_FALSE(keeper.seen.empty());
  const ForwardRecord& rec = keeper.seen[0].forward[0];
  CHECK(tensors_bit_equal(rec.pre_activation, rec.post_activation));
}

TEST_CASE("frozen full-batch training trips the forward constant check first") {
  // With lr = 0 and a single repeated batch every observed series is
  // constant, so the scan order makes the first pre-activation window the
  // first to fire: EBA at layer 1, iteration window_n - 1.
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/xor_mlp.json");
  MutationResult zeroed = mutate(spec, parse_mutation("zero_lr"));
  Dataset data = builtin_dataset("xor");
  ParsedModel pm = zeroed.spec.build();
  auto monitor = make_monitor("deeplocalize", pm, data.x.dim(0));
  TrainOutcome out = fit(pm.model, data.x, data.y, pm.train, {monitor.get()});
  CHECK(out.verdict.code == VerdictCode::EBA);
  REQUIRE(out.verdict.layer.has_value());
  CHECK(*out.verdict.layer == 1);
  CHECK(out.verdict.global_iteration == 49);
}

TEST_CASE("shuffle keeps the partition exact and stays reproducible") {
  ModelSpec spec = ModelSpec::from_file(kBenchDir + "/blobs_classifier.json");
  nlohmann::json doc = spec.document();
  doc["fit"]["shuffle"] = true;
  ModelSpec shuffled = ModelSpec::from_document(doc);
  Dataset data = builtin_dataset("blobs");
  auto run = [&]() {
    ParsedModel pm = shuffled.build();
    SnapshotKeeper keeper;
    TrainOutcome out = fit(pm.model, data.x, data.y, pm.train, {&keeper});
    return std::make_pair(out.batches_executed, keeper.seen.front().loss);
  };
  auto [n1, loss1] = run();
  auto [n2, loss2] = run();
  CHECK(n1 == 67);
  CHECK(n1 == n2);
  CHECK(std::bit_cast<std::uint64_t>(loss1) == std::bit_cast<std::uint64_t>(loss2));
}

}  // TEST_SUITE
