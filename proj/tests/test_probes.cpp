#include <cmath>

#include <doctest.h>

#include "nnscope/engine.hpp"
#include "nnscope/errors.hpp"
#include "nnscope/probes.hpp"

using namespace nnscope;

namespace {

// Observer that keeps every snapshot it sees.
struct Recorder : Observer {
  std::vector<BatchSnapshot> seen;
  std::optional<Verdict> on_batch_end(const BatchSnapshot& s) override {
    seen.push_back(s);
    return std::nullopt;
  }
  std::string name() const override { return "recorder"; }
};

Tensor ones(std::size_t n) {
  Tensor t({n});
  for (auto& v : t.data()) v = 1.0;
  return t;
}

}  // namespace

TEST_SUITE("probes") {

TEST_CASE("forward captures keep layer order") {
  SnapshotBuilder b(0, 0, 0);
  b.capture_forward(1, ones(2), ones(2));
  b.capture_forward(2, ones(3), ones(3));
  b.set_metrics(0.5, 0.75);
  b.capture_backward(2, ones(3), Tensor(), Tensor());
  b.capture_backward(1, ones(2), ones(4), ones(4));
  BatchSnapshot s = b.build();
  REQUIRE(s.forward.size() == 2);
  CHECK(s.forward[0].user_index == 1);
  CHECK(s.forward[1].user_index == 2);
  REQUIRE(s.backward.size() == 2);
  CHECK(s.backward[0].user_index == 2);
  CHECK(s.backward[1].user_index == 1);
}

TEST_CASE("double capture is a protocol error") {
  SnapshotBuilder b(0, 0, 0);
  b.capture_forward(1, ones(2), ones(2));
  CHECK_THROWS_AS(b.capture_forward(1, ones(2), ones(2)), ProtocolError);
}

TEST_CASE("forward-order backward capture is a protocol error") {
  SnapshotBuilder b(0, 0, 0);
  b.capture_forward(1, ones(2), ones(2));
  b.capture_forward(2, ones(2), ones(2));
  b.set_metrics(0.1, std::nullopt);
  b.capture_backward(1, ones(2), Tensor(), Tensor());
  CHECK_THROWS_AS(b.capture_backward(2, ones(2), Tensor(), Tensor()),
                  ProtocolError);
}

TEST_CASE("snapshot without captures cannot be built") {
  SnapshotBuilder b(0, 0, 0);
  CHECK_THROWS_AS(b.build(), ContractError);
}

TEST_CASE("NaN tensors are stored verbatim") {
  SnapshotBuilder b(0, 0, 0);
  Tensor v({2}, {std::nan(""), 1.0});
  b.capture_forward(1, v, ones(2));
  b.set_metrics(0.0, std::nullopt);
  BatchSnapshot s = b.build();
  CHECK(std::isnan(s.forward[0].pre_activation[0]));
  CHECK(s.forward[0].pre_activation[1] == 1.0);
}

TEST_CASE("snapshots are deep copies") {
  Tensor v = ones(3);
  SnapshotBuilder b(0, 0, 0);
  b.capture_forward(1, v, v);
  b.set_metrics(0.0, std::nullopt);
  v[0] = 123.0;  // the builder holds its own copy
  BatchSnapshot s = b.build();
  CHECK(s.forward[0].pre_activation[0] == 1.0);
}

TEST_CASE("parameterless layers record V3 with empty weight products") {
  SnapshotBuilder b(0, 0, 0);
  b.capture_forward(1, ones(2), ones(2));
  b.set_metrics(0.0, std::nullopt);
  b.capture_backward(1, ones(2), Tensor(), Tensor());
  BatchSnapshot s = b.build();
  CHECK_FALSE(s.backward[0].propagated_gradient.empty());
  CHECK(s.backward[0].updated_params_flat.empty());
  CHECK(s.backward[0].delta_params_flat.empty());
}

TEST_CASE("snapshot construction is total over random small models") {
  Rng structure_rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    // random stack: dense [-> dropout] [-> dense]
    std::size_t in_dim = 1 + structure_rng.next_u64() % 4;
    std::size_t hidden = 1 + structure_rng.next_u64() % 4;
    bool with_dropout = structure_rng.uniform() < 0.5;
    bool with_second = structure_rng.uniform() < 0.7;
    bool with_act = structure_rng.uniform() < 0.7;

    Model model;
    model.rng = Rng(trial);
    int idx = 1;
    {
      UserLayer ul;
      ul.user_index = idx++;
      Tensor k({in_dim, hidden});
      for (auto& v : k.data()) v = model.rng.normal();
      ul.core = std::make_unique<DenseLayer>(k, Tensor({hidden}));
      if (with_act) ul.activation = std::make_unique<ActivationLayer>(ActivationFn::tanh_fn);
      model.layers.push_back(std::move(ul));
    }
    if (with_dropout) {
      UserLayer ul;
      ul.user_index = idx++;
      ul.core = std::make_unique<DropoutLayer>(0.25);
      model.layers.push_back(std::move(ul));
    }
    if (with_second) {
      UserLayer ul;
      ul.user_index = idx++;
      Tensor k({hidden, 1});
      for (auto& v : k.data()) v = model.rng.normal();
      ul.core = std::make_unique<DenseLayer>(k, Tensor({1}));
      model.layers.push_back(std::move(ul));
    }
    model.loss = LossKind::mse;
    model.optimizer.lr = 0.01;
    model.task = TaskKind::none;

    std::size_t out_dim = with_second ? 1 : hidden;
    std::size_t n = 5;
    Tensor x({n, in_dim});
    Tensor y({n, out_dim});
    for (auto& v : x.data()) v = model.rng.normal();
    for (auto& v : y.data()) v = model.rng.normal();

    Recorder rec;
    TrainConfig tc;
    tc.batch_size = 2;
    tc.epochs = 2;
    fit(model, x, y, tc, {&rec});

    REQUIRE(rec.seen.size() == 6);  // 3 batches x 2 epochs
    std::uint64_t expect_iter = 0;
    for (const BatchSnapshot& s : rec.seen) {
      CHECK(s.global_iteration == expect_iter++);  // no gaps, increasing
      REQUIRE_FALSE(s.forward.empty());
      for (std::size_t i = 1; i < s.forward.size(); ++i) {
        CHECK(s.forward[i].user_index > s.forward[i - 1].user_index);
      }
      REQUIRE(s.backward.size() == s.forward.size());
      for (std::size_t i = 1; i < s.backward.size(); ++i) {
        CHECK(s.backward[i].user_index < s.backward[i - 1].user_index);
      }
      for (const auto& fr : s.forward) {
        CHECK_FALSE(fr.pre_activation.empty());
        CHECK_FALSE(fr.post_activation.empty());
      }
    }
  }
}

}  // TEST_SUITE
