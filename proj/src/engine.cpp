#include "nnscope/engine.hpp"

#include <chrono>
#include <numeric>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end) {
  std::size_t row_size = t.size() / t.dim(0);
  std::vector<std::size_t> shape = t.shape();
  shape[0] = end - begin;
  std::vector<double> data;
  data.reserve((end - begin) * row_size);
  for (std::size_t i = begin; i < end; ++i) {
    std::size_t r = order[i];
    data.insert(data.end(), t.data().begin() + r * row_size,
                t.data().begin() + (r + 1) * row_size);
  }
  return Tensor(std::move(shape), std::move(data));
}

// Shape-only dry run; training=false so no rng is consumed and dropout
// stays the identity. Throws before any weight is touched.
void validate_shapes(Model& model, const Tensor& x, const Tensor& y) {
  Tensor cur = x.slice_rows(0, 1);
  for (UserLayer& ul : model.layers) {
    cur = ul.core->forward(cur, false, model.rng);
    if (ul.activation) cur = ul.activation->forward(cur, false, model.rng);
  }
  loss_value(model.loss, cur, y.slice_rows(0, 1));
}

Verdict plain_cm(std::size_t epoch, std::size_t batch, std::uint64_t iteration,
                 double elapsed) {
  Verdict v;
  v.code = VerdictCode::CM;
  v.phase = Phase::terminal;
  v.epoch = epoch;
  v.batch = batch;
  v.global_iteration = iteration;
  v.elapsed_seconds = elapsed > 0.0 ? elapsed : 1e-9;
  v.message = "training completed: correct model";
  return v;
}

}  // namespace

int Model::last_parameterized_index() const {
  int idx = 0;
  for (const UserLayer& ul : layers) {
    if (ul.core->has_params()) idx = ul.user_index;
  }
  return idx;
}

TrainOutcome fit(Model& model, const Tensor& x, const Tensor& y,
                 const TrainConfig& config,
                 const std::vector<Observer*>& observers) {
  if (x.empty() || y.empty()) throw ContractError("fit on empty dataset");
  if (x.dim(0) != y.dim(0)) {
    throw ShapeError("fit: x has " + std::to_string(x.dim(0)) +
                     " rows but y has " + std::to_string(y.dim(0)));
  }
  if (config.batch_size < 1 || config.batch_size > x.dim(0)) {
    throw ContractError("batch_size must be in [1, dataset size]");
  }
  if (config.epochs < 1) throw ContractError("epochs must be >= 1");
  if (model.layers.empty()) throw ContractError("model has no layers");
  if (model.last_parameterized_index() == 0) {
    throw ContractError("model has no parameterized layer");
  }
  validate_shapes(model, x, y);

  auto start = std::chrono::steady_clock::now();
  const std::size_t n = x.dim(0);
  const bool capture = !observers.empty();
  const bool fused = model.fused_softmax_ce;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  TrainOutcome outcome;
  std::uint64_t iteration = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = shuffle_rng.next_u64() % (i + 1);
        std::swap(order[i], order[j]);
      }
    }
    double loss_sum = 0.0;
    double acc_sum = 0.0;
    std::size_t epoch_batches = 0;

    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      std::size_t end = std::min(begin + config.batch_size, n);
      Tensor xb = gather_rows(x, order, begin, end);
      Tensor yb = gather_rows(y, order, begin, end);
      std::size_t batch_index = begin / config.batch_size;

      SnapshotBuilder builder(epoch, batch_index, iteration);

      // Feedforward, capturing pre- and post-activation values per layer.
      Tensor cur = std::move(xb);
      for (UserLayer& ul : model.layers) {
        Tensor v1 = ul.core->forward(cur, true, model.rng);
        Tensor v2 = ul.activation ? ul.activation->forward(v1, true, model.rng)
                                  : v1;
        if (capture) builder.capture_forward(ul.user_index, v1, v2);
        cur = std::move(v2);
      }

      double loss = loss_value(model.loss, cur, yb);
      std::optional<double> acc = accuracy(cur, yb, model.task);
      if (capture) builder.set_metrics(loss, acc);
      loss_sum += loss;
      if (acc) acc_sum += *acc;
      epoch_batches += 1;
      outcome.final_loss = loss;
      outcome.final_accuracy = acc;

      // Backpropagation with the weight update applied inside each layer's
      // backward step, so the WT probe sees post-update weights.
      Tensor dy = fused ? fused_softmax_cce_grad(cur, yb)
                        : loss_grad(model.loss, cur, yb);
      for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
        UserLayer& ul = *it;
        bool skip_activation = fused && &ul == &model.layers.back();
        if (ul.activation && !skip_activation) {
          dy = ul.activation->backward(dy, model.optimizer).dx;
        }
        BackwardResult r = ul.core->backward(dy, model.optimizer);
        if (capture) {
          bool parameterized = ul.core->has_params();
          builder.capture_backward(
              ul.user_index, r.dx,
              parameterized ? concat_flat(r.kernel, r.bias) : Tensor(),
              parameterized ? concat_flat(r.dkernel, r.dbias) : Tensor());
        }
        dy = std::move(r.dx);
      }

      iteration += 1;
      outcome.batches_executed += 1;

      if (capture) {
        BatchSnapshot snapshot = builder.build();
        for (Observer* obs : observers) {
          std::optional<Verdict> verdict = obs->on_batch_end(snapshot);
          if (verdict) {
            EpochSummary summary;
            summary.mean_loss = loss_sum / static_cast<double>(epoch_batches);
            if (model.task != TaskKind::none) {
              summary.mean_accuracy =
                  acc_sum / static_cast<double>(epoch_batches);
            }
            outcome.epochs.push_back(summary);
            outcome.verdict = std::move(*verdict);
            outcome.elapsed_seconds = std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - start)
                                          .count();
            return outcome;
          }
        }
      }
    }

    EpochSummary summary;
    summary.mean_loss = loss_sum / static_cast<double>(epoch_batches);
    if (model.task != TaskKind::none) {
      summary.mean_accuracy = acc_sum / static_cast<double>(epoch_batches);
    }
    outcome.epochs.push_back(summary);
  }

  outcome.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  std::optional<Verdict> final_verdict;
  for (Observer* obs : observers) {
    final_verdict = obs->finish();
    if (final_verdict) break;
  }
  std::size_t last_epoch = config.epochs - 1;
  std::size_t last_batch = (n - 1) / config.batch_size;
  outcome.verdict = final_verdict
                        ? std::move(*final_verdict)
                        : plain_cm(last_epoch, last_batch,
                                   iteration > 0 ? iteration - 1 : 0,
                                   outcome.elapsed_seconds);
  return outcome;
}

Tensor predict(Model& model, const Tensor& x) {
  if (x.empty()) throw ContractError("predict on empty input");
  Tensor cur = x;
  for (UserLayer& ul : model.layers) {
    cur = ul.core->forward(cur, false, model.rng);
    if (ul.activation) cur = ul.activation->forward(cur, false, model.rng);
  }
  return cur;
}

}  // namespace nnscope
