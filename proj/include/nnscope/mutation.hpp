#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nnscope/detector.hpp"
#include "nnscope/model_spec.hpp"

namespace nnscope {

enum class MutationOp {
  wrong_loss,
  drop_activation,
  wrong_final_activation,
  scale_lr,
  zero_lr,
  denormalize_input,
};

struct Mutation {
  MutationOp op = MutationOp::zero_lr;
  std::string to;        // wrong_loss / wrong_final_activation target
  int layer = 0;         // drop_activation target (1-based)
  double factor = 1.0;   // scale_lr / denormalize_input
};

// What the seeded bug is expected to look like to a monitor. Cases without
// an expected layer score fault localization on phase alone.
struct GroundTruth {
  bool expected_detectable = true;
  std::vector<Phase> expected_phases;
  std::optional<int> expected_layer;
  std::optional<VerdictCode> expected_code;
};

struct MutationResult {
  ModelSpec spec;
  GroundTruth truth;
};

// Pure: returns a new validated spec, the input is untouched. Throws
// ContractError when the mutation is inapplicable, naming why.
// denormalize_input leaves the spec unchanged; it acts on the dataset when
// a benchmark case is assembled.
MutationResult mutate(const ModelSpec& spec, const Mutation& mutation);

// "wrong_loss=mse", "drop_activation=1", "zero_lr", "scale_lr=1000", ...
Mutation parse_mutation(const std::string& text);

std::string mutation_op_name(MutationOp op);
std::string mutation_label(const Mutation& mutation);

bool phase_matches(const GroundTruth& truth, const Verdict& verdict);

}  // namespace nnscope
