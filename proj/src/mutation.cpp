#include "nnscope/mutation.hpp"

#include <algorithm>
#include <sstream>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

using nlohmann::json;

[[noreturn]] void inapplicable(const std::string& why) {
  throw ContractError("mutation not applicable: " + why);
}

bool is_parameterized_type(const json& layer) {
  std::string t = layer.value("type", "");
  return t == "dense" || t == "conv2d";
}

int last_parameterized(const json& layers) {
  int idx = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (is_parameterized_type(layers[i])) idx = static_cast<int>(i) + 1;
  }
  return idx;
}

}  // namespace

MutationResult mutate(const ModelSpec& spec, const Mutation& mutation) {
  json doc = spec.document();
  GroundTruth truth;
  truth.expected_detectable = true;

  switch (mutation.op) {
    case MutationOp::wrong_loss: {
      std::string current = doc.at("compile").at("loss").get<std::string>();
      if (mutation.to.empty()) inapplicable("wrong_loss needs a target loss");
      loss_from_name(mutation.to);  // validates the name
      if (mutation.to == current) {
        inapplicable("loss is already '" + current + "'");
      }
      doc["compile"]["loss"] = mutation.to;
      truth.expected_phases = {Phase::backward, Phase::metric};
      break;
    }
    case MutationOp::drop_activation: {
      json& layers = doc.at("layers");
      if (mutation.layer < 1 ||
          mutation.layer > static_cast<int>(layers.size())) {
        inapplicable("layer " + std::to_string(mutation.layer) +
                     " out of range (model has " +
                     std::to_string(layers.size()) + " layers)");
      }
      json& layer = layers[mutation.layer - 1];
      if (!layer.contains("activation")) {
        inapplicable("layer " + std::to_string(mutation.layer) +
                     " has no activation to drop");
      }
      layer.erase("activation");
      truth.expected_phases = {Phase::forward, Phase::metric};
      truth.expected_layer = mutation.layer;
      break;
    }
    case MutationOp::wrong_final_activation: {
      if (mutation.to.empty()) {
        inapplicable("wrong_final_activation needs a target activation");
      }
      activation_from_name(mutation.to);  // validates the name
      json& layers = doc.at("layers");
      int target = last_parameterized(layers);
      if (target == 0) inapplicable("model has no parameterized layer");
      json& layer = layers[target - 1];
      if (layer.value("activation", "") == mutation.to) {
        inapplicable("final activation is already '" + mutation.to + "'");
      }
      layer["activation"] = mutation.to;
      truth.expected_phases = {Phase::forward, Phase::metric};
      truth.expected_layer = target;
      break;
    }
    case MutationOp::scale_lr: {
      if (!(mutation.factor > 0.0) || mutation.factor == 1.0) {
        inapplicable("scale_lr needs a positive factor != 1");
      }
      double lr = doc.at("compile").at("optimizer").at("lr").get<double>();
      if (lr == 0.0) inapplicable("lr is zero; scaling has no effect");
      doc["compile"]["optimizer"]["lr"] = lr * mutation.factor;
      truth.expected_phases = {Phase::backward, Phase::metric};
      break;
    }
    case MutationOp::zero_lr: {
      double lr = doc.at("compile").at("optimizer").at("lr").get<double>();
      if (lr == 0.0) inapplicable("lr is already zero");
      doc["compile"]["optimizer"]["lr"] = 0.0;
      truth.expected_phases = {Phase::backward};
      truth.expected_layer = last_parameterized(doc.at("layers"));
      truth.expected_code = VerdictCode::EBW;
      break;
    }
    case MutationOp::denormalize_input: {
      if (!(mutation.factor > 0.0) || mutation.factor == 1.0) {
        inapplicable("denormalize_input needs a positive factor != 1");
      }
      // Spec stays as-is; the bench runner scales the dataset features.
      truth.expected_phases = {Phase::forward, Phase::metric};
      break;
    }
  }

  return {ModelSpec::from_document(std::move(doc)), std::move(truth)};
}

Mutation parse_mutation(const std::string& text) {
  std::string op_name = text;
  std::string arg;
  if (auto eq = text.find('='); eq != std::string::npos) {
    op_name = text.substr(0, eq);
    arg = text.substr(eq + 1);
  }
  Mutation m;
  auto numeric_arg = [&](double fallback) {
    if (arg.empty()) return fallback;
    try {
      return std::stod(arg);
    } catch (const std::exception&) {
      throw ContractError("mutation '" + op_name + "' needs a numeric argument, got '" + arg + "'");
    }
  };
  if (op_name == "wrong_loss") {
    m.op = MutationOp::wrong_loss;
    m.to = arg;
  } else if (op_name == "drop_activation") {
    m.op = MutationOp::drop_activation;
    m.layer = static_cast<int>(numeric_arg(0));
  } else if (op_name == "wrong_final_activation") {
    m.op = MutationOp::wrong_final_activation;
    m.to = arg;
  } else if (op_name == "scale_lr") {
    m.op = MutationOp::scale_lr;
    m.factor = numeric_arg(1.0);
  } else if (op_name == "zero_lr") {
    m.op = MutationOp::zero_lr;
  } else if (op_name == "denormalize_input") {
    m.op = MutationOp::denormalize_input;
    m.factor = numeric_arg(255.0);
  } else {
    throw ContractError(
        "unknown mutation '" + op_name +
        "' (available: wrong_loss, drop_activation, wrong_final_activation, "
        "scale_lr, zero_lr, denormalize_input)");
  }
  return m;
}

std::string mutation_op_name(MutationOp op) {
  switch (op) {
    case MutationOp::wrong_loss: return "wrong_loss";
    case MutationOp::drop_activation: return "drop_activation";
    case MutationOp::wrong_final_activation: return "wrong_final_activation";
    case MutationOp::scale_lr: return "scale_lr";
    case MutationOp::zero_lr: return "zero_lr";
    case MutationOp::denormalize_input: return "denormalize_input";
  }
  return "?";
}

std::string mutation_label(const Mutation& mutation) {
  std::ostringstream os;
  os << mutation_op_name(mutation.op);
  switch (mutation.op) {
    case MutationOp::wrong_loss:
    case MutationOp::wrong_final_activation:
      os << "(" << mutation.to << ")";
      break;
    case MutationOp::drop_activation:
      os << "(layer " << mutation.layer << ")";
      break;
    case MutationOp::scale_lr:
    case MutationOp::denormalize_input:
      os << "(x" << mutation.factor << ")";
      break;
    case MutationOp::zero_lr:
      break;
  }
  return os.str();
}

bool phase_matches(const GroundTruth& truth, const Verdict& verdict) {
  return std::find(truth.expected_phases.begin(), truth.expected_phases.end(),
                   verdict.phase) != truth.expected_phases.end();
}

}  // namespace nnscope
