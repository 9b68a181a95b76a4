#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nnscope {

enum class VerdictCode { EBA, EAA, ELF, EAF, EBW, EBDW, MDL, CM };

enum class Phase { forward, backward, metric, terminal };

std::string verdict_code_name(VerdictCode code);
std::string phase_name(Phase phase);

struct Verdict {
  VerdictCode code = VerdictCode::CM;
  std::optional<int> layer;  // absent for ELF, EAF, MDL, CM
  Phase phase = Phase::terminal;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::uint64_t global_iteration = 0;
  double elapsed_seconds = 0.0;
  std::string message;
};

// {code, layer, phase, epoch, batch, iteration, elapsed_seconds, message}
std::string verdict_to_json(const Verdict& verdict, int indent = -1);

}  // namespace nnscope
