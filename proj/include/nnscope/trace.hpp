#pragma once

#include <fstream>
#include <string>

#include "nnscope/probes.hpp"

namespace nnscope {

/// Streams one JSON object per snapshot to a file: per-layer mean/std
/// summaries rather than full tensors. Never returns a verdict.
class TraceWriter : public Observer {
 public:
  explicit TraceWriter(const std::string& path);

  std::optional<Verdict> on_batch_end(const BatchSnapshot& snapshot) override;
  std::string name() const override { return "trace"; }

 private:
  std::ofstream out_;
};

}  // namespace nnscope
