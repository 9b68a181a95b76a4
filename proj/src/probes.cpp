#include "nnscope/probes.hpp"

#include "nnscope/errors.hpp"

namespace nnscope {

std::string location_name(Location loc) {
  switch (loc) {
    case Location::FW: return "FW";
    case Location::AF: return "AF";
    case Location::BW: return "BW";
    case Location::WT: return "WT";
  }
  return "?";
}

SnapshotBuilder::SnapshotBuilder(std::size_t epoch, std::size_t batch,
                                 std::uint64_t global_iteration) {
  snapshot_.epoch = epoch;
  snapshot_.batch = batch;
  snapshot_.global_iteration = global_iteration;
}

void SnapshotBuilder::capture_forward(int user_index, Tensor v1, Tensor v2) {
  if (built_) throw ProtocolError("capture after snapshot build");
  if (!snapshot_.forward.empty()) {
    int last = snapshot_.forward.back().user_index;
    if (user_index == last) {
      throw ProtocolError("forward record for layer " +
                          std::to_string(user_index) + " captured twice");
    }
    if (user_index < last) {
      throw ProtocolError("forward records out of order: layer " +
                          std::to_string(user_index) + " after layer " +
                          std::to_string(last));
    }
  }
  snapshot_.forward.push_back({user_index, std::move(v1), std::move(v2)});
}

void SnapshotBuilder::set_metrics(double loss, std::optional<double> accuracy) {
  if (built_) throw ProtocolError("capture after snapshot build");
  snapshot_.loss = loss;
  snapshot_.accuracy = accuracy;
  metrics_set_ = true;
}

void SnapshotBuilder::capture_backward(int user_index, Tensor v3, Tensor w_flat,
                                       Tensor dw_flat) {
  if (built_) throw ProtocolError("capture after snapshot build");
  if (!snapshot_.backward.empty()) {
    int last = snapshot_.backward.back().user_index;
    if (user_index == last) {
      throw ProtocolError("backward record for layer " +
                          std::to_string(user_index) + " captured twice");
    }
    if (user_index > last) {
      throw ProtocolError("backward records out of order: layer " +
                          std::to_string(user_index) + " after layer " +
                          std::to_string(last));
    }
  }
  snapshot_.backward.push_back(
      {user_index, std::move(v3), std::move(w_flat), std::move(dw_flat)});
}

BatchSnapshot SnapshotBuilder::build() {
  if (built_) throw ProtocolError("snapshot built twice");
  if (snapshot_.forward.empty()) {
    throw ContractError("snapshot build without any forward captures");
  }
  if (!metrics_set_) {
    throw ContractError("snapshot build without metrics");
  }
  built_ = true;
  return std::move(snapshot_);
}

}  // namespace nnscope
