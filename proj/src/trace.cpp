#include "nnscope/trace.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

using nlohmann::json;

// JSON has no NaN/Inf literals; keep them inspectable as strings.
json json_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

json summary(const Tensor& t) {
  json j;
  j["mean"] = json_number(mean(t));
  j["std"] = json_number(stddev(t));
  return j;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path) : out_(path) {
  if (!out_) throw IoError("cannot open trace output '" + path + "'");
}

std::optional<Verdict> TraceWriter::on_batch_end(const BatchSnapshot& snapshot) {
  json j;
  j["iteration"] = snapshot.global_iteration;
  j["epoch"] = snapshot.epoch;
  j["batch"] = snapshot.batch;
  j["loss"] = json_number(snapshot.loss);
  j["accuracy"] = snapshot.accuracy ? json_number(*snapshot.accuracy) : json();
  json fw = json::array();
  for (const ForwardRecord& rec : snapshot.forward) {
    json r;
    r["layer"] = rec.user_index;
    r["v1"] = summary(rec.pre_activation);
    r["v2"] = summary(rec.post_activation);
    fw.push_back(std::move(r));
  }
  j["forward"] = std::move(fw);
  json bw = json::array();
  for (const BackwardRecord& rec : snapshot.backward) {
    json r;
    r["layer"] = rec.user_index;
    r["v3"] = summary(rec.propagated_gradient);
    if (!rec.updated_params_flat.empty()) {
      r["w"] = summary(rec.updated_params_flat);
      r["dw"] = summary(rec.delta_params_flat);
    }
    bw.push_back(std::move(r));
  }
  j["backward"] = std::move(bw);
  out_ << j.dump() << "\n";
  return std::nullopt;
}

}  // namespace nnscope
