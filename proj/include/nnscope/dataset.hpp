#pragma once

#include <string>
#include <vector>

#include "nnscope/tensor.hpp"

namespace nnscope {

enum class NormalizeMethod { none, minmax, standardize };

struct FeatureStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct NormalizationRecord {
  NormalizeMethod method = NormalizeMethod::none;
  std::vector<FeatureStats> stats;  // one entry per feature
};

struct Dataset {
  Tensor x;
  Tensor y;
  std::vector<std::string> feature_names;
  NormalizationRecord normalization;
};

struct DatasetOptions {
  std::vector<std::size_t> label_cols;  // 0-based; empty = last column (CSV)
  bool one_hot = false;
  NormalizeMethod normalize = NormalizeMethod::none;
};

// source is either "builtin:<name>" with name in {xor, blobs, blobs255,
// linreg} or a CSV path (header row required).
Dataset load_dataset(const std::string& source, const DatasetOptions& options = {});

Dataset builtin_dataset(const std::string& name);

// Rescales features to [-1, 1] per feature and records the stats. A
// dataset can be normalized at most once.
void normalize_minmax(Dataset& dataset);
void normalize_standardize(Dataset& dataset);

// Expands an integer label column into one-hot rows.
void one_hot_labels(Dataset& dataset);

// Features multiplied by a constant; used to seed unnormalized-input bugs.
Dataset scale_features(const Dataset& dataset, double factor);

}  // namespace nnscope
