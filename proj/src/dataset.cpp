#include "nnscope/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

// Fixed seeds keep the builtin fixtures identical across runs and machines.
constexpr std::uint64_t kBlobsSeed = 0xb10b5ull;
constexpr std::uint64_t kLinregSeed = 0x11e6ull;

Dataset make_xor() {
  Dataset d;
  d.x = Tensor::matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  d.y = Tensor::matrix({{0}, {1}, {1}, {0}});
  d.feature_names = {"x1", "x2"};
  return d;
}

// Two gaussian clusters (sigma 0.5) around (-1,-1) and (1,1), classes
// interleaved so every contiguous batch sees both.
Dataset make_blobs() {
  constexpr std::size_t n = 200;
  Rng rng(kBlobsSeed);
  Dataset d;
  std::vector<double> xs, ys;
  xs.reserve(n * 2);
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double cls = static_cast<double>(i % 2);
    double center = cls == 0.0 ? -1.0 : 1.0;
    xs.push_back(center + rng.normal(0.0, 0.5));
    xs.push_back(center + rng.normal(0.0, 0.5));
    ys.push_back(cls);
  }
  d.x = Tensor({n, 2}, std::move(xs));
  d.y = Tensor({n, 1}, std::move(ys));
  d.feature_names = {"x1", "x2"};
  return d;
}

Dataset make_linreg() {
  constexpr std::size_t n = 200;
  Rng rng(kLinregSeed);
  Dataset d;
  std::vector<double> xs, ys;
  xs.reserve(n);
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 2.0 * rng.uniform() - 1.0;
    xs.push_back(x);
    ys.push_back(3.0 * x + rng.normal(0.0, 0.1));
  }
  d.x = Tensor({n, 1}, std::move(xs));
  d.y = Tensor({n, 1}, std::move(ys));
  d.feature_names = {"x"};
  return d;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Dataset load_csv(const std::string& path, const DatasetOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  if (header.empty()) throw IoError("'" + path + "' has an empty header row");
  const std::size_t ncols = header.size();

  std::vector<std::size_t> label_cols = options.label_cols;
  if (label_cols.empty()) label_cols = {ncols - 1};
  for (std::size_t c : label_cols) {
    if (c >= ncols) {
      throw IoError("label column " + std::to_string(c) +
                    " out of range (file has " + std::to_string(ncols) +
                    " columns)");
    }
  }
  std::vector<bool> is_label(ncols, false);
  for (std::size_t c : label_cols) is_label[c] = true;

  std::vector<double> xdata, ydata;
  std::size_t rows = 0;
  std::size_t file_row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++file_row;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != ncols) {
      throw IoError("row " + std::to_string(file_row) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(ncols),
                    file_row);
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      std::string cell = trim(cells[c]);
      std::size_t pos = 0;
      double v = 0.0;
      bool ok = !cell.empty();
      if (ok) {
        try {
          v = std::stod(cell, &pos);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || pos != cell.size()) {
        throw IoError("non-numeric cell '" + cell + "' at row " +
                          std::to_string(file_row) + " col " +
                          std::to_string(c + 1),
                      file_row, c + 1);
      }
      (is_label[c] ? ydata : xdata).push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw IoError("'" + path + "' has no data rows");

  Dataset d;
  std::size_t nfeat = ncols - label_cols.size();
  if (nfeat == 0) throw IoError("all columns are label columns");
  d.x = Tensor({rows, nfeat}, std::move(xdata));
  d.y = Tensor({rows, label_cols.size()}, std::move(ydata));
  for (std::size_t c = 0; c < ncols; ++c) {
    if (!is_label[c]) d.feature_names.push_back(trim(header[c]));
  }
  return d;
}

}  // namespace

Dataset builtin_dataset(const std::string& name) {
  if (name == "xor") return make_xor();
  if (name == "blobs") return make_blobs();
  if (name == "blobs255") return scale_features(make_blobs(), 255.0);
  if (name == "linreg") return make_linreg();
  throw ContractError("unknown builtin dataset '" + name +
                      "' (available: xor, blobs, blobs255, linreg)");
}

Dataset load_dataset(const std::string& source, const DatasetOptions& options) {
  Dataset d;
  if (source.rfind("builtin:", 0) == 0) {
    d = builtin_dataset(source.substr(8));
  } else {
    d = load_csv(source, options);
  }
  if (options.one_hot) one_hot_labels(d);
  switch (options.normalize) {
    case NormalizeMethod::none: break;
    case NormalizeMethod::minmax: normalize_minmax(d); break;
    case NormalizeMethod::standardize: normalize_standardize(d); break;
  }
  return d;
}

namespace {

void require_not_normalized(const Dataset& d) {
  if (d.normalization.method != NormalizeMethod::none) {
    throw ContractError("dataset is already normalized");
  }
}

}  // namespace

void normalize_minmax(Dataset& dataset) {
  require_not_normalized(dataset);
  std::size_t rows = dataset.x.dim(0), cols = dataset.x.dim(1);
  dataset.normalization.method = NormalizeMethod::minmax;
  dataset.normalization.stats.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double lo = dataset.x.at2(0, c), hi = lo;
    for (std::size_t r = 1; r < rows; ++r) {
      lo = std::min(lo, dataset.x.at2(r, c));
      hi = std::max(hi, dataset.x.at2(r, c));
    }
    dataset.normalization.stats[c].min = lo;
    dataset.normalization.stats[c].max = hi;
    double span = hi - lo;
    for (std::size_t r = 0; r < rows; ++r) {
      double v = dataset.x.at2(r, c);
      dataset.x.at2(r, c) = span == 0.0 ? 0.0 : 2.0 * (v - lo) / span - 1.0;
    }
  }
}

void normalize_standardize(Dataset& dataset) {
  require_not_normalized(dataset);
  std::size_t rows = dataset.x.dim(0), cols = dataset.x.dim(1);
  dataset.normalization.method = NormalizeMethod::standardize;
  dataset.normalization.stats.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += dataset.x.at2(r, c);
    double mean = sum / static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double d = dataset.x.at2(r, c) - mean;
      var += d * d;
    }
    double sd = std::sqrt(var / static_cast<double>(rows));
    dataset.normalization.stats[c].mean = mean;
    dataset.normalization.stats[c].stddev = sd;
    for (std::size_t r = 0; r < rows; ++r) {
      double v = dataset.x.at2(r, c);
      dataset.x.at2(r, c) = sd == 0.0 ? 0.0 : (v - mean) / sd;
    }
  }
}

void one_hot_labels(Dataset& dataset) {
  if (dataset.y.rank() != 2 || dataset.y.dim(1) != 1) {
    throw ContractError("one-hot encoding needs a single label column, got " +
                        dataset.y.shape_str());
  }
  std::size_t rows = dataset.y.dim(0);
  double max_label = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double v = dataset.y.at2(r, 0);
    if (v < 0.0 || v != std::floor(v)) {
      throw ContractError("one-hot labels must be non-negative integers, got " +
                          std::to_string(v));
    }
    max_label = std::max(max_label, v);
  }
  std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  if (classes < 2) classes = 2;
  Tensor onehot({rows, classes});
  for (std::size_t r = 0; r < rows; ++r) {
    onehot.at2(r, static_cast<std::size_t>(dataset.y.at2(r, 0))) = 1.0;
  }
  dataset.y = std::move(onehot);
}

Dataset scale_features(const Dataset& dataset, double factor) {
  Dataset out = dataset;
  out.x = scale(dataset.x, factor);
  return out;
}

}  // namespace nnscope
