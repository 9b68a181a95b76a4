#pragma once

#include <stdexcept>
#include <string>

namespace nnscope {

// Violated precondition on an operation (empty tensor, empty dataset, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible tensor/layer shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Operations invoked out of order (backward before forward, duplicate
// capture, finish after a failure verdict).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid monitor/detector configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Model-spec document rejected. `pointer` is a JSON pointer to the
// offending field.
class SpecError : public std::runtime_error {
 public:
  enum class Kind { schema, shape, unsupported_layer };

  SpecError(Kind kind, std::string pointer, const std::string& what)
      : std::runtime_error(what + " (at " + pointer + ")"),
        kind_(kind),
        pointer_(std::move(pointer)) {}

  Kind kind() const { return kind_; }
  const std::string& pointer() const { return pointer_; }

 private:
  Kind kind_;
  std::string pointer_;
};

// File / CSV ingestion failures. row/col are 1-based; 0 means not applicable.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what, std::size_t row = 0,
                   std::size_t col = 0)
      : std::runtime_error(what), row_(row), col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace nnscope
