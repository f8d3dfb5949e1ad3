#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsekit {

// Every error carries a short machine-readable kind ("config_error", ...)
// which the CLI prints alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SPARSEKIT_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message) : Error(tag, message) {}     \
  };

/// Trees or tensors whose paths/shapes do not line up.
SPARSEKIT_DEFINE_ERROR(StructuralError, "structural_error")
/// Out-of-range or malformed function arguments.
SPARSEKIT_DEFINE_ERROR(ArgumentError, "argument_error")
/// Invalid or inconsistent experiment / updater configuration.
SPARSEKIT_DEFINE_ERROR(ConfigError, "config_error")
/// Tensor shape incompatible with the requested sparsity structure.
SPARSEKIT_DEFINE_ERROR(StructureError, "structure_error")
/// Malformed data, e.g. a mask holding values other than 0 and 1.
SPARSEKIT_DEFINE_ERROR(DataError, "data_error")
/// Unreadable, truncated or version-mismatched checkpoints.
SPARSEKIT_DEFINE_ERROR(CheckpointError, "checkpoint_error")
/// Operation not available for the chosen algorithm.
SPARSEKIT_DEFINE_ERROR(UnsupportedError, "unsupported_error")
/// Model input with the wrong dimensions.
SPARSEKIT_DEFINE_ERROR(ShapeError, "shape_error")
/// Training diverged (non-finite loss).
SPARSEKIT_DEFINE_ERROR(NumericError, "numeric_error")

#undef SPARSEKIT_DEFINE_ERROR

}  // namespace sparsekit
