#pragma once

#include <stdexcept>
#include <string>

namespace shadowcomp {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kEmptyMask,
  kDegenerateBox,
  kOutOfFrame,
  kEmptyShadow,
  kCorruptDataset,
  kShapeMismatch,
  kEmptyForeground,
  kEmptyRegion,
  kDegenerateMask,
  kDatasetEmpty,
  kNonFiniteLoss,
  kSchemaMismatch,
  kConfig,
  kNotImplemented,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error: 2 config, 3 data, 4 numeric.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace shadowcomp
