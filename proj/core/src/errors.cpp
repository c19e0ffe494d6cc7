#include "shadowcomp/errors.hpp"

namespace shadowcomp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kEmptyMask: return "EmptyMask";
    case ErrorKind::kDegenerateBox: return "DegenerateBox";
    case ErrorKind::kOutOfFrame: return "OutOfFrame";
    case ErrorKind::kEmptyShadow: return "EmptyShadow";
    case ErrorKind::kCorruptDataset: return "CorruptDataset";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyForeground: return "EmptyForeground";
    case ErrorKind::kEmptyRegion: return "EmptyRegion";
    case ErrorKind::kDegenerateMask: return "DegenerateMask";
    case ErrorKind::kDatasetEmpty: return "DatasetEmpty";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kSchemaMismatch: return "SchemaMismatch";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kNotImplemented: return "NotImplemented";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kNotImplemented:
      return 2;
    case ErrorKind::kCorruptDataset:
    case ErrorKind::kDatasetEmpty:
    case ErrorKind::kSchemaMismatch:
    case ErrorKind::kEmptyMask:
    case ErrorKind::kEmptyShadow:
    case ErrorKind::kEmptyRegion:
    case ErrorKind::kDegenerateMask:
    case ErrorKind::kOutOfFrame:
    case ErrorKind::kShapeMismatch:
      return 3;
    case ErrorKind::kDegenerateBox:
    case ErrorKind::kEmptyForeground:
    case ErrorKind::kNonFiniteLoss:
      return 4;
  }
  return 1;
}

}  // namespace shadowcomp
