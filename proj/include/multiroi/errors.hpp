#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace multiroi {

enum class ErrorCode {
  // roi_extraction
  MissingLandmark,
  DuplicateLandmark,
  OutOfRangeCoordinate,
  MalformedLine,
  DegenerateGeometry,
  EmptyImage,
  NonPositiveOutSize,
  // network
  SpatialTooSmall,
  NonFiniteActivation,
  MissingRoi,
  ShapeMismatch,
  UnknownEncoder,
  // training_engine
  EmptyManifest,
  DataLoadError,
  CheckpointMismatch,
  InvalidConfig,
  // metrics_eval
  ConstantSequence,
  LengthMismatch,
  InvalidTable,
  SingleClass,
  JoinFailure,
  // ensemble
  ScanSetMismatch,
  EmptyEnsemble,
  // cli_config_io
  MalformedManifest,
  IoError,
  UsageError,
};

std::string_view to_string(ErrorCode code);

/// Every module reports failures through this type. `module` and `operation`
/// name where it happened; `detail` carries the offending value or name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, std::string operation, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Copy of this error with extra context prepended to the detail.
  Error with_context(std::string_view context) const;

 private:
  ErrorCode code_;
  std::string module_;
  std::string operation_;
  std::string detail_;
};

}  // namespace multiroi
