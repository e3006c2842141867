#include "multiroi/errors.hpp"

namespace multiroi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingLandmark: return "MissingLandmark";
    case ErrorCode::DuplicateLandmark: return "DuplicateLandmark";
    case ErrorCode::OutOfRangeCoordinate: return "OutOfRangeCoordinate";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::NonPositiveOutSize: return "NonPositiveOutSize";
    case ErrorCode::SpatialTooSmall: return "SpatialTooSmall";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::MissingRoi: return "MissingRoi";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownEncoder: return "UnknownEncoder";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DataLoadError: return "DataLoadError";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConstantSequence: return "ConstantSequence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidTable: return "InvalidTable";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::JoinFailure: return "JoinFailure";
    case ErrorCode::ScanSetMismatch: return "ScanSetMismatch";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& module, const std::string& op,
                    const std::string& detail) {
  std::string msg = std::string(to_string(code)) + " [" + module + "::" + op + "]";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, std::string module, std::string operation, std::string detail)
    : std::runtime_error(compose(code, module, operation, detail)),
      code_(code),
      module_(std::move(module)),
      operation_(std::move(operation)),
      detail_(std::move(detail)) {}

Error Error::with_context(std::string_view context) const {
  return Error(code_, module_, operation_, std::string(context) + ": " + detail_);
}

}  // namespace multiroi
