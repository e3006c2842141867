#pragma once

#include <span>

#include "multiroi/predictions.hpp"

namespace multiroi {

enum class EnsembleScheme {
  RoiOnly,  // the five single-ROI baselines
  All,      // the five baselines plus the multi-ROI model
};

inline constexpr int ensemble_size(EnsembleScheme scheme) { return scheme == EnsembleScheme::RoiOnly ? 5 : 6; }

/// Unweighted per-cell mean of the member tables, in the first member's row order.
/// Throws EmptyEnsemble / ScanSetMismatch.
PredictionTable ensemble_mean(std::span<const PredictionTable> members);

/// ensemble_mean after checking the member count against the scheme (InvalidConfig otherwise).
PredictionTable ensemble(EnsembleScheme scheme, std::span<const PredictionTable> members);

}  // namespace multiroi
