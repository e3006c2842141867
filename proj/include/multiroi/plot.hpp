#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "multiroi/image.hpp"
#include "multiroi/metrics.hpp"

namespace multiroi {

/// Ground truth on x, prediction on y, identity line in gray. Both axes share one
/// range fitted to the data with a small margin.
RgbImage render_scatter(std::span<const ScatterPoint> points, int vertebra, int size = 480);

/// scatter_L1.png .. scatter_L4.png under out_dir; returns the written paths.
std::vector<std::filesystem::path> write_scatter_plots(std::span<const ScatterPoint> points,
                                                       const std::filesystem::path& out_dir, int size = 480);

}  // namespace multiroi
