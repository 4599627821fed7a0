#pragma once

#include <string>
#include <vector>

#include "ips/compass.hpp"
#include "ips/kinematics.hpp"

namespace ips::plot {

// Top-down plot of the reconstructed path (solid) and, when given, the
// ground-truth path (dashed), with meter gridlines and a legend. Polylines
// longer than 5000 points are decimated. Throws ParamError on an empty path.
std::string render_path_svg(const std::vector<kinematics::PathPoint>& path,
                            const std::vector<kinematics::PathPoint>* truth = nullptr);

// Heading traces (camera, gyro, fused) against time plus a dial showing the
// final fused heading reduced to [0, 360). Throws ParamError on empty input.
std::string render_compass_svg(const std::vector<compass::HeadingSample>& samples);

}  // namespace ips::plot
