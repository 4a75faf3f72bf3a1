#pragma once

#include <optional>
#include <vector>

#include "pmotion/motion.hpp"

namespace pmotion {

// Pixel -> world mapping: world = (px.x * scale.x + offset.x,
//                                  0,
//                                  px.y * scale.y + offset.y)
// where px.x is the column index (world X) and px.y the row index (world Z).
struct Calibration {
  Vector2d scale{0.02, 0.02};   // meters per pixel
  Vector2d offset{0.0, 0.0};    // meters
};

// Pressure clip: one H x W float map per frame. Row index = Z, col = X.
struct PressureSequence {
  std::vector<MatF> maps;
  int height = 0, width = 0;
  int frames() const { return int(maps.size()); }
};

// Intensity-weighted centroid in fractional pixels (x=col, z=row).
// All-zero (or non-positive) maps carry no contact: nullopt.
std::optional<Vector2d> pixel_cop(const MatF& map);

Vector3d cop_to_world(const Vector2d& px, const Calibration& calib);

// pixel_cop mapped through the calibration; nullopt on no contact.
std::optional<Vector3d> world_cop(const MatF& map, const Calibration& calib);

// Height-softmax weighted ground projection of the four contact joints.
Vector3d motion_cop(const JointSequence& joints, int frame,
                    double softmax_temp = 0.05);

// Per-frame backward difference; frame 0 is all zeros.
std::vector<MatF> temporal_diff(const PressureSequence& seq);

// Fixed sinusoidal grid encoding, (d_e, H*W); first half encodes the
// column (X) axis, second half the row (Z) axis. Values in [-1, 1].
// d_e must be even and >= 2.
MatF grid_encoding(int height, int width, int d_e);

}  // namespace pmotion
