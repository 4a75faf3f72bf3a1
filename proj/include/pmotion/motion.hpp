#pragma once

#include <vector>

#include "pmotion/rotation.hpp"
#include "pmotion/skeleton.hpp"

namespace pmotion {

// One motion clip in the 263-dim frame representation, float32 storage
// (matches the on-disk payload). Layout per frame:
//   [0]       root yaw velocity (rad/frame; frame 0 carries initial yaw)
//   [1..2]    root planar velocity (m/frame, previous-frame heading space)
//   [3]       root height
//   [4..66]   21 x 3 root-relative joint positions, heading-unrotated
//   [67..192] 21 x 6 local joint rotations (6-value code, parent-relative)
//   [193..258] 22 x 3 joint velocities (m/frame, previous-frame heading space)
//   [259..262] foot contact flags (L ankle, L foot, R ankle, R foot)
struct PoseSequence {
  MatF data;  // N x 263
  int frames() const { return int(data.rows()); }
};

// World-space joint positions, one row per frame, 22 x 3 values joint-major.
struct JointSequence {
  MatD pos;  // N x 66
  int frames() const { return int(pos.rows()); }
  Vector3d joint(int n, int j) const {
    return Vector3d(pos(n, 3 * j), pos(n, 3 * j + 1), pos(n, 3 * j + 2));
  }
  void set_joint(int n, int j, const Vector3d& p) {
    pos(n, 3 * j) = p.x();
    pos(n, 3 * j + 1) = p.y();
    pos(n, 3 * j + 2) = p.z();
  }
};

// Global per-joint rotations, per frame.
using FrameRotations = std::vector<std::array<Matrix3d, kJoints>>;

struct RootTrack {
  VecD yaw;   // N
  MatD pos;   // N x 3
};

// Builds the 263-dim representation from world joints + global rotations.
// Requires: frame 0 root on the ground-plane origin (XZ), root rotations
// pure yaw, at least one frame.
PoseSequence encode_motion(const JointSequence& joints,
                           const FrameRotations& rotations,
                           const Skeleton& skeleton);

// Integrates root yaw/planar velocity from the origin and places the
// root-relative joint positions in world space. Uses only the velocity,
// height and local-position channels.
JointSequence recover_global_joints(const PoseSequence& pose,
                                    const Skeleton& skeleton);

// Root integration alone (exposed for tests and the trajectory modules).
RootTrack recover_root(const PoseSequence& pose);

// Per-frame targets for the trajectory extractor: world positions of
// {root, L/R ankle, L/R foot} (15) then global 6-value orientations of
// {L/R ankle, L/R foot} (24). Positions match recover_global_joints exactly.
MatD extract_trajectory_targets(const PoseSequence& pose,
                                const Skeleton& skeleton);

// Contact flags from height + frame-to-frame displacement thresholds.
// Last frame copies the previous one. Output N x 4, values {0,1}.
MatD detect_foot_contacts(const JointSequence& joints,
                          double height_thresh = 0.05,
                          double velocity_thresh = 0.005);

// Rotates a motion about the vertical axis through the origin.
void rotate_motion(JointSequence& joints, FrameRotations& rotations,
                   double theta);

}  // namespace pmotion
