#pragma once

#include <array>
#include <string>

#include "pmotion/common.hpp"

namespace pmotion {

// Joint indices (SMPL-style 22-joint body, pelvis root).
enum Joint : int {
  Pelvis = 0,
  LHip = 1,
  RHip = 2,
  Spine1 = 3,
  LKnee = 4,
  RKnee = 5,
  Spine2 = 6,
  LAnkle = 7,
  RAnkle = 8,
  Spine3 = 9,
  LFoot = 10,
  RFoot = 11,
  Neck = 12,
  LCollar = 13,
  RCollar = 14,
  Head = 15,
  LShoulder = 16,
  RShoulder = 17,
  LElbow = 18,
  RElbow = 19,
  LWrist = 20,
  RWrist = 21,
};

// Contact flag order in the pose vector and everywhere else.
inline constexpr std::array<int, 4> kContactJoints = {LAnkle, LFoot, RAnkle,
                                                      RFoot};
// Key joints for trajectory targets / consistency: root then contact joints
// in (L ankle, R ankle, L foot, R foot) order.
inline constexpr std::array<int, 5> kKeyJoints = {Pelvis, LAnkle, RAnkle,
                                                  LFoot, RFoot};
inline constexpr std::array<int, 4> kKeyRotJoints = {LAnkle, RAnkle, LFoot,
                                                     RFoot};
// Lower-body joints for the restricted position error.
inline constexpr std::array<int, 8> kLowerJoints = {LHip,   RHip,  LKnee,
                                                    RKnee,  LAnkle, RAnkle,
                                                    LFoot,  RFoot};

struct Skeleton {
  std::array<int, kJoints> parents;
  std::array<Vector3d, kJoints> offsets;  // bone vector from parent, rest pose
  std::array<std::string, kJoints> names;

  double leg_upper() const { return offsets[LKnee].norm(); }
  double leg_lower() const { return offsets[LAnkle].norm(); }
  // Root height with straight legs and planted feet.
  double rest_root_height() const {
    return -offsets[LHip].y() + leg_upper() + leg_lower() - offsets[LFoot].y();
  }
};

// Canonical desk skeleton; `scale` stretches every offset uniformly.
Skeleton make_skeleton(double scale = 1.0);

}  // namespace pmotion
