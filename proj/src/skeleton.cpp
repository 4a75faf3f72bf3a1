#include "pmotion/skeleton.hpp"

namespace pmotion {

Skeleton make_skeleton(double s) {
  Skeleton sk;
  sk.parents = {-1, 0, 0, 0, 1, 2, 3, 4,  5,  6, 7,
                8,  9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  sk.names = {"pelvis",     "l_hip",      "r_hip",      "spine1",
              "l_knee",     "r_knee",     "spine2",     "l_ankle",
              "r_ankle",    "spine3",     "l_foot",     "r_foot",
              "neck",       "l_collar",   "r_collar",   "head",
              "l_shoulder", "r_shoulder", "l_elbow",    "r_elbow",
              "l_wrist",    "r_wrist"};
  auto v = [s](double x, double y, double z) {
    return Vector3d(x * s, y * s, z * s);
  };
  sk.offsets[Pelvis] = v(0, 0, 0);
  sk.offsets[LHip] = v(0.09, -0.05, 0);
  sk.offsets[RHip] = v(-0.09, -0.05, 0);
  sk.offsets[Spine1] = v(0, 0.12, 0);
  sk.offsets[LKnee] = v(0, -0.40, 0);
  sk.offsets[RKnee] = v(0, -0.40, 0);
  sk.offsets[Spine2] = v(0, 0.13, 0);
  sk.offsets[LAnkle] = v(0, -0.41, 0);
  sk.offsets[RAnkle] = v(0, -0.41, 0);
  sk.offsets[Spine3] = v(0, 0.13, 0);
  sk.offsets[LFoot] = v(0, -0.04, 0.14);
  sk.offsets[RFoot] = v(0, -0.04, 0.14);
  sk.offsets[Neck] = v(0, 0.10, 0);
  sk.offsets[LCollar] = v(0.07, 0.06, 0);
  sk.offsets[RCollar] = v(-0.07, 0.06, 0);
  sk.offsets[Head] = v(0, 0.12, 0);
  sk.offsets[LShoulder] = v(0.09, 0.02, 0);
  sk.offsets[RShoulder] = v(-0.09, 0.02, 0);
  sk.offsets[LElbow] = v(0.27, 0, 0);
  sk.offsets[RElbow] = v(-0.27, 0, 0);
  sk.offsets[LWrist] = v(0.25, 0, 0);
  sk.offsets[RWrist] = v(-0.25, 0, 0);
  return sk;
}

}  // namespace pmotion
