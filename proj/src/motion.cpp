#include "pmotion/motion.hpp"

#include <cmath>

namespace pmotion {

namespace {

// Heading-frame planar rotation applied to a world-space delta.
Vector2d to_heading_frame(double yaw, const Vector3d& d) {
  double c = std::cos(yaw), s = std::sin(yaw);
  // RotY(yaw)^T * d, keeping (x, z).
  return Vector2d(c * d.x() - s * d.z(), s * d.x() + c * d.z());
}

}  // namespace

PoseSequence encode_motion(const JointSequence& joints,
                           const FrameRotations& rotations,
                           const Skeleton& skeleton) {
  const int n = joints.frames();
  require(n >= 1, "encode_motion: empty sequence");
  require(int(rotations.size()) == n, "encode_motion: rotation count mismatch");
  require(joints.pos.allFinite(), "encode_motion: non-finite joints");

  Vector3d root0 = joints.joint(0, Pelvis);
  require(std::abs(root0.x()) < 1e-6 && std::abs(root0.z()) < 1e-6,
          "encode_motion: frame 0 root must sit on the ground-plane origin");

  VecD yaw(n);
  for (int f = 0; f < n; ++f) {
    require(yaw_purity_error(rotations[f][Pelvis]) < 1e-6,
            "encode_motion: root rotation must be pure yaw");
    yaw(f) = yaw_of(rotations[f][Pelvis]);
  }

  MatF out = MatF::Zero(n, kFeatureDim);
  MatD contacts = detect_foot_contacts(joints);

  for (int f = 0; f < n; ++f) {
    Vector3d root = joints.joint(f, Pelvis);
    // Yaw velocity; frame 0 stores the initial heading itself.
    double w = (f == 0) ? yaw(0) : wrap_angle(yaw(f) - yaw(f - 1));
    out(f, kColRootYawVel) = float(w);
    if (f > 0) {
      Vector2d v =
          to_heading_frame(yaw(f - 1), root - joints.joint(f - 1, Pelvis));
      out(f, kColRootVelX) = float(v.x());
      out(f, kColRootVelZ) = float(v.y());
    }
    out(f, kColRootHeight) = float(root.y());

    Matrix3d inv_heading = rot_y(yaw(f)).transpose();
    for (int j = 1; j < kJoints; ++j) {
      Vector3d local = inv_heading * (joints.joint(f, j) - root);
      out(f, kColLocalPos + 3 * (j - 1) + 0) = float(local.x());
      out(f, kColLocalPos + 3 * (j - 1) + 1) = float(local.y());
      out(f, kColLocalPos + 3 * (j - 1) + 2) = float(local.z());
    }
    for (int j = 1; j < kJoints; ++j) {
      int parent = skeleton.parents[j];
      Matrix3d local_rot =
          rotations[f][parent].transpose() * rotations[f][j];
      Vec6 code = rot6d_encode(local_rot);
      for (int k = 0; k < 6; ++k)
        out(f, kColLocalRot + 6 * (j - 1) + k) = float(code(k));
    }
    if (f > 0) {
      for (int j = 0; j < kJoints; ++j) {
        Vector2d v = to_heading_frame(
            yaw(f - 1), joints.joint(f, j) - joints.joint(f - 1, j));
        double vy = joints.joint(f, j).y() - joints.joint(f - 1, j).y();
        out(f, kColJointVel + 3 * j + 0) = float(v.x());
        out(f, kColJointVel + 3 * j + 1) = float(vy);
        out(f, kColJointVel + 3 * j + 2) = float(v.y());
      }
    }
    for (int k = 0; k < kContactDim; ++k)
      out(f, kColContacts + k) = float(contacts(f, k));
  }
  return PoseSequence{std::move(out)};
}

RootTrack recover_root(const PoseSequence& pose) {
  const int n = pose.frames();
  require(n >= 1, "recover_root: empty sequence");
  require(pose.data.cols() == kFeatureDim, "recover_root: bad feature width");
  RootTrack rt;
  rt.yaw.resize(n);
  rt.pos.resize(n, 3);
  double yaw = 0.0;
  Vector3d p(0, 0, 0);
  for (int f = 0; f < n; ++f) {
    double prev_yaw = yaw;
    yaw += double(pose.data(f, kColRootYawVel));
    if (f > 0) {
      double vx = pose.data(f, kColRootVelX);
      double vz = pose.data(f, kColRootVelZ);
      double c = std::cos(prev_yaw), s = std::sin(prev_yaw);
      p.x() += c * vx + s * vz;
      p.z() += -s * vx + c * vz;
    }
    rt.yaw(f) = yaw;
    rt.pos(f, 0) = p.x();
    rt.pos(f, 1) = double(pose.data(f, kColRootHeight));
    rt.pos(f, 2) = p.z();
  }
  return rt;
}

JointSequence recover_global_joints(const PoseSequence& pose,
                                    const Skeleton&) {
  const int n = pose.frames();
  RootTrack rt = recover_root(pose);
  JointSequence js;
  js.pos.resize(n, 3 * kJoints);
  for (int f = 0; f < n; ++f) {
    Vector3d root(rt.pos(f, 0), rt.pos(f, 1), rt.pos(f, 2));
    js.set_joint(f, Pelvis, root);
    Matrix3d heading = rot_y(rt.yaw(f));
    for (int j = 1; j < kJoints; ++j) {
      Vector3d local(double(pose.data(f, kColLocalPos + 3 * (j - 1))),
                     double(pose.data(f, kColLocalPos + 3 * (j - 1) + 1)),
                     double(pose.data(f, kColLocalPos + 3 * (j - 1) + 2)));
      js.set_joint(f, j, root + heading * local);
    }
  }
  return js;
}

MatD extract_trajectory_targets(const PoseSequence& pose,
                                const Skeleton& skeleton) {
  const int n = pose.frames();
  JointSequence js = recover_global_joints(pose, skeleton);
  RootTrack rt = recover_root(pose);
  MatD out(n, kTrajDim);
  for (int f = 0; f < n; ++f) {
    int c = 0;
    for (int key : kKeyJoints) {
      Vector3d p = js.joint(f, key);
      out(f, c++) = p.x();
      out(f, c++) = p.y();
      out(f, c++) = p.z();
    }
    // Global orientations by chaining stored local rotations from the root.
    std::array<Matrix3d, kJoints> global;
    global[Pelvis] = rot_y(rt.yaw(f));
    for (int j = 1; j < kJoints; ++j) {
      Vec6 code;
      for (int k = 0; k < 6; ++k)
        code(k) = double(pose.data(f, kColLocalRot + 6 * (j - 1) + k));
      global[j] = global[skeleton.parents[j]] * rot6d_decode(code);
    }
    for (int key : kKeyRotJoints) {
      Vec6 code = rot6d_encode(global[key]);
      for (int k = 0; k < 6; ++k) out(f, c++) = code(k);
    }
  }
  return out;
}

MatD detect_foot_contacts(const JointSequence& joints, double height_thresh,
                          double velocity_thresh) {
  const int n = joints.frames();
  require(n >= 1, "detect_foot_contacts: empty sequence");
  MatD flags = MatD::Zero(n, kContactDim);
  for (int f = 0; f < n; ++f) {
    if (f == n - 1 && n > 1) {
      flags.row(f) = flags.row(f - 1);
      break;
    }
    for (int k = 0; k < kContactDim; ++k) {
      int j = kContactJoints[size_t(k)];
      double h = joints.joint(f, j).y();
      double disp = (n == 1) ? 0.0
                             : (joints.joint(f + 1, j) - joints.joint(f, j))
                                   .norm();
      flags(f, k) = (h < height_thresh && disp < velocity_thresh) ? 1.0 : 0.0;
    }
  }
  return flags;
}

void rotate_motion(JointSequence& joints, FrameRotations& rotations,
                   double theta) {
  Matrix3d r = rot_y(theta);
  for (int f = 0; f < joints.frames(); ++f) {
    for (int j = 0; j < kJoints; ++j) joints.set_joint(f, j, r * joints.joint(f, j));
    for (int j = 0; j < kJoints; ++j) rotations[size_t(f)][size_t(j)] =
        r * rotations[size_t(f)][size_t(j)];
  }
}

}  // namespace pmotion
