#include "pmotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmotion/motion.hpp"
#include "pmotion/rotation.hpp"
#include "pmotion/skeleton.hpp"

namespace pmotion {
namespace {

constexpr double kDt = 1.0 / kFps;
constexpr double kStandRootHeight = 0.88;  // of height_scale
constexpr double kGaitRootHeight = 0.83;
constexpr double kAnkleRestHeight = 0.04;
constexpr double kAnkleRestForward = -0.07;
constexpr double kStanceHalfWidth = 0.09;
constexpr double kMaxTravel = 1.05;  // meters of root path per sequence

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

struct BodyFrame {
  Vector3d root{0, 0, 0};
  double yaw = 0;
  Vector3d ankle_l{0, 0, 0};
  Vector3d ankle_r{0, 0, 0};
  double foot_yaw_l = 0;
  double foot_yaw_r = 0;
  double arm_swing = 0;  // left arm forward positive
  double arm_raise = 0;  // both arms forward
  double lean = 0;       // spine pitch forward
};

// Orthonormal frame whose -Y axis equals dir; Z leans toward fwd_hint.
Matrix3d bone_frame(const Vector3d& dir, const Vector3d& fwd_hint) {
  Vector3d y = -dir.normalized();
  Vector3d z = fwd_hint - fwd_hint.dot(y) * y;
  if (z.norm() < 1e-8) z = Vector3d(0, 0, 1) - y.z() * y;
  if (z.norm() < 1e-8) z = Vector3d(1, 0, 0) - y.x() * y;
  z.normalize();
  Matrix3d r;
  r.col(0) = y.cross(z);
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

void solve_leg(const Skeleton& sk, const Vector3d& root, const Matrix3d& r_root,
               int hip, int knee, int ankle, int foot,
               const Vector3d& ankle_target, double foot_yaw,
               std::array<Vector3d, kJoints>& pos,
               std::array<Matrix3d, kJoints>& rot) {
  const double l1 = sk.offsets[knee].norm();
  const double l2 = sk.offsets[ankle].norm();
  const Vector3d hip_pos = root + r_root * sk.offsets[hip];
  const Vector3d d = ankle_target - hip_pos;
  const double dist = d.norm();
  require(dist > 1e-6, "leg solve: ankle target coincides with hip");
  require(dist <= l1 + l2 - 1e-4,
          "leg solve: target out of reach (dist " + std::to_string(dist) +
              ", max " + std::to_string(l1 + l2) + ")");

  const double cos_hip =
      std::clamp((l1 * l1 + dist * dist - l2 * l2) / (2.0 * l1 * dist), -1.0, 1.0);
  const double sin_hip = std::sqrt(std::max(0.0, 1.0 - cos_hip * cos_hip));
  const Vector3d u = d / dist;
  const Vector3d fwd = rot_y(foot_yaw) * Vector3d(0, 0, 1);
  Vector3d bend = fwd - fwd.dot(u) * u;
  if (bend.norm() < 1e-8) bend = Vector3d(0, 0, 1) - u.z() * u;
  bend.normalize();
  const Vector3d knee_pos = hip_pos + l1 * (cos_hip * u + sin_hip * bend);

  rot[hip] = bone_frame((knee_pos - hip_pos) / l1, fwd);
  rot[knee] = bone_frame((ankle_target - knee_pos).normalized(), fwd);
  rot[ankle] = rot_y(foot_yaw);
  rot[foot] = rot[ankle];
  pos[hip] = hip_pos;
  pos[knee] = knee_pos;
  pos[ankle] = ankle_target;
  pos[foot] = ankle_target + rot[ankle] * sk.offsets[foot];
}

void assemble_frame(const Skeleton& sk, const BodyFrame& f,
                    std::array<Vector3d, kJoints>& pos,
                    std::array<Matrix3d, kJoints>& rot) {
  const Matrix3d r_root = rot_y(f.yaw);
  pos[Joint::Pelvis] = f.root;
  rot[Joint::Pelvis] = r_root;

  const Matrix3d r_spine = r_root * rot_x(f.lean);
  for (int j : {Joint::Spine1, Joint::Spine2, Joint::Spine3, Joint::Neck,
                Joint::Head, Joint::LCollar, Joint::RCollar})
    rot[j] = r_spine;

  const double hang = 1.31;  // arms near the sides
  const Matrix3d swing_l = rot_x(-(f.arm_swing + f.arm_raise));
  const Matrix3d swing_r = rot_x(-(-f.arm_swing + f.arm_raise));
  rot[Joint::LShoulder] = r_spine * swing_l * rot_z(-hang);
  rot[Joint::RShoulder] = r_spine * swing_r * rot_z(hang);
  rot[Joint::LElbow] = rot[Joint::LWrist] = rot[Joint::LShoulder];
  rot[Joint::RElbow] = rot[Joint::RWrist] = rot[Joint::RShoulder];

  for (int j : {Joint::Spine1, Joint::Spine2, Joint::Spine3, Joint::Neck,
                Joint::LCollar, Joint::RCollar, Joint::Head, Joint::LShoulder,
                Joint::RShoulder, Joint::LElbow, Joint::RElbow, Joint::LWrist,
                Joint::RWrist})
    pos[j] = pos[sk.parents[j]] + rot[sk.parents[j]] * sk.offsets[j];

  solve_leg(sk, f.root, r_root, Joint::LHip, Joint::LKnee, Joint::LAnkle,
            Joint::LFoot, f.ankle_l, f.foot_yaw_l, pos, rot);
  solve_leg(sk, f.root, r_root, Joint::RHip, Joint::RKnee, Joint::RAnkle,
            Joint::RFoot, f.ankle_r, f.foot_yaw_r, pos, rot);
}

GeneratedMotion assemble(const Skeleton& sk, const std::vector<BodyFrame>& fs) {
  GeneratedMotion m;
  const int n = static_cast<int>(fs.size());
  m.joints.pos = MatD::Zero(n, kJoints * 3);
  m.rotations.resize(n);
  std::array<Vector3d, kJoints> pos;
  std::array<Matrix3d, kJoints> rot;
  for (int i = 0; i < n; ++i) {
    assemble_frame(sk, fs[i], pos, rot);
    for (int j = 0; j < kJoints; ++j) m.joints.set_joint(i, j, pos[j]);
    m.rotations[i] = rot;
  }
  return m;
}

BodyFrame stance_frame(double s) {
  BodyFrame f;
  f.root = Vector3d(0, kStandRootHeight * s, 0);
  f.ankle_l = Vector3d(kStanceHalfWidth * s, kAnkleRestHeight * s,
                       kAnkleRestForward * s);
  f.ankle_r = Vector3d(-kStanceHalfWidth * s, kAnkleRestHeight * s,
                       kAnkleRestForward * s);
  return f;
}

std::vector<BodyFrame> gen_stand(int n, Rng& rng, double s) {
  const double bob = rng.uniform_range(0.002, 0.005) * s;
  const double freq = rng.uniform_range(0.2, 0.35);
  std::vector<BodyFrame> fs(n, stance_frame(s));
  for (int i = 0; i < n; ++i)
    fs[i].root.y() += bob * std::sin(2.0 * M_PI * freq * i * kDt);
  return fs;
}

std::vector<BodyFrame> gen_sway(int n, Rng& rng, double s) {
  const double amp = rng.uniform_range(0.04, 0.10) * s;
  const double freq = rng.uniform_range(0.3, 0.55);
  std::vector<BodyFrame> fs(n, stance_frame(s));
  for (int i = 0; i < n; ++i) {
    const double ph = 2.0 * M_PI * freq * i * kDt;
    fs[i].root.x() = amp * std::sin(ph);
    fs[i].root.y() = (kStandRootHeight - 0.015) * s + 0.004 * s * std::cos(2 * ph);
  }
  return fs;
}

// Shared straight/arc gait; omega == 0 walks straight. The root rides the
// midpoint of the two feet's path coordinates, which keeps the hip-to-ankle
// span under half a stride at all times (startup included).
std::vector<BodyFrame> gen_gait(int n, Rng& rng, double s, double omega) {
  const double v = rng.uniform_range(0.35, 0.60) * s;
  const int swing_frames = 8;
  const int dwell_frames = 3;
  const double swing_t = swing_frames * kDt;
  const double dwell_t = dwell_frames * kDt;
  const double cycle = 2.0 * (swing_t + dwell_t);
  const double step_len = v * (swing_t + dwell_t);
  const double arc_cap = kMaxTravel * s;
  const double lift = rng.uniform_range(0.05, 0.07) * s;
  const double w = kStanceHalfWidth * s;

  auto root_xz = [&](double arc) -> Vector3d {
    if (std::abs(omega) < 1e-9) return Vector3d(0, 0, arc);
    const double r = v / omega;
    const double phi = arc / v * omega;
    return Vector3d(r * (1.0 - std::cos(phi)), 0, r * std::sin(phi));
  };
  auto yaw_at = [&](double arc) {
    return std::abs(omega) < 1e-9 ? 0.0 : arc / v * omega;
  };
  auto plant_at = [&](double arc, int side) -> Vector3d {
    Vector3d p = root_xz(arc) + rot_y(yaw_at(arc)) *
                                    Vector3d(side * w, 0, kAnkleRestForward * s);
    p.y() = kAnkleRestHeight * s;
    return p;
  };

  double plant_arc[2] = {0, 0};
  std::vector<BodyFrame> fs(n);
  int swinger = rng.bernoulli(0.5) ? 0 : 1;
  double next_swing_start = dwell_t;
  double swing_t0 = 0, swing_from_arc = 0, swing_to_arc = 0;
  bool swinging = false, done_stepping = false;
  double arm_gain = 1.0;

  for (int i = 0; i < n; ++i) {
    const double t = i * kDt;
    if (!swinging && !done_stepping && t >= next_swing_start - 1e-9) {
      const double target =
          std::max(plant_arc[0], plant_arc[1]) + step_len;
      if (target > arc_cap + 0.5 * step_len) {
        done_stepping = true;
      } else {
        swinging = true;
        swing_t0 = t;
        swing_from_arc = plant_arc[swinger];
        swing_to_arc = std::min(target, arc_cap + 0.4 * step_len);
      }
    }
    double u = 0;
    if (swinging) {
      u = (t - swing_t0) / swing_t;
      if (u >= 1.0 - 1e-9) {
        plant_arc[swinger] = swing_to_arc;
        swinging = false;
        swinger ^= 1;
        next_swing_start = t + dwell_t;
      }
    }
    double eff[2] = {plant_arc[0], plant_arc[1]};
    if (swinging)
      eff[swinger] =
          swing_from_arc + smoothstep(u) * (swing_to_arc - swing_from_arc);
    const double root_arc = 0.5 * (eff[0] + eff[1]);

    BodyFrame f;
    f.root = root_xz(root_arc);
    f.root.y() =
        (kGaitRootHeight + 0.01 * std::sin(2.0 * M_PI * t / cycle)) * s;
    f.yaw = yaw_at(root_arc);
    if (done_stepping) arm_gain = std::max(0.0, arm_gain - 0.2);
    f.arm_swing = 0.45 * arm_gain * std::sin(2.0 * M_PI * t / cycle);

    Vector3d ankle[2] = {plant_at(plant_arc[0], +1),
                         plant_at(plant_arc[1], -1)};
    double foot_yaw[2] = {yaw_at(plant_arc[0]), yaw_at(plant_arc[1])};
    if (swinging) {
      const double m = smoothstep(u);
      const int side = swinger == 0 ? +1 : -1;
      Vector3d from = plant_at(swing_from_arc, side);
      Vector3d to = plant_at(swing_to_arc, side);
      Vector3d p = from + m * (to - from);
      p.y() += lift * std::sin(M_PI * u);
      ankle[swinger] = p;
      foot_yaw[swinger] =
          yaw_at(swing_from_arc) +
          m * wrap_angle(yaw_at(swing_to_arc) - yaw_at(swing_from_arc));
    }
    f.ankle_l = ankle[0];
    f.ankle_r = ankle[1];
    f.foot_yaw_l = foot_yaw[0];
    f.foot_yaw_r = foot_yaw[1];
    fs[i] = f;
  }
  return fs;
}

std::vector<BodyFrame> gen_walk(int n, Rng& rng, double s) {
  return gen_gait(n, rng, s, 0.0);
}

std::vector<BodyFrame> gen_turn(int n, Rng& rng, double s) {
  const double total = rng.uniform_range(0.7, 1.8) * (rng.bernoulli(0.5) ? 1 : -1);
  const double dur = std::min(n * kDt, kMaxTravel / 0.45);
  return gen_gait(n, rng, s, total / dur);
}

std::vector<BodyFrame> gen_jump(int n, Rng& rng, double s) {
  const double apex = rng.uniform_range(0.12, 0.25) * s;
  const int flight = std::max(4, static_cast<int>(std::round(
                                     2.0 * std::sqrt(2.0 * apex / kGravity) / kDt)));
  const double v0 = kGravity * flight * kDt / 2.0;
  const int lead = std::max(4, (n - flight - 13) / 2);
  const int crouch = 6, push = 3, land = 4;
  const double y0 = kStandRootHeight * s;
  const double y_crouch = 0.72 * s;
  const double y_launch = 0.875 * s;
  const double y_land = 0.76 * s;

  std::vector<BodyFrame> fs(n, stance_frame(s));
  const double tuck = 0.08 * s;
  int i = 0;
  auto phase = [&](int frames, auto fn) {
    for (int k = 0; k < frames && i < n; ++k, ++i) {
      fs[i] = stance_frame(s);
      fn(fs[i], (k + 1.0) / frames);
    }
  };
  phase(lead, [&](BodyFrame&, double) {});
  phase(crouch, [&](BodyFrame& f, double u) {
    f.root.y() = y0 + smoothstep(u) * (y_crouch - y0);
    f.lean = 0.25 * smoothstep(u);
    f.arm_raise = -0.35 * smoothstep(u);
  });
  phase(push, [&](BodyFrame& f, double u) {
    f.root.y() = y_crouch + u * (y_launch - y_crouch);
    f.lean = 0.25 * (1.0 - u);
    f.arm_raise = -0.35 + 1.3 * u;
  });
  phase(flight, [&](BodyFrame& f, double u) {
    const double tau = u * flight * kDt;
    const double dy = v0 * tau - 0.5 * kGravity * tau * tau;
    f.root.y() = y_launch + dy;
    f.arm_raise = 0.95;
    const double rel = dy + tuck * std::sin(M_PI * u);
    f.ankle_l.y() += rel;
    f.ankle_r.y() += rel;
  });
  phase(land, [&](BodyFrame& f, double u) {
    f.root.y() = y_launch + smoothstep(u) * (y_land - y_launch);
    f.arm_raise = 0.95 * (1.0 - u);
    f.lean = 0.15 * std::sin(M_PI * u);
  });
  const int rest = n - i;
  phase(rest, [&](BodyFrame& f, double u) {
    f.root.y() = y_land + smoothstep(std::min(1.0, u * rest / 6.0)) * (y0 - y_land);
  });
  return fs;
}

std::vector<BodyFrame> gen_squat(int n, Rng& rng, double s) {
  const double depth = rng.uniform_range(0.16, 0.28) * s;
  const int per_rep = 24;
  const int reps = std::clamp((n - 8) / per_rep, 1, 3);
  const double y0 = kStandRootHeight * s;

  std::vector<BodyFrame> fs(n, stance_frame(s));
  int i = 0;
  auto phase = [&](int frames, auto fn) {
    for (int k = 0; k < frames && i < n; ++k, ++i) fn(fs[i], (k + 1.0) / frames);
  };
  phase(4, [&](BodyFrame&, double) {});
  for (int r = 0; r < reps; ++r) {
    phase(8, [&](BodyFrame& f, double u) {
      const double m = smoothstep(u);
      f.root.y() = y0 - depth * m;
      f.lean = 0.3 * m;
      f.arm_raise = 1.1 * m;
    });
    phase(4, [&](BodyFrame& f, double) {
      f.root.y() = y0 - depth;
      f.lean = 0.3;
      f.arm_raise = 1.1;
    });
    phase(8, [&](BodyFrame& f, double u) {
      const double m = smoothstep(u);
      f.root.y() = y0 - depth * (1.0 - m);
      f.lean = 0.3 * (1.0 - m);
      f.arm_raise = 1.1 * (1.0 - m);
    });
    phase(4, [&](BodyFrame&, double) {});
  }
  while (i < n) {
    fs[i] = stance_frame(s);
    ++i;
  }
  return fs;
}

struct MotionStats {
  double dist = 0, turn = 0, apex = 0, sway_amp = 0;
  int squat_reps = 0;
};

MotionStats motion_stats(const GeneratedMotion& m, double s) {
  MotionStats st;
  const int n = static_cast<int>(m.rotations.size());
  const Vector3d a = m.joints.joint(0, 0), b = m.joints.joint(n - 1, 0);
  st.dist = std::hypot(b.x() - a.x(), b.z() - a.z());
  double prev = yaw_of(m.rotations[0][0]);
  for (int i = 1; i < n; ++i) {
    const double y = yaw_of(m.rotations[i][0]);
    st.turn += wrap_angle(y - prev);
    prev = y;
  }
  double ymax = 0, xmax = 0, ymin = 1e9;
  for (int i = 0; i < n; ++i) {
    const Vector3d r = m.joints.joint(i, 0);
    ymax = std::max(ymax, r.y());
    ymin = std::min(ymin, r.y());
    xmax = std::max(xmax, std::abs(r.x()));
  }
  st.apex = ymax - kStandRootHeight * s;
  st.sway_amp = xmax;
  st.squat_reps = 0;
  bool low = false;
  for (int i = 0; i < n; ++i) {
    const bool now = m.joints.joint(i, 0).y() < kStandRootHeight * s - 0.10 * s;
    if (now && !low) ++st.squat_reps;
    low = now;
  }
  return st;
}

}  // namespace

const char* kind_name(MotionKind k) {
  switch (k) {
    case MotionKind::Stand: return "stand";
    case MotionKind::Sway: return "sway";
    case MotionKind::Walk: return "walk";
    case MotionKind::Turn: return "turn";
    case MotionKind::Jump: return "jump";
    case MotionKind::Squat: return "squat";
  }
  fail("unknown motion kind");
}

MotionKind kind_from_name(const std::string& name) {
  for (MotionKind k : {MotionKind::Stand, MotionKind::Sway, MotionKind::Walk,
                       MotionKind::Turn, MotionKind::Jump, MotionKind::Squat})
    if (name == kind_name(k)) return k;
  fail("unknown motion kind: " + name);
}

GeneratedMotion generate_motion(const MotionRecipe& recipe) {
  require(recipe.frames >= 40 && recipe.frames <= kMaxFrames,
          "recipe frames out of range");
  require(recipe.height_scale > 0.5 && recipe.height_scale < 1.5,
          "recipe height scale out of range");
  Rng rng(derive_seed(recipe.seed, 0xA11CE));
  const Skeleton sk = make_skeleton(recipe.height_scale);
  const double s = recipe.height_scale;
  std::vector<BodyFrame> fs;
  switch (recipe.kind) {
    case MotionKind::Stand: fs = gen_stand(recipe.frames, rng, s); break;
    case MotionKind::Sway: fs = gen_sway(recipe.frames, rng, s); break;
    case MotionKind::Walk: fs = gen_walk(recipe.frames, rng, s); break;
    case MotionKind::Turn: fs = gen_turn(recipe.frames, rng, s); break;
    case MotionKind::Jump: fs = gen_jump(recipe.frames, rng, s); break;
    case MotionKind::Squat: fs = gen_squat(recipe.frames, rng, s); break;
  }
  return assemble(sk, fs);
}

PressureSequence render_pressure(const JointSequence& joints,
                                 const MatD& contacts, double mass_kg,
                                 const MatSpec& mat, const Calibration& calib,
                                 int* warnings) {
  const int n = joints.frames();
  require(contacts.rows() == n && contacts.cols() == kContactDim,
          "render: contact shape mismatch");
  PressureSequence out;
  out.height = mat.height;
  out.width = mat.width;
  out.maps.reserve(n);
  const double sig2 = 2.0 * mat.footprint_sigma * mat.footprint_sigma;
  const int rad = static_cast<int>(std::ceil(4.0 * mat.footprint_sigma));

  for (int i = 0; i < n; ++i) {
    MatD acc = MatD::Zero(mat.height, mat.width);
    std::vector<int> active;
    for (int k = 0; k < kContactDim; ++k)
      if (contacts(i, k) > 0.5) active.push_back(kContactJoints[k]);
    if (!active.empty()) {
      double ymin = 1e9;
      for (int j : active) ymin = std::min(ymin, joints.joint(i, j).y());
      double wsum = 0;
      std::vector<double> w(active.size());
      for (size_t k = 0; k < active.size(); ++k) {
        w[k] = std::exp(-(joints.joint(i, active[k]).y() - ymin) / mat.support_temp);
        wsum += w[k];
      }
      bool clipped = false;
      for (size_t k = 0; k < active.size(); ++k) {
        const Vector3d p = joints.joint(i, active[k]);
        const double cx = (p.x() - calib.offset.x()) / calib.scale.x();
        const double cz = (p.z() - calib.offset.y()) / calib.scale.y();
        const double force = w[k] / wsum * mass_kg * kGravity;
        const int jc = static_cast<int>(std::lround(cx));
        const int ic = static_cast<int>(std::lround(cz));
        double norm = 0;
        for (int ii = ic - rad; ii <= ic + rad; ++ii)
          for (int jj = jc - rad; jj <= jc + rad; ++jj)
            norm += std::exp(-((ii - cz) * (ii - cz) + (jj - cx) * (jj - cx)) / sig2);
        for (int ii = ic - rad; ii <= ic + rad; ++ii)
          for (int jj = jc - rad; jj <= jc + rad; ++jj) {
            const double g =
                std::exp(-((ii - cz) * (ii - cz) + (jj - cx) * (jj - cx)) / sig2);
            if (ii < 0 || ii >= mat.height || jj < 0 || jj >= mat.width) {
              if (force * g / norm > 1e-9) clipped = true;
              continue;
            }
            acc(ii, jj) += force * g / norm;
          }
      }
      if (clipped && warnings) ++*warnings;
    }
    out.maps.push_back(acc.cast<float>());
  }
  return out;
}

Calibration place_mat(const JointSequence& joints, const MatSpec& mat,
                      Rng& rng) {
  double xmin = 1e9, xmax = -1e9, zmin = 1e9, zmax = -1e9;
  for (int i = 0; i < joints.frames(); ++i)
    for (int j : kContactJoints) {
      const Vector3d p = joints.joint(i, j);
      if (p.y() > 0.2) continue;
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      zmin = std::min(zmin, p.z());
      zmax = std::max(zmax, p.z());
    }
  require(xmin <= xmax, "mat placement: no ground-level contact joints");
  const int rad = static_cast<int>(std::ceil(4.0 * mat.footprint_sigma));
  const double pad = (rad + 2) * mat.scale;
  const double ext_x = mat.width * mat.scale;
  const double ext_z = mat.height * mat.scale;
  const double free_x = std::max(0.0, ext_x - (xmax - xmin) - 2.0 * pad);
  const double free_z = std::max(0.0, ext_z - (zmax - zmin) - 2.0 * pad);
  const double jx = rng.uniform_range(-0.5, 0.5) * std::min(free_x, 0.6);
  const double jz = rng.uniform_range(-0.5, 0.5) * std::min(free_z, 0.6);
  Calibration c;
  c.scale = Vector2d(mat.scale, mat.scale);
  c.offset = Vector2d((xmin + xmax) / 2 - ext_x / 2 + jx,
                      (zmin + zmax) / 2 - ext_z / 2 + jz);
  return c;
}

std::array<std::string, 5> make_captions(const MotionRecipe& recipe,
                                         const GeneratedMotion& motion) {
  Rng rng(derive_seed(recipe.seed, 0xCAB));
  const MotionStats st = motion_stats(motion, recipe.height_scale);
  const char* who = rng.bernoulli(0.5) ? "a person" : "someone";
  auto fmt = [](double v, int prec) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
  };
  std::array<std::string, 5> c;
  switch (recipe.kind) {
    case MotionKind::Stand:
      c = {std::string(who) + " stands still on both feet for " +
               fmt(motion.joints.frames() / kFps, 0) + " seconds",
           std::string(who) + " stands in place without moving the feet",
           "a person stands still", "someone is standing", "a person stands"};
      break;
    case MotionKind::Sway:
      c = {std::string(who) + " stands and sways side to side about " +
               fmt(st.sway_amp * 100, 0) + " centimeters each way",
           std::string(who) + " shifts the weight from side to side while standing",
           "a person sways side to side", "someone rocks sideways in place",
           "a person sways"};
      break;
    case MotionKind::Walk: {
      const bool stops = st.dist >= (kMaxTravel - 0.05) * recipe.height_scale;
      c = {std::string(who) + " walks straight ahead " + fmt(st.dist, 1) +
               " meters" + (stops ? " and stops" : " at a steady pace"),
           std::string(who) + " walks forward several steps at a steady pace",
           "a person walks forward", "someone is walking ahead",
           "a person walks"};
      break;
    }
    case MotionKind::Turn: {
      const char* side = st.turn > 0 ? "left" : "right";
      c = {std::string(who) + " walks along a curve turning " +
               fmt(std::abs(st.turn) * 180.0 / M_PI, 0) + " degrees to the " + side,
           std::string(who) + " walks in a curved path to the " + side,
           std::string("a person walks while turning ") + side,
           "someone walks along a curve", "a person turns"};
      break;
    }
    case MotionKind::Jump:
      c = {std::string(who) + " crouches and jumps straight up about " +
               fmt(st.apex * 100, 0) + " centimeters",
           std::string(who) + " jumps vertically in place with both feet",
           "a person jumps in place", "someone jumps straight up",
           "a person jumps"};
      break;
    case MotionKind::Squat:
      c = {std::string(who) + " performs " + std::to_string(st.squat_reps) +
               (st.squat_reps == 1 ? " squat" : " squats") +
               ", bending the knees deeply",
           std::string(who) + " squats down and stands back up",
           "a person does squats", "someone is squatting", "a person squats"};
      break;
  }
  return c;
}

SequenceRecord generate_record(const MotionRecipe& recipe, const MatSpec& mat) {
  SequenceRecord rec;
  rec.recipe = recipe;
  GeneratedMotion m = generate_motion(recipe);
  rec.captions = make_captions(recipe, m);
  Rng place_rng(derive_seed(recipe.seed, 0x9A7));
  rec.calib = place_mat(m.joints, mat, place_rng);
  const Skeleton sk = make_skeleton(recipe.height_scale);
  rec.pose = encode_motion(m.joints, m.rotations, sk);
  const MatD contacts =
      rec.pose.data.rightCols(kContactDim).cast<double>();
  rec.pressure = render_pressure(m.joints, contacts, recipe.mass_kg, mat,
                                 rec.calib, &rec.clip_warnings);
  rec.joints = std::move(m.joints);
  rec.rotations = std::move(m.rotations);
  return rec;
}

SequenceRecord augment_record(const SequenceRecord& rec, const MatSpec& mat,
                              Rng& rng) {
  require(!rec.rotations.empty(), "augment: record lacks rotations");
  const double theta = rng.uniform_range(-M_PI, M_PI);
  SequenceRecord out;
  out.recipe = rec.recipe;
  out.captions = rec.captions;
  GeneratedMotion m;
  m.joints = rec.joints;
  m.rotations = rec.rotations;
  rotate_motion(m.joints, m.rotations, theta);
  out.calib = place_mat(m.joints, mat, rng);
  const Skeleton sk = make_skeleton(rec.recipe.height_scale);
  out.pose = encode_motion(m.joints, m.rotations, sk);
  const MatD contacts = out.pose.data.rightCols(kContactDim).cast<double>();
  out.pressure = render_pressure(m.joints, contacts, rec.recipe.mass_kg, mat,
                                 out.calib, &out.clip_warnings);
  out.joints = std::move(m.joints);
  out.rotations = std::move(m.rotations);
  return out;
}

SequenceRecord single_support_record(uint64_t seed, int frames,
                                     const MatSpec& mat) {
  MotionRecipe recipe;
  recipe.kind = MotionKind::Stand;
  recipe.frames = frames;
  recipe.seed = seed;
  Rng rng(derive_seed(seed, 0x51));
  recipe.mass_kg = rng.uniform_range(45.0, 95.0);
  recipe.height_scale = rng.uniform_range(0.9, 1.1);
  const double s = recipe.height_scale;
  const Skeleton sk = make_skeleton(s);

  std::vector<BodyFrame> fs(frames);
  for (int i = 0; i < frames; ++i) {
    BodyFrame f;
    f.root = Vector3d(0, 0.84 * s, 0);
    f.ankle_l = Vector3d(0.06 * s, kAnkleRestHeight * s, kAnkleRestForward * s);
    f.ankle_r = Vector3d(-0.10 * s, 0.30 * s, 0.08 * s);
    fs[i] = f;
  }
  GeneratedMotion m = assemble(sk, fs);

  SequenceRecord rec;
  rec.recipe = recipe;
  rec.captions = {"a person balances on the left leg with the right foot raised",
                  "a person stands on one leg", "a person balances on one foot",
                  "someone balances in place", "a person stands"};
  Rng place_rng(derive_seed(seed, 0x9A7));
  rec.calib = place_mat(m.joints, mat, place_rng);
  rec.pose = encode_motion(m.joints, m.rotations, sk);
  const MatD contacts = rec.pose.data.rightCols(kContactDim).cast<double>();
  require(contacts.row(0).sum() == 2.0, "single support: expected one planted foot");
  rec.pressure = render_pressure(m.joints, contacts, recipe.mass_kg, mat,
                                 rec.calib, &rec.clip_warnings);
  rec.joints = std::move(m.joints);
  rec.rotations = std::move(m.rotations);
  return rec;
}

Vector3d support_centroid(const JointSequence& joints, const MatD& contacts,
                          int frame, double temp) {
  std::vector<int> active;
  for (int k = 0; k < kContactDim; ++k)
    if (contacts(frame, k) > 0.5) active.push_back(kContactJoints[k]);
  require(!active.empty(), "support centroid: no contacts");
  double ymin = 1e9;
  for (int j : active) ymin = std::min(ymin, joints.joint(frame, j).y());
  double wsum = 0;
  Vector3d c = Vector3d::Zero();
  for (int j : active) {
    const Vector3d p = joints.joint(frame, j);
    const double w = std::exp(-(p.y() - ymin) / temp);
    c.x() += w * p.x();
    c.z() += w * p.z();
    wsum += w;
  }
  c /= wsum;
  c.y() = 0;
  return c;
}

}  // namespace pmotion
