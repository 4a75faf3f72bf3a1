#pragma once

#include <Eigen/Dense>
#include <bit>
#include <stdexcept>
#include <string>

namespace pmotion {

inline constexpr const char* kCodeVersion = "1.0.0";

static_assert(std::endian::native == std::endian::little,
              "f32 payloads are little-endian");

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecD = Eigen::VectorXd;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

// Motion representation constants.
inline constexpr int kJoints = 22;
inline constexpr int kFeatureDim = 263;   // 1+2+1 + 21*3 + 21*6 + 22*3 + 4
inline constexpr int kTrajDim = 39;       // 5*3 positions + 4*6 rotations
inline constexpr int kContactDim = 4;     // L ankle, L foot, R ankle, R foot
inline constexpr int kMaxFrames = 196;
inline constexpr double kFps = 20.0;
inline constexpr double kGravity = 9.81;

// Column offsets inside the 263-dim frame vector.
inline constexpr int kColRootYawVel = 0;
inline constexpr int kColRootVelX = 1;
inline constexpr int kColRootVelZ = 2;
inline constexpr int kColRootHeight = 3;
inline constexpr int kColLocalPos = 4;    // 21*3
inline constexpr int kColLocalRot = 67;   // 21*6
inline constexpr int kColJointVel = 193;  // 22*3
inline constexpr int kColContacts = 259;  // 4

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

}  // namespace pmotion
