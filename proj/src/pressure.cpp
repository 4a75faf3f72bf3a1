#include "pmotion/pressure.hpp"

#include <cmath>

namespace pmotion {

std::optional<Vector2d> pixel_cop(const MatF& map) {
  double total = 0.0, sx = 0.0, sz = 0.0;
  for (Eigen::Index i = 0; i < map.rows(); ++i)
    for (Eigen::Index j = 0; j < map.cols(); ++j) {
      double p = double(map(i, j));
      if (p <= 0.0) continue;
      total += p;
      sx += p * double(j);
      sz += p * double(i);
    }
  if (total <= 0.0) return std::nullopt;
  return Vector2d(sx / total, sz / total);
}

Vector3d cop_to_world(const Vector2d& px, const Calibration& calib) {
  return Vector3d(px.x() * calib.scale.x() + calib.offset.x(), 0.0,
                  px.y() * calib.scale.y() + calib.offset.y());
}

std::optional<Vector3d> world_cop(const MatF& map, const Calibration& calib) {
  auto p = pixel_cop(map);
  if (!p) return std::nullopt;
  return cop_to_world(*p, calib);
}

Vector3d motion_cop(const JointSequence& joints, int frame,
                    double softmax_temp) {
  require(softmax_temp > 0.0, "motion_cop: temperature must be positive");
  double wsum = 0.0;
  Vector3d acc(0, 0, 0);
  double hmin = 1e300;
  for (int j : kContactJoints) hmin = std::min(hmin, joints.joint(frame, j).y());
  for (int j : kContactJoints) {
    Vector3d p = joints.joint(frame, j);
    double w = std::exp(-(p.y() - hmin) / softmax_temp);
    wsum += w;
    acc += w * Vector3d(p.x(), 0.0, p.z());
  }
  return acc / wsum;
}

std::vector<MatF> temporal_diff(const PressureSequence& seq) {
  std::vector<MatF> out;
  out.reserve(size_t(seq.frames()));
  for (int f = 0; f < seq.frames(); ++f) {
    if (f == 0)
      out.push_back(MatF::Zero(seq.maps[0].rows(), seq.maps[0].cols()));
    else
      out.push_back(seq.maps[size_t(f)] - seq.maps[size_t(f) - 1]);
  }
  return out;
}

MatF grid_encoding(int height, int width, int d_e) {
  require(d_e >= 2 && d_e % 2 == 0, "grid_encoding: d_e must be even and >= 2");
  MatF e(d_e, Eigen::Index(height) * width);
  int half = d_e / 2;
  auto axis_value = [](int idx, int extent) {
    return extent > 1 ? double(idx) / double(extent - 1) : 0.0;
  };
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      Eigen::Index col = Eigen::Index(i) * width + j;
      double u = axis_value(j, width);   // column axis first
      double v = axis_value(i, height);  // then row axis
      for (int c = 0; c < half; ++c) {
        double freq = M_PI * std::pow(2.0, double(c / 2));
        double au = u * freq, av = v * freq;
        e(c, col) = float(c % 2 == 0 ? std::sin(au) : std::cos(au));
        e(half + c, col) = float(c % 2 == 0 ? std::sin(av) : std::cos(av));
      }
    }
  return e;
}

}  // namespace pmotion
