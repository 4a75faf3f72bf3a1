#include "pmotion/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pmotion/skeleton.hpp"

namespace pmotion {

namespace {

// Symmetric PSD square root; negative eigenvalues from roundoff clamp to 0.
MatD sqrtm_psd(const MatD& a) {
  Eigen::SelfAdjointEigenSolver<MatD> eig(a);
  Eigen::VectorXd root =
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() *
         eig.eigenvectors().transpose();
}

MatD sample_cov(const MatD& x, Eigen::RowVectorXd& mean) {
  mean = x.colwise().mean();
  MatD centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / double(x.rows() - 1);
}

void jitter_if_singular(MatD& cov) {
  Eigen::SelfAdjointEigenSolver<MatD> eig(cov);
  if (eig.eigenvalues().minCoeff() < 1e-8)
    cov.diagonal().array() += 1e-6;
}

}  // namespace

CopStats cop_stats(const PressureSequence& pressure,
                   const JointSequence& joints, const Calibration& calib,
                   const CoPConfig& cfg) {
  require(pressure.frames() == joints.frames(),
          "cop_stats: frame count mismatch");
  CopStats s;
  for (int n = 0; n < pressure.frames(); ++n) {
    auto cop_p = world_cop(pressure.maps[size_t(n)], calib);
    if (!cop_p) continue;
    Vector3d cop_m = motion_cop(joints, n, cfg.softmax_temp);
    s.sum += (*cop_p - cop_m).norm();
    ++s.frames;
  }
  return s;
}

std::optional<double> cop_error(const PressureSequence& pressure,
                                const JointSequence& joints,
                                const Calibration& calib,
                                const CoPConfig& cfg) {
  CopStats s = cop_stats(pressure, joints, calib, cfg);
  if (s.frames == 0) return std::nullopt;
  return s.sum / s.frames;
}

SkateStats skate_stats(const JointSequence& joints, const MatD& contacts,
                       double velocity_thresh) {
  require(contacts.rows() == joints.frames() &&
              contacts.cols() == Eigen::Index(kContactJoints.size()),
          "skate_stats: contact shape");
  SkateStats s;
  for (int n = 0; n + 1 < joints.frames(); ++n) {
    for (size_t f = 0; f < kContactJoints.size(); ++f) {
      if (contacts(n, Eigen::Index(f)) <= 0.5) continue;
      ++s.flagged;
      Vector3d d = joints.joint(n + 1, kContactJoints[f]) -
                   joints.joint(n, kContactJoints[f]);
      if (std::hypot(d.x(), d.z()) > velocity_thresh) ++s.slips;
    }
  }
  return s;
}

double foot_skating(const JointSequence& joints, const MatD& contacts,
                    double velocity_thresh) {
  SkateStats s = skate_stats(joints, contacts, velocity_thresh);
  return s.flagged == 0 ? 0.0 : double(s.slips) / s.flagged;
}

JointErrorStats joint_error_stats(const JointSequence& pred,
                                  const JointSequence& gt) {
  require(pred.frames() == gt.frames() && pred.pos.cols() == gt.pos.cols(),
          "joint_error_stats: shape mismatch");
  JointErrorStats s;
  s.frames = pred.frames();
  for (int n = 0; n < pred.frames(); ++n) {
    for (int j = 0; j < kJoints; ++j)
      s.sum_all += (pred.joint(n, j) - gt.joint(n, j)).norm();
    for (int j : kLowerJoints)
      s.sum_lower += (pred.joint(n, j) - gt.joint(n, j)).norm();
  }
  return s;
}

JointErrors joint_errors(const JointSequence& pred, const JointSequence& gt) {
  JointErrorStats s = joint_error_stats(pred, gt);
  JointErrors e;
  e.mpjpe = s.sum_all / (double(s.frames) * kJoints);
  e.lmpjpe = s.sum_lower / (double(s.frames) * kLowerJoints.size());
  return e;
}

double trajectory_error_ratio(const std::vector<JointSequence>& preds,
                              const std::vector<JointSequence>& gts,
                              double threshold) {
  require(!preds.empty() && preds.size() == gts.size(),
          "trajectory_error_ratio: paired non-empty sets");
  int bad = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    require(preds[i].frames() == gts[i].frames(),
            "trajectory_error_ratio: frame count mismatch");
    for (int n = 0; n < preds[i].frames(); ++n) {
      Vector3d d = preds[i].joint(n, Pelvis) - gts[i].joint(n, Pelvis);
      if (std::hypot(d.x(), d.z()) > threshold) {
        ++bad;
        break;
      }
    }
  }
  return double(bad) / double(preds.size());
}

double fid(const MatD& feats_a, const MatD& feats_b) {
  require(feats_a.rows() >= 2 && feats_b.rows() >= 2,
          "fid: need at least two samples per side");
  require(feats_a.cols() == feats_b.cols(), "fid: feature width mismatch");
  require(feats_a.allFinite() && feats_b.allFinite(),
          "fid: non-finite features");

  Eigen::RowVectorXd mu_a, mu_b;
  MatD cov_a = sample_cov(feats_a, mu_a);
  MatD cov_b = sample_cov(feats_b, mu_b);
  jitter_if_singular(cov_a);
  jitter_if_singular(cov_b);

  MatD root_a = sqrtm_psd(cov_a);
  MatD cross = sqrtm_psd(root_a * cov_b * root_a);
  double d2 = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
              2.0 * cross.trace();
  return std::max(d2, 0.0);
}

double r_precision(const MatD& motion_feats, const MatD& text_feats,
                   int k) {
  const Eigen::Index b = motion_feats.rows();
  require(text_feats.rows() == b && text_feats.cols() == motion_feats.cols(),
          "r_precision: paired feature shapes");
  require(k >= 1 && Eigen::Index(k) <= b, "r_precision: pool smaller than k");

  int hits = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::RowVectorXd m = motion_feats.row(i).normalized();
    double own = m.dot(text_feats.row(i).normalized());
    int better = 0;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (m.dot(text_feats.row(j).normalized()) > own) ++better;
    }
    if (better < k) ++hits;
  }
  return double(hits) / double(b);
}

}  // namespace pmotion
