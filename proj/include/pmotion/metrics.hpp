#pragma once

// Pure evaluation metrics over joint sequences, pressure clips, and
// embedding matrices. Every function is a deterministic map of its inputs.

#include <optional>
#include <vector>

#include "pmotion/motion.hpp"
#include "pmotion/pressure.hpp"

namespace pmotion {

struct CoPConfig {
  double softmax_temp = 0.05;  // meters; height-softmax sharpness
};

// CoP distance accumulated over frames with ground contact (map sum > 0);
// airborne frames are excluded from both sum and count.
struct CopStats {
  double sum = 0;
  int frames = 0;
};
CopStats cop_stats(const PressureSequence& pressure,
                   const JointSequence& joints, const Calibration& calib,
                   const CoPConfig& cfg = {});

// Mean of cop_stats; no contact anywhere -> nullopt.
std::optional<double> cop_error(const PressureSequence& pressure,
                                const JointSequence& joints,
                                const Calibration& calib,
                                const CoPConfig& cfg = {});

// (frame, foot) pairs flagged in-contact, and those among them whose
// horizontal displacement to the next frame exceeds the threshold.
// contacts is (N, 4) in kContactJoints order.
struct SkateStats {
  int slips = 0;
  int flagged = 0;
};
SkateStats skate_stats(const JointSequence& joints, const MatD& contacts,
                       double velocity_thresh = 0.005);

// slips / flagged; no flagged pairs -> 0.
double foot_skating(const JointSequence& joints, const MatD& contacts,
                    double velocity_thresh = 0.005);

// Per-frame-per-joint position error sums; frames counts rows once.
struct JointErrorStats {
  double sum_all = 0;    // over kJoints
  double sum_lower = 0;  // over kLowerJoints
  int frames = 0;
};
JointErrorStats joint_error_stats(const JointSequence& pred,
                                  const JointSequence& gt);

struct JointErrors {
  double mpjpe = 0;   // all joints
  double lmpjpe = 0;  // kLowerJoints only
};
JointErrors joint_errors(const JointSequence& pred, const JointSequence& gt);

// Fraction of sequences whose root XZ leaves the ground-truth root by more
// than the threshold at any frame.
double trajectory_error_ratio(const std::vector<JointSequence>& preds,
                              const std::vector<JointSequence>& gts,
                              double threshold = 0.5);

// Frechet distance between Gaussian fits of two feature sets (rows =
// samples). Sample covariance; 1e-6 diagonal jitter on near-singular
// covariances; symmetric matrix square root.
double fid(const MatD& feats_a, const MatD& feats_b);

// Top-k retrieval accuracy of each motion's own caption by cosine
// similarity; rows of the two matrices are paired.
double r_precision(const MatD& motion_feats, const MatD& text_feats,
                   int k = 3);

}  // namespace pmotion
