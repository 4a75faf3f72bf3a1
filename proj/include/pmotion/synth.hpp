#pragma once

#include <array>
#include <string>

#include "pmotion/motion.hpp"
#include "pmotion/pressure.hpp"
#include "pmotion/rng.hpp"

namespace pmotion {

enum class MotionKind { Stand, Sway, Walk, Turn, Jump, Squat };

const char* kind_name(MotionKind k);
MotionKind kind_from_name(const std::string& name);

struct MotionRecipe {
  MotionKind kind = MotionKind::Stand;
  int frames = 60;          // 40..160 (2..8 s at 20 fps)
  uint64_t seed = 0;
  double mass_kg = 70.0;    // 30..120
  double height_scale = 1.0;
};

struct MatSpec {
  int height = 64;
  int width = 64;
  double scale = 0.02;          // meters per pixel, both axes
  double footprint_sigma = 2.0; // pixels
  double support_temp = 0.05;   // meters, force-split softmax
};

struct GeneratedMotion {
  JointSequence joints;
  FrameRotations rotations;
};

struct SequenceRecord {
  MotionRecipe recipe;
  PoseSequence pose;
  JointSequence joints;
  FrameRotations rotations;  // empty when loaded from disk
  PressureSequence pressure;
  Calibration calib;
  std::array<std::string, 5> captions;  // most to least detailed
  int clip_warnings = 0;
};

// Deterministic motion synthesis from the recipe seed. Frame 0 root sits on
// the ground-plane origin; stance feet are exactly stationary.
GeneratedMotion generate_motion(const MotionRecipe& recipe);

// Gaussian footprints at the contacting joints' mat projections; per-frame
// force mass*g split by a height softmax over the contacting joints.
// Footprints reaching outside the mat are clipped and counted in *warnings.
PressureSequence render_pressure(const JointSequence& joints,
                                 const MatD& contacts, double mass_kg,
                                 const MatSpec& mat, const Calibration& calib,
                                 int* warnings = nullptr);

// Mat placement covering the contact footprint with seeded jitter.
Calibration place_mat(const JointSequence& joints, const MatSpec& mat,
                      Rng& rng);

// Five captions, most detailed first.
std::array<std::string, 5> make_captions(const MotionRecipe& recipe,
                                         const GeneratedMotion& motion);

// Motion + captions + mat placement + rendering.
SequenceRecord generate_record(const MotionRecipe& recipe, const MatSpec& mat);

// Planar rotation of the whole record about the vertical axis through the
// origin plus a fresh mat placement; pressure is re-rendered from the
// rotated joints so motion, pressure and calibration stay mutually exact.
SequenceRecord augment_record(const SequenceRecord& rec, const MatSpec& mat,
                              Rng& rng);

// One-leg stance fixture for center-of-pressure checks.
SequenceRecord single_support_record(uint64_t seed, int frames,
                                     const MatSpec& mat);

// Support-weighted ground centroid of the flagged contact joints
// (the renderer's own deposit center); oracle helper for tests.
Vector3d support_centroid(const JointSequence& joints, const MatD& contacts,
                          int frame, double temp = 0.05);

}  // namespace pmotion
