#pragma once

// Training phases over the float production instantiation: denoiser
// pretraining, trajectory-extractor pretraining, and guided-branch
// training with the frozen denoiser.

#include <optional>
#include <string>
#include <vector>

#include "pmotion/checkpoint.hpp"
#include "pmotion/config.hpp"
#include "pmotion/control.hpp"
#include "pmotion/dataset.hpp"
#include "pmotion/extract.hpp"
#include "pmotion/rng.hpp"
#include "pmotion/text.hpp"

namespace pmotion {

// Frozen-after-pretraining prompt encoder + denoiser.
struct BackboneModel {
  nn::ParamStore<float> ps;
  ModelDims dims;
  TextEncoder<float> text;
  Backbone<float> backbone;
};
BackboneModel make_backbone_model(const RunConfig& cfg);

struct TrajModel {
  nn::ParamStore<float> ps;
  TrajExtractor<float> fx;
};
TrajModel make_traj_model(const RunConfig& cfg);

// Full guided stack in one store: txt.* / bb.* frozen at train time,
// cb.* / fs.* trainable.
struct GuidedModel {
  nn::ParamStore<float> ps;
  ModelDims dims;
  TextEncoder<float> text;
  Backbone<float> backbone;
  ControlBranch<float> branch;
  ShiftExtractor<float> shift;
};
GuidedModel make_guided_model(const RunConfig& cfg);

// Seeds every parameter of the guided stack from a pretrained denoiser
// checkpoint (txt.*, bb.*, and the trunk copy), then freezes txt./bb.
void adopt_backbone(GuidedModel& model, const std::string& backbone_ckpt);

// One preprocessed sequence: the clean features, world-frame key-joint
// targets, the control trajectory, its mask, and the raw pressure.
struct TrainItem {
  MatF pose;
  Mat<float> key_world;  // (N, 15)
  MatF traj;             // (N, kTrajDim), world frame
  Mat<float> mask;       // (N, 5); 1 where pressure is present
  PressureSequence pressure;
  std::array<std::string, 5> captions;
};

// Control trajectories come from the frozen extractor when given,
// otherwise from ground truth.
std::vector<TrainItem> prepare_items(const std::vector<StoredSequence>& seqs,
                                     const TrajModel* fx,
                                     const Calibration* calib_hint = nullptr);

// World <-> mat-frame trajectory conversion (planar offset on the five
// key-joint position columns; orientations unchanged).
MatD traj_world_to_mat(const MatD& traj, const Vector2d& offset);
MatD traj_mat_to_world(const MatD& traj, const Vector2d& offset);

// Per-item stochastic draws for one optimisation step.  The returned
// generator continues the same stream and is consumed by the noise
// sample, so replaying (step, slot) is bit-identical.
struct ItemDraw {
  int t = 1;
  int level = 0;
  bool drop_text = false;
  Rng rng{0};
};

ItemDraw item_draw(uint64_t seed, double text_dropout, int timesteps,
                   int step, size_t slot);

struct StepStats {
  double loss = 0, l_diff = 0, l_cons = 0;
  bool cons_mask_empty = false;
};

// One optimizer step of guided training at the given global step index.
StepStats guided_train_step(GuidedModel& model, const NoiseSchedule& sched,
                            const std::vector<TrainItem>& items,
                            const std::vector<int>& batch, int step,
                            const TrainingConfig& cfg,
                            nn::AdamW<float>& opt);

struct TrainResult {
  std::string checkpoint;  // final checkpoint path
  std::string curve_csv;
  int steps_run = 0;
  double final_loss = 0;
};

TrainResult pretrain_backbone(const RunConfig& cfg,
                              const std::string& out_dir);
TrainResult pretrain_traj(const RunConfig& cfg, const std::string& out_dir);
TrainResult run_training(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& backbone_ckpt,
                         const std::string& traj_ckpt);

}  // namespace pmotion
