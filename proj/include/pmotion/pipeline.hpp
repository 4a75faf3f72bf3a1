#pragma once

// Reverse-diffusion reconstruction with the control branch, the split-level
// evaluation harness, and joint export.

#include <filesystem>
#include <string>
#include <vector>

#include "pmotion/evaluation.hpp"
#include "pmotion/metrics.hpp"
#include "pmotion/training.hpp"

namespace pmotion {

// Pressure-derived conditions for one sequence; traj is world-frame.
struct SampleControls {
  MatF traj;  // (frames, kTrajDim)
  PressureSequence pressure;
};

// DDPM reconstruction. Controls feed both sides of the classifier-free
// pair, so guidance contrasts the prompt only; null controls fall back to
// text-driven sampling.
MatF sample_guided(GuidedModel& model, const NoiseSchedule& sched, int frames,
                   const std::string& prompt, const SampleControls* controls,
                   const SamplingConfig& cfg, Rng& rng);

// Single conditional denoise at the final step from pure noise.
MatF sample_regression(GuidedModel& model, const NoiseSchedule& sched,
                       int frames, const std::string& prompt,
                       const SampleControls* controls, Rng& rng);

struct EvalOptions {
  std::string mode = "full";  // full | text_only | regression
  const TrajModel* extractor = nullptr;  // null -> ground-truth trajectories
  int rprecision_pool = 32;
};

// Reconstruct every sequence from its first caption, with the per-sequence
// generator derived from cfg.seed and the sequence index.
std::vector<PoseSequence> reconstruct_set(
    GuidedModel& model, const NoiseSchedule& sched,
    const std::vector<StoredSequence>& seqs, const EvalOptions& opt,
    const SamplingConfig& cfg);

// Frame-weighted aggregation of predictions against their records.
MetricReport score_set(const EvaluatorModel& ev,
                       const std::vector<StoredSequence>& seqs,
                       const std::vector<PoseSequence>& preds,
                       int rprecision_pool);

MetricReport evaluate_set(GuidedModel& model, const EvaluatorModel& ev,
                          const NoiseSchedule& sched,
                          const std::vector<StoredSequence>& seqs,
                          const EvalOptions& opt, const SamplingConfig& cfg);

// One CSV row per frame: 66 world coordinates, six fractional digits.
void export_joints(const JointSequence& joints,
                   const std::filesystem::path& path);

}  // namespace pmotion
