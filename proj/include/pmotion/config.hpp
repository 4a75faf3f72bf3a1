#pragma once

// Run configuration: five sections mirrored one-to-one in JSON. Loading
// is strict — unknown keys and malformed values are errors.

#include <cstdint>
#include <string>

#include "pmotion/diffusion.hpp"

namespace pmotion {

struct DataConfig {
  std::string root = "data";
  int sequences = 64;
  int frames_min = 40, frames_max = 56;
  int mat_height = 64, mat_width = 64;
  double mat_scale = 0.02;
  double footprint_sigma = 2.0;
  int augment_copies = 0;
  uint64_t seed = 1234;
};

struct ModelConfig {
  int latent = 512;
  int heads = 4;
  int ffn = 1024;
  int layers = 8;
  int vocab = 4096;
  int timesteps = 1000;
  double beta_start = 1e-4, beta_end = 0.02;
  int shift_dim = 256;
  int traj_hidden = 256;
  int grid_channels = 8;
};

struct TrainingConfig {
  std::string mode = "full";  // full | text_only | regression
  double lr = 1e-5;
  double weight_decay = 0.0;
  int batch = 32;
  int steps = 1000;
  double text_dropout = 0.10;
  double lambda_diff = 1.0, lambda_cons = 5.0;
  uint64_t seed = 7;
  int log_every = 10;
  int checkpoint_every = 500;
};

struct SamplingConfig {
  double cfg = 5.0;
  std::string control_strength = "unit";  // unit | tau_formula
  uint64_t seed = 99;
};

struct EvalConfig {
  int rprecision_pool = 32;
  int contrastive_steps = 300;
  int contrastive_batch = 16;
  int embed_dim = 512;
  double lr = 1e-3;
  double traj_threshold = 0.5;
  uint64_t seed = 5;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainingConfig training;
  SamplingConfig sampling;
  EvalConfig eval;

  ModelDims dims() const;
  // Digest of the canonical JSON form; identical configs agree.
  std::string digest() const;
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string dump_config(const RunConfig& cfg);

}  // namespace pmotion
