#pragma once

// Checkpoint container: "PMCK" magic, version, JSON header (entry names,
// shapes, frozen flags, bookkeeping), then raw float32 payloads in header
// order. Loading is strict: the store must declare exactly the same
// entries, and any difference is reported by name.

#include <cstdint>
#include <string>

#include "pmotion/nn.hpp"

namespace pmotion {

struct CheckpointMeta {
  std::string phase;  // backbone | traj | train | evaluator
  std::string mode;   // training mode, when phase == train
  int64_t step = 0;
  std::string config_digest;
  std::string value_digest;  // filled on save; verified on load
};

void save_checkpoint(const std::string& path,
                     const nn::ParamStore<float>& ps,
                     const CheckpointMeta& meta);

CheckpointMeta load_checkpoint(const std::string& path,
                               nn::ParamStore<float>& ps);

// Header only; payloads are not read.
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace pmotion
