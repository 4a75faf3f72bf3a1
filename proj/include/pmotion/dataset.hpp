#pragma once

// On-disk sequence corpus: root/{train,val,test}/seq_NNNNN with a JSON
// meta file and little-endian float32 payloads for motion, joints and
// pressure. Augmented copies always share their base sequence's split.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "pmotion/config.hpp"
#include "pmotion/synth.hpp"

namespace pmotion {

struct SplitSizes {
  int train = 0, val = 0, test = 0;
};

// round(0.8 n) / round(0.15 n) / rest.
SplitSizes split_sizes(int n);

struct StoredSequence {
  MotionRecipe recipe;
  MatSpec mat;
  Calibration calib;
  PoseSequence pose;
  JointSequence joints;
  PressureSequence pressure;
  std::array<std::string, 5> captions;
  int clip_warnings = 0;
};

void save_sequence(const std::filesystem::path& dir,
                   const SequenceRecord& rec, const MatSpec& mat);
StoredSequence load_sequence(const std::filesystem::path& dir);

struct BuildReport {
  SplitSizes bases;
  int total = 0;
  int clip_warnings = 0;
  std::string manifest_digest;
};

BuildReport build_dataset(const DataConfig& cfg);

// Sorted sequence directories of one split ("train", "val" or "test").
std::vector<std::filesystem::path> list_split(
    const std::filesystem::path& root, const std::string& split);

std::vector<StoredSequence> load_split(const std::filesystem::path& root,
                                       const std::string& split);

}  // namespace pmotion
