#pragma once

// Contrastive motion/text evaluator producing the embedding space behind
// FID and R-precision, plus the aggregate metric report types.

#include <string>
#include <utility>
#include <vector>

#include "pmotion/config.hpp"
#include "pmotion/motion.hpp"
#include "pmotion/nn.hpp"
#include "pmotion/training.hpp"

namespace pmotion {

// GRU motion encoder and hashed-token text encoder sharing one embedding
// width; both emit unit-normalized rows.
struct EvaluatorModel {
  nn::ParamStore<float> ps;
  int vocab = 0;
  Eigen::Index dim = 0;
  nn::Gru<float> gru;
  nn::Linear<float> motion_head;
  ad::Tensor<float> token_table;
  nn::Linear<float> text_head;
};

EvaluatorModel make_evaluator(const RunConfig& cfg);

// Tape-visible (1, dim) embeddings.
ad::Tensor<float> embed_motion(const EvaluatorModel& m, const MatF& pose);
ad::Tensor<float> embed_text(const EvaluatorModel& m,
                             const std::string& prompt);

// Stacked NoGrad embeddings, one row per input.
MatD motion_feature_matrix(const EvaluatorModel& m,
                           const std::vector<MatF>& poses);
MatD text_feature_matrix(const EvaluatorModel& m,
                         const std::vector<std::string>& prompts);

// Symmetric InfoNCE over matched batches at the given temperature.
ad::Tensor<float> info_nce(const std::vector<ad::Tensor<float>>& motion_rows,
                           const std::vector<ad::Tensor<float>>& text_rows,
                           float temp = 0.07f);

// Contrastive training on the train split; saves evaluator.ckpt.
TrainResult train_evaluator(const RunConfig& cfg, const std::string& out_dir);

EvaluatorModel load_evaluator(const RunConfig& cfg, const std::string& ckpt);

struct MetricReport {
  double fid = 0;
  double foot_skating = 0;
  double cop_error_m = 0;
  double lmpjpe_m = 0;
  double mpjpe_m = 0;
  double traj_error_ratio = 0;
  double r_precision_top3 = 0;
};

// One-line JSON record.
std::string report_json(const MetricReport& r);

// Fixed-width text table, one row per labeled report.
std::string report_table(
    const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace pmotion
