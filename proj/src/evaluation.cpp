#include "pmotion/evaluation.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pmotion/text.hpp"

namespace fs = std::filesystem;

namespace pmotion {

namespace {

ad::Tensor<float> l2_normalize_rows(const ad::Tensor<float>& x) {
  ad::Tensor<float> ones =
      ad::Tensor<float>::constant(Mat<float>::Ones(x.cols(), 1));
  ad::Tensor<float> norms =
      ad::sqrt_eps(ad::mm(ad::mul(x, x), ones), 1e-12f);
  return ad::div_col_vec(x, norms);
}

}  // namespace

EvaluatorModel make_evaluator(const RunConfig& cfg) {
  EvaluatorModel m;
  m.vocab = cfg.model.vocab;
  m.dim = cfg.eval.embed_dim;
  Rng rng(derive_seed(cfg.eval.seed, 0xE7A1));
  m.gru = nn::Gru<float>(m.ps, "enc.gru", kFeatureDim, m.dim, rng);
  m.motion_head = nn::Linear<float>(m.ps, "enc.head", m.dim, m.dim, rng);
  m.token_table =
      m.ps.add("txt.table", nn::normal_init<float>(m.vocab, m.dim, 0.02, rng));
  m.text_head = nn::Linear<float>(m.ps, "txt.head", m.dim, m.dim, rng);
  return m;
}

ad::Tensor<float> embed_motion(const EvaluatorModel& m, const MatF& pose) {
  require(pose.rows() >= 1 && pose.cols() == kFeatureDim,
          "embed_motion: pose shape");
  ad::Tensor<float> states =
      m.gru.forward(ad::Tensor<float>::constant(pose));
  ad::Tensor<float> last = ad::slice_rows(states, pose.rows() - 1, 1);
  return l2_normalize_rows(m.motion_head.forward(last));
}

ad::Tensor<float> embed_text(const EvaluatorModel& m,
                             const std::string& prompt) {
  std::vector<int> ids = hash_tokens(prompt, m.vocab);
  require(!ids.empty(), "embed_text: prompt has no tokens");
  ad::Tensor<float> pooled = ad::gather_rows_mean(m.token_table, ids);
  return l2_normalize_rows(m.text_head.forward(pooled));
}

MatD motion_feature_matrix(const EvaluatorModel& m,
                           const std::vector<MatF>& poses) {
  require(!poses.empty(), "motion_feature_matrix: empty input");
  ad::NoGrad ng;
  MatD out(Eigen::Index(poses.size()), m.dim);
  for (size_t i = 0; i < poses.size(); ++i)
    out.row(Eigen::Index(i)) =
        embed_motion(m, poses[i]).value().row(0).cast<double>();
  return out;
}

MatD text_feature_matrix(const EvaluatorModel& m,
                         const std::vector<std::string>& prompts) {
  require(!prompts.empty(), "text_feature_matrix: empty input");
  ad::NoGrad ng;
  MatD out(Eigen::Index(prompts.size()), m.dim);
  for (size_t i = 0; i < prompts.size(); ++i)
    out.row(Eigen::Index(i)) =
        embed_text(m, prompts[i]).value().row(0).cast<double>();
  return out;
}

ad::Tensor<float> info_nce(const std::vector<ad::Tensor<float>>& motion_rows,
                           const std::vector<ad::Tensor<float>>& text_rows,
                           float temp) {
  require(!motion_rows.empty() && motion_rows.size() == text_rows.size(),
          "info_nce: paired non-empty batches");
  const Eigen::Index b = Eigen::Index(motion_rows.size());
  ad::Tensor<float> m = ad::concat_rows(motion_rows);
  ad::Tensor<float> t = ad::concat_rows(text_rows);
  ad::Tensor<float> logits =
      ad::scale(ad::mm(m, ad::transpose(t)), 1.0f / temp);
  ad::Tensor<float> eye = ad::Tensor<float>::constant(
      Mat<float>(Mat<float>::Identity(b, b)));
  ad::Tensor<float> diag_m =
      ad::sum_cols(ad::mul(ad::softmax_rows(logits), eye));
  ad::Tensor<float> diag_t = ad::sum_cols(
      ad::mul(ad::softmax_rows(ad::transpose(logits)), eye));
  ad::Tensor<float> log_lik =
      ad::add(ad::sum_all(ad::log_eps(diag_m, 1e-12f)),
              ad::sum_all(ad::log_eps(diag_t, 1e-12f)));
  return ad::scale(log_lik, -0.5f / float(b));
}

TrainResult train_evaluator(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto seqs = load_split(cfg.data.root, "train");
  require(!seqs.empty(), "train_evaluator: empty train split");

  EvaluatorModel model = make_evaluator(cfg);
  nn::AdamW<float> opt(cfg.eval.lr);
  const int steps = cfg.eval.contrastive_steps;
  const int batch = cfg.eval.contrastive_batch;

  std::string csv = (fs::path(out_dir) / "evaluator_curve.csv").string();
  std::ofstream curve(csv);
  require(curve.good(), "cannot open curve file " + csv);
  curve << "step,loss\n";

  CheckpointMeta meta{"evaluator", "", 0, cfg.digest(), ""};
  double loss_val = 0;
  for (int step = 0; step < steps; ++step) {
    Rng rng(derive_seed(cfg.eval.seed, 0x1CE, uint64_t(step)));
    // Distinct items per batch whenever the pool allows it.
    std::vector<int> order(seqs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    for (size_t i = 0; i + 1 < order.size(); ++i)
      std::swap(order[i],
                order[size_t(rng.uniform_int(int64_t(i),
                                             int64_t(order.size()) - 1))]);
    std::vector<ad::Tensor<float>> ms, ts;
    for (int i = 0; i < batch; ++i) {
      const StoredSequence& s = seqs[size_t(order[size_t(i) % order.size()])];
      const int level = int(rng.uniform_int(0, 4));
      ms.push_back(embed_motion(model, s.pose.data));
      ts.push_back(embed_text(model, s.captions[size_t(level)]));
    }
    ad::Tensor<float> loss = info_nce(ms, ts);
    loss_val = double(loss.value()(0, 0));
    if (!std::isfinite(loss_val)) {
      meta.step = step;
      save_checkpoint((fs::path(out_dir) / "diverged.ckpt").string(),
                      model.ps, meta);
      fail("evaluator training diverged at step " + std::to_string(step));
    }
    ad::GradSink<float> sink;
    ad::backward(loss, sink);
    opt.step(model.ps, sink);
    if (step % cfg.training.log_every == 0 || step + 1 == steps) {
      curve << step << ',' << loss_val << '\n';
      curve.flush();
    }
  }
  meta.step = steps;
  std::string ckpt = (fs::path(out_dir) / "evaluator.ckpt").string();
  save_checkpoint(ckpt, model.ps, meta);
  return {ckpt, csv, steps, loss_val};
}

EvaluatorModel load_evaluator(const RunConfig& cfg, const std::string& ckpt) {
  EvaluatorModel model = make_evaluator(cfg);
  CheckpointMeta meta = load_checkpoint(ckpt, model.ps);
  require(meta.phase == "evaluator",
          "load_evaluator: checkpoint phase is '" + meta.phase + "'");
  model.ps.freeze_all();
  return model;
}

std::string report_json(const MetricReport& r) {
  nlohmann::json j{{"fid", r.fid},
                   {"foot_skating", r.foot_skating},
                   {"cop_error_m", r.cop_error_m},
                   {"lmpjpe_m", r.lmpjpe_m},
                   {"mpjpe_m", r.mpjpe_m},
                   {"traj_error_ratio", r.traj_error_ratio},
                   {"r_precision_top3", r.r_precision_top3}};
  return j.dump();
}

std::string report_table(
    const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %10s %12s %10s %10s %10s %12s %12s\n",
                "method", "FID", "FootSkate", "CoPErr", "LMPJPE", "MPJPE",
                "TrajErr>.5", "RPrec@3");
  out += line;
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof(line),
                  "%-12s %10.4f %12.4f %10.4f %10.4f %10.4f %12.4f %12.4f\n",
                  name.c_str(), r.fid, r.foot_skating, r.cop_error_m,
                  r.lmpjpe_m, r.mpjpe_m, r.traj_error_ratio,
                  r.r_precision_top3);
    out += line;
  }
  return out;
}

}  // namespace pmotion
