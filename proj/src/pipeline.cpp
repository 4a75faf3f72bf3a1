#include "pmotion/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <utility>

namespace pmotion {

namespace {

// x0 prediction with the control residual folded in at the given strength.
MatF denoise_once(GuidedModel& model, const NoiseSchedule& sched,
                  const MatF& x_t, int t, const MatF& text_val,
                  const SampleControls* controls, const MatF& shift_val,
                  bool unit_strength) {
  ad::NoGrad ng;
  MatF x0 = model.backbone
                .forward(ad::Tensor<float>::constant(x_t), t,
                         ad::Tensor<float>::constant(text_val))
                .value();
  if (controls) {
    MatF r = model.branch
                 .forward(ad::Tensor<float>::constant(x_t), t,
                          ad::Tensor<float>::constant(text_val),
                          ad::Tensor<float>::constant(controls->traj),
                          ad::Tensor<float>::constant(shift_val))
                 .value();
    const double s =
        unit_strength ? 1.0 : control_strength(sched, t, kFeatureDim);
    x0 += float(s) * r;
  }
  return x0;
}

void check_controls(const SampleControls* controls, int frames) {
  if (!controls) return;
  require(controls->traj.rows() == frames &&
              controls->traj.cols() == Eigen::Index(kTrajDim),
          "sample: trajectory control shape");
  require(controls->pressure.frames() == frames,
          "sample: pressure control length");
}

// Mean top-3 retrieval over consecutive pools; the trailing partial pool
// is dropped once at least one full pool exists.
double pooled_r_precision(const MatD& motion, const MatD& text, int pool) {
  require(pool >= 4, "score_set: rprecision_pool must be >= 4");
  const Eigen::Index rows = motion.rows();
  const Eigen::Index p = std::min<Eigen::Index>(pool, rows);
  if (p < 4) return r_precision(motion, text, int(p) - 1);
  const Eigen::Index chunks = rows / p;
  double total = 0;
  for (Eigen::Index c = 0; c < chunks; ++c)
    total += r_precision(motion.middleRows(c * p, p),
                         text.middleRows(c * p, p), 3);
  return total / double(chunks);
}

}  // namespace

MatF sample_guided(GuidedModel& model, const NoiseSchedule& sched, int frames,
                   const std::string& prompt, const SampleControls* controls,
                   const SamplingConfig& cfg, Rng& rng) {
  require(frames >= 1 && frames <= kMaxFrames, "sample_guided: frame count");
  const bool unit = cfg.control_strength == "unit";
  require(unit || cfg.control_strength == "tau_formula",
          "sample_guided: unknown control strength '" + cfg.control_strength +
              "'");
  check_controls(controls, frames);

  ad::NoGrad ng;
  MatF text_cond = model.text.forward(prompt).value();
  MatF text_null = model.text.forward("").value();
  MatF shift_val;
  if (controls) shift_val = model.shift.forward(controls->pressure).value();

  DenoiseFn cond = [&](const MatF& x, int t) {
    return denoise_once(model, sched, x, t, text_cond, controls, shift_val,
                        unit);
  };
  DenoiseFn uncond = [&](const MatF& x, int t) {
    return denoise_once(model, sched, x, t, text_null, controls, shift_val,
                        unit);
  };
  return ddpm_sample(sched, frames, kFeatureDim, cond, uncond, cfg.cfg, rng);
}

MatF sample_regression(GuidedModel& model, const NoiseSchedule& sched,
                       int frames, const std::string& prompt,
                       const SampleControls* controls, Rng& rng) {
  require(frames >= 1 && frames <= kMaxFrames,
          "sample_regression: frame count");
  check_controls(controls, frames);
  ad::NoGrad ng;
  MatF text_cond = model.text.forward(prompt).value();
  MatF shift_val;
  if (controls) shift_val = model.shift.forward(controls->pressure).value();
  MatF x = sample_noise_like(frames, kFeatureDim, rng);
  return denoise_once(model, sched, x, sched.steps(), text_cond, controls,
                      shift_val, true);
}

std::vector<PoseSequence> reconstruct_set(
    GuidedModel& model, const NoiseSchedule& sched,
    const std::vector<StoredSequence>& seqs, const EvalOptions& opt,
    const SamplingConfig& cfg) {
  require(!seqs.empty(), "reconstruct_set: empty split");
  require(opt.mode == "full" || opt.mode == "text_only" ||
              opt.mode == "regression",
          "reconstruct_set: unknown mode '" + opt.mode + "'");
  std::vector<TrainItem> items = prepare_items(seqs, opt.extractor);

  std::vector<PoseSequence> preds;
  preds.reserve(seqs.size());
  for (size_t i = 0; i < seqs.size(); ++i) {
    const int n = seqs[i].pose.frames();
    Rng rng(derive_seed(cfg.seed, i));
    SampleControls ctl{items[i].traj, items[i].pressure};
    const SampleControls* cp = opt.mode == "text_only" ? nullptr : &ctl;
    const std::string& prompt = seqs[i].captions[0];
    MatF x0 = opt.mode == "regression"
                  ? sample_regression(model, sched, n, prompt, cp, rng)
                  : sample_guided(model, sched, n, prompt, cp, cfg, rng);
    preds.push_back(PoseSequence{std::move(x0)});
  }
  return preds;
}

MetricReport score_set(const EvaluatorModel& ev,
                       const std::vector<StoredSequence>& seqs,
                       const std::vector<PoseSequence>& preds,
                       int rprecision_pool) {
  require(!seqs.empty() && seqs.size() == preds.size(),
          "score_set: paired non-empty sets");

  CopStats cop;
  SkateStats skate;
  JointErrorStats je;
  std::vector<JointSequence> pred_joints, gt_joints;
  std::vector<MatF> pred_poses, gt_poses;
  std::vector<std::string> prompts;
  pred_joints.reserve(seqs.size());
  gt_joints.reserve(seqs.size());

  for (size_t i = 0; i < seqs.size(); ++i) {
    const StoredSequence& s = seqs[i];
    require(preds[i].frames() == s.pose.frames(),
            "score_set: frame count mismatch");
    Skeleton skel = make_skeleton(s.recipe.height_scale);
    JointSequence pj = recover_global_joints(preds[i], skel);

    CopStats c = cop_stats(s.pressure, pj, s.calib);
    cop.sum += c.sum;
    cop.frames += c.frames;
    SkateStats k = skate_stats(pj, detect_foot_contacts(s.joints));
    skate.slips += k.slips;
    skate.flagged += k.flagged;
    JointErrorStats e = joint_error_stats(pj, s.joints);
    je.sum_all += e.sum_all;
    je.sum_lower += e.sum_lower;
    je.frames += e.frames;

    pred_joints.push_back(std::move(pj));
    gt_joints.push_back(s.joints);
    pred_poses.push_back(preds[i].data);
    gt_poses.push_back(s.pose.data);
    prompts.push_back(s.captions[0]);
  }

  MetricReport r;
  r.cop_error_m = cop.frames ? cop.sum / cop.frames : 0.0;
  r.foot_skating = skate.flagged ? double(skate.slips) / skate.flagged : 0.0;
  r.mpjpe_m = je.sum_all / (double(je.frames) * kJoints);
  r.lmpjpe_m = je.sum_lower / (double(je.frames) * kLowerJoints.size());
  r.traj_error_ratio = trajectory_error_ratio(pred_joints, gt_joints);

  MatD pred_feats = motion_feature_matrix(ev, pred_poses);
  MatD gt_feats = motion_feature_matrix(ev, gt_poses);
  r.fid = fid(pred_feats, gt_feats);
  MatD text_feats = text_feature_matrix(ev, prompts);
  r.r_precision_top3 =
      pooled_r_precision(pred_feats, text_feats, rprecision_pool);
  return r;
}

MetricReport evaluate_set(GuidedModel& model, const EvaluatorModel& ev,
                          const NoiseSchedule& sched,
                          const std::vector<StoredSequence>& seqs,
                          const EvalOptions& opt, const SamplingConfig& cfg) {
  std::vector<PoseSequence> preds =
      reconstruct_set(model, sched, seqs, opt, cfg);
  return score_set(ev, seqs, preds, opt.rprecision_pool);
}

void export_joints(const JointSequence& joints,
                   const std::filesystem::path& path) {
  require(joints.frames() >= 1, "export_joints: empty sequence");
  std::ofstream out(path);
  require(out.good(), "export_joints: cannot write " + path.string());
  char buf[32];
  for (int n = 0; n < joints.frames(); ++n) {
    for (Eigen::Index c = 0; c < joints.pos.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", joints.pos(n, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  out.flush();
  require(out.good(), "export_joints: write failed");
}

}  // namespace pmotion
