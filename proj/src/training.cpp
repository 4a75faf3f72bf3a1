#include "pmotion/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pmotion/losses.hpp"
#include "pmotion/motion.hpp"
#include "pmotion/schedule.hpp"
#include "pmotion/skeleton.hpp"

namespace fs = std::filesystem;

namespace pmotion {

namespace {

void freeze_prefix(nn::ParamStore<float>& ps, const std::string& prefix) {
  for (auto& e : ps.entries())
    if (e.name.rfind(prefix, 0) == 0) e.frozen = true;
}

// step,loss[,l_diff,l_cons] curve, one row per logged step.
struct CurveWriter {
  std::ofstream out;
  std::string path;

  CurveWriter(const fs::path& p, bool split_losses) : path(p.string()) {
    out.open(p);
    require(out.good(), "cannot open curve file " + path);
    out << (split_losses ? "step,loss,l_diff,l_cons\n" : "step,loss\n");
  }
  void row(int step, const StepStats& st, bool split_losses) {
    out << step << ',' << st.loss;
    if (split_losses) out << ',' << st.l_diff << ',' << st.l_cons;
    out << '\n';
    out.flush();
  }
};

bool should_log(int step, int steps, int every) {
  return step % every == 0 || step + 1 == steps;
}

std::vector<int> draw_batch(Rng& rng, int pool, int batch) {
  std::vector<int> idx(static_cast<size_t>(batch));
  for (int& i : idx) i = int(rng.uniform_int(0, pool - 1));
  return idx;
}

void abort_diverged(const nn::ParamStore<float>& ps, const fs::path& out_dir,
                    const CheckpointMeta& meta, int step) {
  save_checkpoint((out_dir / "diverged.ckpt").string(), ps, meta);
  fail("training diverged (non-finite loss) at step " +
       std::to_string(step));
}

}  // namespace

BackboneModel make_backbone_model(const RunConfig& cfg) {
  BackboneModel m;
  m.dims = cfg.dims();
  Rng rng(derive_seed(cfg.training.seed, 0xB0DE));
  m.text = TextEncoder<float>(m.ps, "txt", m.dims.vocab, m.dims.latent, rng);
  m.backbone = Backbone<float>(m.ps, "bb", m.dims, rng);
  return m;
}

TrajModel make_traj_model(const RunConfig& cfg) {
  TrajModel m;
  Rng rng(derive_seed(cfg.training.seed, 0xF7));
  m.fx = TrajExtractor<float>(m.ps, "ft", cfg.data.mat_height,
                              cfg.data.mat_width, cfg.data.mat_scale,
                              cfg.data.mat_scale, cfg.model.traj_hidden, rng);
  return m;
}

GuidedModel make_guided_model(const RunConfig& cfg) {
  GuidedModel m;
  m.dims = cfg.dims();
  Rng rng(derive_seed(cfg.training.seed, 0x6D));
  m.text = TextEncoder<float>(m.ps, "txt", m.dims.vocab, m.dims.latent, rng);
  m.backbone = Backbone<float>(m.ps, "bb", m.dims, rng);
  m.branch = ControlBranch<float>(m.ps, "cb", m.dims, cfg.model.shift_dim,
                                  rng);
  m.shift = ShiftExtractor<float>(m.ps, "fs", cfg.data.mat_height,
                                  cfg.data.mat_width, cfg.model.grid_channels,
                                  cfg.model.shift_dim, rng);
  return m;
}

void adopt_backbone(GuidedModel& model, const std::string& backbone_ckpt) {
  // Mirror the guided txt./bb. entries so the strict loader doubles as the
  // architecture-compatibility check.
  nn::ParamStore<float> tmp;
  for (const auto& e : model.ps.entries())
    if (e.name.rfind("txt.", 0) == 0 || e.name.rfind("bb.", 0) == 0)
      tmp.add(e.name, Mat<float>::Zero(e.t.rows(), e.t.cols()));
  CheckpointMeta meta = load_checkpoint(backbone_ckpt, tmp);
  require(meta.phase == "backbone",
          "adopt_backbone: checkpoint phase is '" + meta.phase + "'");
  nn::copy_params(model.ps, "txt", tmp, "txt");
  nn::copy_params(model.ps, "bb", tmp, "bb");
  nn::copy_params(model.ps, "cb.trunk", tmp, "bb");
  freeze_prefix(model.ps, "txt.");
  freeze_prefix(model.ps, "bb.");
}

MatD traj_world_to_mat(const MatD& traj, const Vector2d& offset) {
  require(traj.cols() == kTrajDim, "traj_world_to_mat: width");
  MatD out = traj;
  for (int j = 0; j < 5; ++j) {
    out.col(3 * j + 0).array() -= offset.x();
    out.col(3 * j + 2).array() -= offset.y();
  }
  return out;
}

MatD traj_mat_to_world(const MatD& traj, const Vector2d& offset) {
  return traj_world_to_mat(traj, Vector2d(-offset));
}

std::vector<TrainItem> prepare_items(const std::vector<StoredSequence>& seqs,
                                     const TrajModel* fx,
                                     const Calibration* calib_hint) {
  std::vector<TrainItem> items;
  items.reserve(seqs.size());
  for (const StoredSequence& s : seqs) {
    const int n = s.pose.frames();
    require(s.pressure.frames() == n, "prepare_items: frame count mismatch");
    TrainItem it;
    it.pose = s.pose.data;
    Skeleton sk = make_skeleton(s.recipe.height_scale);
    MatD traj_gt = extract_trajectory_targets(s.pose, sk);
    it.key_world = traj_gt.leftCols(15).cast<float>();
    if (fx) {
      ad::NoGrad ng;
      auto out = fx->fx.forward(s.pressure);
      Vector2d off = calib_hint
                         ? calib_hint->offset
                         : Vector2d(out.offset.value().cast<double>().row(0));
      it.traj =
          traj_mat_to_world(out.traj.value().cast<double>(), off)
              .cast<float>();
    } else {
      it.traj = traj_gt.cast<float>();
    }
    it.mask = Mat<float>::Zero(n, 5);
    for (int f = 0; f < n; ++f)
      if (s.pressure.maps[size_t(f)].sum() > 1e-6f) it.mask.row(f).setOnes();
    it.pressure = s.pressure;
    it.captions = s.captions;
    items.push_back(std::move(it));
  }
  return items;
}

ItemDraw item_draw(uint64_t seed, double text_dropout, int timesteps,
                   int step, size_t slot) {
  ItemDraw d;
  d.rng = Rng(derive_seed(seed, uint64_t(step), slot));
  d.t = int(d.rng.uniform_int(1, timesteps));
  d.level = int(d.rng.uniform_int(0, 4));
  d.drop_text = d.rng.bernoulli(text_dropout);
  return d;
}

StepStats guided_train_step(GuidedModel& model, const NoiseSchedule& sched,
                            const std::vector<TrainItem>& items,
                            const std::vector<int>& batch, int step,
                            const TrainingConfig& cfg, nn::AdamW<float>& opt) {
  require(!batch.empty(), "guided_train_step: empty batch");
  const int T = sched.steps();
  const bool regression = cfg.mode == "regression";
  const bool frozen_probe = cfg.mode == "text_only";
  const double inv = 1.0 / double(batch.size());

  StepStats st;
  ad::Tensor<float> total =
      ad::Tensor<float>::constant(Mat<float>::Zero(1, 1));
  for (size_t i = 0; i < batch.size(); ++i) {
    const TrainItem& item = items[size_t(batch[i])];
    ItemDraw d = item_draw(cfg.seed, cfg.text_dropout, T, step, i);
    const int t = regression ? T : d.t;
    const std::string prompt =
        d.drop_text ? "" : item.captions[size_t(d.level)];
    MatF eps = sample_noise_like(int(item.pose.rows()),
                                 int(item.pose.cols()), d.rng);
    MatF x_t = regression ? eps : q_sample(sched, item.pose, t, eps);

    MatF x0_base;
    {
      ad::NoGrad ng;
      x0_base = model.backbone
                    .forward(ad::Tensor<float>::constant(x_t), t,
                             model.text.forward(prompt))
                    .value();
    }

    ad::Tensor<float> x0g;
    if (frozen_probe) {
      x0g = ad::Tensor<float>::constant(x0_base);
    } else {
      ad::Tensor<float> r = model.branch.forward(
          ad::Tensor<float>::constant(x_t), t, model.text.forward(prompt),
          ad::Tensor<float>::constant(item.traj),
          model.shift.forward(item.pressure));
      x0g = ad::add(ad::Tensor<float>::constant(x0_base), r);
    }

    ad::Tensor<float> ld = diffusion_loss(x0g, item.pose);
    ConsistencyLoss<float> lc =
        consistency_loss(x0g, item.key_world, item.mask);
    st.l_diff += double(ld.value()(0, 0)) * inv;
    st.l_cons += double(lc.value.value()(0, 0)) * inv;
    st.cons_mask_empty = st.cons_mask_empty || lc.empty_mask;

    ad::Tensor<float> item_loss =
        ad::add(ad::scale(ld, float(cfg.lambda_diff)),
                ad::scale(lc.value, float(cfg.lambda_cons)));
    total = ad::add(total, ad::scale(item_loss, float(inv)));
  }
  st.loss = double(total.value()(0, 0));

  if (!frozen_probe) {
    ad::GradSink<float> sink;
    ad::backward(total, sink);
    opt.step(model.ps, sink);
  }
  return st;
}

TrainResult pretrain_backbone(const RunConfig& cfg,
                              const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto seqs = load_split(cfg.data.root, "train");
  require(!seqs.empty(), "pretrain_backbone: empty train split");
  BackboneModel model = make_backbone_model(cfg);
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  const TrainingConfig& tc = cfg.training;
  nn::AdamW<float> opt(tc.lr, tc.weight_decay);
  CurveWriter curve(fs::path(out_dir) / "backbone_curve.csv", false);
  CheckpointMeta meta{"backbone", "", 0, cfg.digest(), ""};
  Rng brng(derive_seed(tc.seed, 0xBA7C4));

  StepStats st;
  for (int step = 0; step < tc.steps; ++step) {
    auto batch = draw_batch(brng, int(seqs.size()), tc.batch);
    st = StepStats{};
    ad::Tensor<float> total =
        ad::Tensor<float>::constant(Mat<float>::Zero(1, 1));
    for (size_t i = 0; i < batch.size(); ++i) {
      const StoredSequence& s = seqs[size_t(batch[i])];
      ItemDraw d =
          item_draw(tc.seed, tc.text_dropout, sched.steps(), step, i);
      const std::string prompt =
          d.drop_text ? "" : s.captions[size_t(d.level)];
      MatF eps =
          sample_noise_like(s.pose.frames(), int(kFeatureDim), d.rng);
      MatF x_t = q_sample(sched, s.pose.data, d.t, eps);
      ad::Tensor<float> x0p = model.backbone.forward(
          ad::Tensor<float>::constant(x_t), d.t, model.text.forward(prompt));
      total = ad::add(total, ad::scale(diffusion_loss(x0p, s.pose.data),
                                       float(1.0 / batch.size())));
    }
    st.loss = st.l_diff = double(total.value()(0, 0));
    if (!std::isfinite(st.loss)) {
      meta.step = step;
      abort_diverged(model.ps, out_dir, meta, step);
    }
    ad::GradSink<float> sink;
    ad::backward(total, sink);
    opt.step(model.ps, sink);
    if (should_log(step, tc.steps, tc.log_every)) curve.row(step, st, false);
    if ((step + 1) % tc.checkpoint_every == 0 && step + 1 < tc.steps) {
      meta.step = step + 1;
      save_checkpoint(
          (fs::path(out_dir) / ("backbone_step" + std::to_string(step + 1) +
                                ".ckpt"))
              .string(),
          model.ps, meta);
    }
  }
  meta.step = tc.steps;
  std::string ckpt = (fs::path(out_dir) / "backbone.ckpt").string();
  save_checkpoint(ckpt, model.ps, meta);
  return {ckpt, curve.path, tc.steps, st.loss};
}

TrainResult pretrain_traj(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto seqs = load_split(cfg.data.root, "train");
  require(!seqs.empty(), "pretrain_traj: empty train split");
  TrajModel model = make_traj_model(cfg);

  struct Target {
    Mat<float> traj_mat;  // (N, kTrajDim)
    Mat<float> offset;    // (1, 2)
  };
  std::vector<Target> targets;
  targets.reserve(seqs.size());
  for (const StoredSequence& s : seqs) {
    Skeleton sk = make_skeleton(s.recipe.height_scale);
    MatD world = extract_trajectory_targets(s.pose, sk);
    Target tg;
    tg.traj_mat = traj_world_to_mat(world, s.calib.offset).cast<float>();
    tg.offset = s.calib.offset.transpose().cast<float>();
    targets.push_back(std::move(tg));
  }

  const TrainingConfig& tc = cfg.training;
  nn::AdamW<float> opt(tc.lr, tc.weight_decay);
  CurveWriter curve(fs::path(out_dir) / "traj_curve.csv", false);
  CheckpointMeta meta{"traj", "", 0, cfg.digest(), ""};
  Rng brng(derive_seed(tc.seed, 0xBA7C4));

  StepStats st;
  for (int step = 0; step < tc.steps; ++step) {
    auto batch = draw_batch(brng, int(seqs.size()), tc.batch);
    st = StepStats{};
    ad::Tensor<float> total =
        ad::Tensor<float>::constant(Mat<float>::Zero(1, 1));
    for (int idx : batch) {
      const StoredSequence& s = seqs[size_t(idx)];
      const Target& tg = targets[size_t(idx)];
      auto out = model.fx.forward(s.pressure);
      ad::Tensor<float> loss = ad::add(
          ad::mse(out.traj, ad::Tensor<float>::constant(tg.traj_mat)),
          ad::mse(out.offset, ad::Tensor<float>::constant(tg.offset)));
      total = ad::add(total, ad::scale(loss, float(1.0 / batch.size())));
    }
    st.loss = double(total.value()(0, 0));
    if (!std::isfinite(st.loss)) {
      meta.step = step;
      abort_diverged(model.ps, out_dir, meta, step);
    }
    ad::GradSink<float> sink;
    ad::backward(total, sink);
    opt.step(model.ps, sink);
    if (should_log(step, tc.steps, tc.log_every)) curve.row(step, st, false);
  }
  meta.step = tc.steps;
  std::string ckpt = (fs::path(out_dir) / "traj.ckpt").string();
  save_checkpoint(ckpt, model.ps, meta);
  return {ckpt, curve.path, tc.steps, st.loss};
}

TrainResult run_training(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& backbone_ckpt,
                         const std::string& traj_ckpt) {
  fs::create_directories(out_dir);
  auto seqs = load_split(cfg.data.root, "train");
  require(!seqs.empty(), "run_training: empty train split");
  GuidedModel model = make_guided_model(cfg);
  adopt_backbone(model, backbone_ckpt);

  std::vector<TrainItem> items;
  if (!traj_ckpt.empty()) {
    TrajModel traj = make_traj_model(cfg);
    CheckpointMeta tm = load_checkpoint(traj_ckpt, traj.ps);
    require(tm.phase == "traj",
            "run_training: trajectory checkpoint phase is '" + tm.phase +
                "'");
    traj.ps.freeze_all();
    items = prepare_items(seqs, &traj);
  } else {
    items = prepare_items(seqs, nullptr);
  }

  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  const TrainingConfig& tc = cfg.training;
  nn::AdamW<float> opt(tc.lr, tc.weight_decay);
  CurveWriter curve(fs::path(out_dir) / "train_curve.csv", true);
  CheckpointMeta meta{"train", tc.mode, 0, cfg.digest(), ""};
  Rng brng(derive_seed(tc.seed, 0xBA7C4));

  StepStats st;
  for (int step = 0; step < tc.steps; ++step) {
    auto batch = draw_batch(brng, int(items.size()), tc.batch);
    st = guided_train_step(model, sched, items, batch, step, tc, opt);
    if (!std::isfinite(st.loss)) {
      meta.step = step;
      abort_diverged(model.ps, out_dir, meta, step);
    }
    if (should_log(step, tc.steps, tc.log_every)) curve.row(step, st, true);
    if ((step + 1) % tc.checkpoint_every == 0 && step + 1 < tc.steps) {
      meta.step = step + 1;
      save_checkpoint(
          (fs::path(out_dir) / ("train_step" + std::to_string(step + 1) +
                                ".ckpt"))
              .string(),
          model.ps, meta);
    }
  }
  meta.step = tc.steps;
  std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(ckpt, model.ps, meta);
  return {ckpt, curve.path, tc.steps, st.loss};
}

}  // namespace pmotion
