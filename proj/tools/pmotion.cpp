#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pmotion/pipeline.hpp"
#include "pmotion/skeleton.hpp"
#include "pmotion/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pmotion;

namespace {

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

std::string default_out(const char* leaf) {
  const char* env = std::getenv("PMOTION_OUT_ROOT");
  return (fs::path(env ? env : "runs") / leaf).string();
}

// Written atomically so a manifest is either absent or complete.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunConfig& cfg, uint64_t seed,
                    const std::string& mode) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config_digest"] = cfg.digest();
  j["seed"] = seed;
  j["version"] = kCodeVersion;
  if (!mode.empty()) j["mode"] = mode;
  const fs::path tmp = fs::path(out_dir) / "manifest.json.tmp";
  {
    std::ofstream o(tmp);
    require(o.good(), "manifest: cannot write " + tmp.string());
    o << j.dump(2) << "\n";
    o.flush();
    require(o.good(), "manifest: write failed");
  }
  fs::rename(tmp, fs::path(out_dir) / "manifest.json");
}

GuidedModel load_trained(const RunConfig& cfg, const std::string& ckpt,
                         std::string* mode) {
  GuidedModel model = make_guided_model(cfg);
  CheckpointMeta meta = load_checkpoint(ckpt, model.ps);
  require(meta.phase == "train",
          "checkpoint phase '" + meta.phase + "' (want train): " + ckpt);
  *mode = meta.mode.empty() ? "full" : meta.mode;
  return model;
}

std::optional<TrajModel> load_extractor(const RunConfig& cfg,
                                        const std::string& ckpt) {
  if (ckpt.empty()) return std::nullopt;
  std::optional<TrajModel> fx(make_traj_model(cfg));
  CheckpointMeta meta = load_checkpoint(ckpt, fx->ps);
  require(meta.phase == "traj",
          "checkpoint phase '" + meta.phase + "' (want traj): " + ckpt);
  fx->ps.freeze_all();
  return fx;
}

void cmd_gen_data(const RunConfig& cfg, const std::string& out) {
  BuildReport rep = build_dataset(cfg.data);
  write_manifest(out, "gen-data", cfg, cfg.data.seed, "");
  std::printf(
      "dataset: %d sequences (train %d / val %d / test %d), "
      "%d clip warnings, digest %s\n",
      rep.total, rep.bases.train, rep.bases.val, rep.bases.test,
      rep.clip_warnings, rep.manifest_digest.c_str());
}

void cmd_pretrain_backbone(const RunConfig& cfg, const std::string& out) {
  TrainResult r = pretrain_backbone(cfg, out);
  write_manifest(out, "pretrain-backbone", cfg, cfg.training.seed, "");
  std::printf("backbone: %d steps, final loss %.6f -> %s\n", r.steps_run,
              r.final_loss, r.checkpoint.c_str());
}

void cmd_pretrain_traj(const RunConfig& cfg, const std::string& out) {
  TrainResult r = pretrain_traj(cfg, out);
  write_manifest(out, "pretrain-traj", cfg, cfg.training.seed, "");
  std::printf("trajectory extractor: %d steps, final loss %.6f -> %s\n",
              r.steps_run, r.final_loss, r.checkpoint.c_str());
}

void cmd_train(const RunConfig& cfg, const std::string& out,
               const std::string& backbone, const std::string& traj) {
  TrainResult r = run_training(cfg, out, backbone, traj);
  write_manifest(out, "train", cfg, cfg.training.seed, cfg.training.mode);
  std::printf("train(%s): %d steps, final loss %.6f -> %s\n",
              cfg.training.mode.c_str(), r.steps_run, r.final_loss,
              r.checkpoint.c_str());
}

void cmd_sample(const RunConfig& cfg, const std::string& out,
                const std::string& ckpt, const std::string& traj_ckpt,
                const std::string& split) {
  std::string mode;
  GuidedModel model = load_trained(cfg, ckpt, &mode);
  std::optional<TrajModel> fx = load_extractor(cfg, traj_ckpt);
  std::vector<StoredSequence> seqs = load_split(cfg.data.root, split);
  require(!seqs.empty(), "sample: split '" + split + "' is empty");

  EvalOptions opt;
  opt.mode = mode;
  opt.extractor = fx ? &*fx : nullptr;
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  std::vector<PoseSequence> preds =
      reconstruct_set(model, sched, seqs, opt, cfg.sampling);

  fs::create_directories(out);
  for (size_t i = 0; i < preds.size(); ++i) {
    Skeleton skel = make_skeleton(seqs[i].recipe.height_scale);
    JointSequence joints = recover_global_joints(preds[i], skel);
    char name[32];
    std::snprintf(name, sizeof name, "joints_%03zu.csv", i);
    export_joints(joints, fs::path(out) / name);
  }
  write_manifest(out, "sample", cfg, cfg.sampling.seed, mode);
  std::printf("sample(%s): %zu sequences from split '%s' -> %s\n",
              mode.c_str(), preds.size(), split.c_str(), out.c_str());
}

void cmd_eval(const RunConfig& cfg, const std::string& out,
              const std::string& ckpt, const std::string& evaluator_ckpt,
              const std::string& traj_ckpt, const std::string& split) {
  std::string mode;
  GuidedModel model = load_trained(cfg, ckpt, &mode);
  std::optional<TrajModel> fx = load_extractor(cfg, traj_ckpt);
  std::vector<StoredSequence> seqs = load_split(cfg.data.root, split);
  require(seqs.size() >= 2,
          "eval: split '" + split + "' needs at least two sequences");

  EvaluatorModel ev = [&] {
    if (!evaluator_ckpt.empty()) return load_evaluator(cfg, evaluator_ckpt);
    TrainResult tr = train_evaluator(cfg, out);
    std::printf("evaluator: %d contrastive steps, final loss %.6f\n",
                tr.steps_run, tr.final_loss);
    return load_evaluator(cfg, tr.checkpoint);
  }();

  std::vector<PoseSequence> gt;
  gt.reserve(seqs.size());
  for (const StoredSequence& s : seqs) gt.push_back(s.pose);
  MetricReport gt_rep = score_set(ev, seqs, gt, cfg.eval.rprecision_pool);

  EvalOptions opt;
  opt.mode = mode;
  opt.extractor = fx ? &*fx : nullptr;
  opt.rprecision_pool = cfg.eval.rprecision_pool;
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  MetricReport rep = evaluate_set(model, ev, sched, seqs, opt, cfg.sampling);

  std::vector<std::pair<std::string, MetricReport>> rows{{"gt", gt_rep},
                                                         {mode, rep}};
  std::fputs(report_table(rows).c_str(), stdout);

  fs::create_directories(out);
  json jr;
  jr["gt"] = json::parse(report_json(gt_rep));
  jr[mode] = json::parse(report_json(rep));
  {
    std::ofstream o(fs::path(out) / "report.json");
    require(o.good(), "eval: cannot write report.json");
    o << jr.dump(2) << "\n";
  }
  write_manifest(out, "eval", cfg, cfg.sampling.seed, mode);
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, auto&& fn) {
    try {
      fn();
      std::printf("[PASS] %s\n", name);
    } catch (const std::exception& e) {
      std::printf("[FAIL] %s: %s\n", name, e.what());
      ++failures;
    }
  };
  const fs::path work = fs::temp_directory_path() / "pmotion_selftest";
  fs::remove_all(work);
  fs::create_directories(work);

  check("noise schedule closed forms", [] {
    NoiseSchedule s = make_schedule(1000);
    require(std::abs(s.abar(1) - 0.9999) < 1e-12, "abar(1) != 0.9999");
    double prod = 1.0;
    for (int t = 1; t <= s.steps(); ++t) {
      prod *= s.alpha(t);
      require(std::abs(prod - s.abar(t)) < 1e-12, "abar product mismatch");
      if (t > 1)
        require(s.abar(t) < s.abar(t - 1), "abar not strictly decreasing");
    }
  });

  check("pixel cop equals double-loop mean", [] {
    Rng rng(11);
    MatF m(6, 7);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 7; ++c)
        m(r, c) = float(rng.uniform_range(0.0, 3.0));
    auto cop = pixel_cop(m);
    require(bool(cop), "no mass");
    double wx = 0, wz = 0, w = 0;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 7; ++c) {
        wx += double(m(r, c)) * c;
        wz += double(m(r, c)) * r;
        w += m(r, c);
      }
    require(std::abs(cop->x() - wx / w) < 1e-9 &&
                std::abs(cop->y() - wz / w) < 1e-9,
            "oracle mismatch");
  });

  check("rigid joint offset shifts cop error exactly", [] {
    Calibration calib;
    calib.offset = Vector2d(0.10, 0.30);
    MatF map = MatF::Zero(12, 12);
    map(5, 7) = 4.0f;
    const double wx = calib.offset.x() + calib.scale.x() * 7;
    const double wz = calib.offset.y() + calib.scale.y() * 5;
    PressureSequence seq{{map}, 12, 12};
    JointSequence joints{MatD::Zero(1, 3 * kJoints)};
    for (int j : kContactJoints)
      joints.set_joint(0, j, Vector3d(wx, 0.01, wz));
    double base = cop_error(seq, joints, calib).value();
    require(base < 1e-9, "aligned case not zero");
    for (int j = 0; j < kJoints; ++j)
      joints.set_joint(0, j, joints.joint(0, j) + Vector3d(0.16, 0.0, 0.12));
    double shifted = cop_error(seq, joints, calib).value();
    require(std::abs(shifted - 0.2) < 1e-6, "offset not recovered");
  });

  check("frechet distance identity and 1-D closed form", [] {
    Rng rng(3);
    MatD a(40, 6);
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 6; ++c) a(r, c) = rng.normal();
    require(fid(a, a) < 1e-6, "fid(A,A) not ~0");
    const double s = 1.0 / std::sqrt(2.0);
    MatD u(2, 1), v(2, 1);
    u << -s, s;
    v << 1.0 - std::sqrt(2.0), 1.0 + std::sqrt(2.0);
    require(std::abs(fid(u, v) - 2.0) < 1e-6, "1-D closed form != 2");
  });

  check("r-precision null rate", [] {
    Rng rng(17);
    double total = 0;
    const int trials = 300;
    for (int i = 0; i < trials; ++i) {
      MatD m(32, 8), t(32, 8);
      for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 8; ++c) {
          m(r, c) = rng.normal();
          t(r, c) = rng.normal();
        }
      total += r_precision(m, t, 3);
    }
    require(std::abs(total / trials - 3.0 / 32.0) < 0.02,
            "null rate off 3/32");
  });

  check("rendered pressure conserves body weight", [] {
    MotionRecipe recipe;
    recipe.kind = MotionKind::Stand;
    recipe.frames = 40;
    recipe.seed = 64;
    SequenceRecord rec = generate_record(recipe, MatSpec{});
    const double expect = rec.recipe.mass_kg * kGravity;
    for (int f = 0; f < rec.pressure.frames(); ++f) {
      const double sum = rec.pressure.maps[size_t(f)].cast<double>().sum();
      require(std::abs(sum - expect) / expect < 1e-6,
              "frame weight mismatch");
    }
  });

  check("dataset round-trip and corruption guard", [&] {
    MotionRecipe recipe;
    recipe.kind = MotionKind::Walk;
    recipe.frames = 40;
    recipe.seed = 9;
    MatSpec mat;
    SequenceRecord rec = generate_record(recipe, mat);
    const fs::path dir = work / "seq";
    save_sequence(dir, rec, mat);
    StoredSequence s = load_sequence(dir);
    require(s.pose.data.rows() == rec.pose.data.rows() &&
                std::memcmp(s.pose.data.data(), rec.pose.data.data(),
                            sizeof(float) * size_t(rec.pose.data.size())) ==
                    0,
            "pose payload not bit-exact");
    fs::resize_file(dir / "motion.f32",
                    fs::file_size(dir / "motion.f32") - 4);
    bool threw = false;
    try {
      load_sequence(dir);
    } catch (const Error&) {
      threw = true;
    }
    require(threw, "truncation not detected");
  });

  check("checkpoint round-trip and corruption guard", [&] {
    RunConfig cfg;
    cfg.model.latent = 16;
    cfg.model.heads = 2;
    cfg.model.ffn = 32;
    cfg.model.layers = 2;
    cfg.model.vocab = 64;
    cfg.model.timesteps = 8;
    BackboneModel m = make_backbone_model(cfg);
    const std::string path = (work / "bb.ckpt").string();
    save_checkpoint(path, m.ps, {"backbone", "", 0, cfg.digest(), ""});
    BackboneModel m2 = make_backbone_model(cfg);
    load_checkpoint(path, m2.ps);
    require(m.ps.value_digest() == m2.ps.value_digest(),
            "values not bit-exact");
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-9, std::ios::end);
    char b = 0;
    f.read(&b, 1);
    f.seekp(-9, std::ios::end);
    b = char(b ^ 0x20);
    f.write(&b, 1);
    f.close();
    bool threw = false;
    try {
      BackboneModel m3 = make_backbone_model(cfg);
      load_checkpoint(path, m3.ps);
    } catch (const Error&) {
      threw = true;
    }
    require(threw, "corruption not detected");
  });

  fs::remove_all(work);
  std::printf("selftest: %s\n", failures == 0 ? "all checks passed"
                                              : "FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pressure-guided motion reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out;
  uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "run configuration (JSON)")
      ->expected(1);
  auto* seed_opt =
      app.add_option("--seed", seed, "override the command's seed");
  app.add_option("--out", out, "output directory");

  auto* gen = app.add_subcommand("gen-data", "build the synthetic dataset");
  auto* ptraj = app.add_subcommand("pretrain-traj",
                                   "pretrain the trajectory extractor");
  auto* pbb = app.add_subcommand("pretrain-backbone",
                                 "pretrain the text-to-motion denoiser");
  auto* train = app.add_subcommand("train", "train the control branch");
  auto* sample = app.add_subcommand("sample", "reconstruct a split");
  auto* eval = app.add_subcommand("eval", "score a checkpoint");
  app.add_subcommand("selftest", "run built-in invariant checks");

  std::string mode = "full", backbone_ckpt, traj_ckpt, model_ckpt,
              evaluator_ckpt, split = "val";
  train->add_option("--mode", mode, "full | text_only | regression");
  train->add_option("--backbone", backbone_ckpt, "pretrained denoiser")
      ->required();
  train->add_option("--traj", traj_ckpt, "trajectory extractor checkpoint");
  sample->add_option("--ckpt", model_ckpt, "trained model")->required();
  sample->add_option("--traj", traj_ckpt, "trajectory extractor checkpoint");
  sample->add_option("--split", split, "train | val | test");
  eval->add_option("--ckpt", model_ckpt, "trained model")->required();
  eval->add_option("--evaluator", evaluator_ckpt,
                   "evaluator checkpoint (trained when absent)");
  eval->add_option("--traj", traj_ckpt, "trajectory extractor checkpoint");
  eval->add_option("--split", split, "train | val | test");

  try {
    app.parse(argc, argv);
    seed_set = seed_opt->count() > 0;

    RunConfig cfg = load_or_default(config_path);
    if (gen->parsed()) {
      if (seed_set) cfg.data.seed = seed;
      cmd_gen_data(cfg, out.empty() ? cfg.data.root : out);
    } else if (ptraj->parsed()) {
      if (seed_set) cfg.training.seed = seed;
      cmd_pretrain_traj(cfg, out.empty() ? default_out("traj") : out);
    } else if (pbb->parsed()) {
      if (seed_set) cfg.training.seed = seed;
      cmd_pretrain_backbone(cfg,
                            out.empty() ? default_out("backbone") : out);
    } else if (train->parsed()) {
      if (seed_set) cfg.training.seed = seed;
      cfg.training.mode = mode;
      require(mode == "full" || mode == "text_only" || mode == "regression",
              "train: unknown mode '" + mode + "'");
      cmd_train(cfg, out.empty() ? default_out("train") : out, backbone_ckpt,
                traj_ckpt);
    } else if (sample->parsed()) {
      if (seed_set) cfg.sampling.seed = seed;
      cmd_sample(cfg, out.empty() ? default_out("sample") : out, model_ckpt,
                 traj_ckpt, split);
    } else if (eval->parsed()) {
      if (seed_set) cfg.sampling.seed = seed;
      cmd_eval(cfg, out.empty() ? default_out("eval") : out, model_ckpt,
               evaluator_ckpt, traj_ckpt, split);
    } else {
      return cmd_selftest();
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
