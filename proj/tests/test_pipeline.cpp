#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pmotion/pipeline.hpp"
#include "pmotion/skeleton.hpp"
#include "pmotion/synth.hpp"

using namespace pmotion;
namespace fs = std::filesystem;

namespace {

const fs::path& data_root() {
  static fs::path root = [] {
    fs::path dir = fs::temp_directory_path() / "pmotion_test_pipeset";
    fs::remove_all(dir);
    DataConfig dc;
    dc.root = dir.string();
    dc.sequences = 6;
    dc.frames_min = 40;
    dc.frames_max = 44;
    dc.mat_height = 64;
    dc.mat_width = 48;
    dc.mat_scale = 0.04;
    dc.seed = 3131;
    build_dataset(dc);
    return dir;
  }();
  return root;
}

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.data.root = data_root().string();
  cfg.data.sequences = 6;
  cfg.data.frames_min = 40;
  cfg.data.frames_max = 44;
  cfg.data.mat_height = 64;
  cfg.data.mat_width = 48;
  cfg.data.mat_scale = 0.04;
  cfg.data.seed = 3131;
  cfg.model.latent = 16;
  cfg.model.heads = 2;
  cfg.model.ffn = 32;
  cfg.model.layers = 2;
  cfg.model.vocab = 64;
  cfg.model.timesteps = 6;
  cfg.model.shift_dim = 12;
  cfg.model.traj_hidden = 12;
  cfg.model.grid_channels = 4;
  cfg.eval.embed_dim = 16;
  return cfg;
}

bool bitwise_equal(const MatF& a, const MatF& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(float) * size_t(a.size())) == 0;
}

SampleControls make_controls(const StoredSequence& s) {
  Skeleton skel = make_skeleton(s.recipe.height_scale);
  MatD traj = extract_trajectory_targets(s.pose, skel);
  return SampleControls{traj.cast<float>(), s.pressure};
}

}  // namespace

TEST_CASE("pipeline: untrained branch leaves sampling bit-identical") {
  RunConfig cfg = tiny_cfg();
  GuidedModel model = make_guided_model(cfg);
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  auto seqs = load_split(data_root().string(), "train");
  SampleControls ctl = make_controls(seqs[0]);
  const int n = seqs[0].pose.frames();

  SamplingConfig scfg;
  scfg.cfg = 2.0;
  for (uint64_t seed : {11ull, 12ull, 13ull, 14ull, 15ull}) {
    Rng ra(seed);
    MatF with = sample_guided(model, sched, n, seqs[0].captions[0], &ctl,
                              scfg, ra);
    Rng rb(seed);
    MatF without = sample_guided(model, sched, n, seqs[0].captions[0],
                                 nullptr, scfg, rb);
    CHECK(bitwise_equal(with, without));
  }

  SUBCASE("tau-weighted strength is also exact") {
    scfg.control_strength = "tau_formula";
    Rng ra(44);
    MatF with = sample_guided(model, sched, n, seqs[0].captions[0], &ctl,
                              scfg, ra);
    Rng rb(44);
    MatF without = sample_guided(model, sched, n, seqs[0].captions[0],
                                 nullptr, scfg, rb);
    CHECK(bitwise_equal(with, without));
  }
}

TEST_CASE("pipeline: sampling is seed-deterministic and seed-sensitive") {
  RunConfig cfg = tiny_cfg();
  GuidedModel model = make_guided_model(cfg);
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  auto seqs = load_split(data_root().string(), "train");
  SampleControls ctl = make_controls(seqs[1]);
  const int n = seqs[1].pose.frames();

  SamplingConfig scfg;
  scfg.cfg = 2.0;
  Rng ra(7), rb(7), rc(8);
  MatF a = sample_guided(model, sched, n, "walk", &ctl, scfg, ra);
  MatF b = sample_guided(model, sched, n, "walk", &ctl, scfg, rb);
  MatF c = sample_guided(model, sched, n, "walk", &ctl, scfg, rc);
  REQUIRE(a.rows() == n);
  REQUIRE(a.cols() == Eigen::Index(kFeatureDim));
  CHECK(bitwise_equal(a, b));
  CHECK_FALSE(bitwise_equal(a, c));

  SUBCASE("bad strength name rejected") {
    scfg.control_strength = "linear";
    Rng r(1);
    CHECK_THROWS_WITH_AS(
        sample_guided(model, sched, n, "walk", &ctl, scfg, r),
        doctest::Contains("control strength"), Error);
  }
  SUBCASE("control shape enforced") {
    SampleControls bad = ctl;
    bad.traj = bad.traj.topRows(n - 1).eval();
    Rng r(1);
    CHECK_THROWS_WITH_AS(
        sample_guided(model, sched, n, "walk", &bad, scfg, r),
        doctest::Contains("trajectory control"), Error);
  }
}

TEST_CASE("pipeline: nonzero branch responds to controls and strength") {
  RunConfig cfg = tiny_cfg();
  GuidedModel model = make_guided_model(cfg);
  auto* res = model.ps.find("cb.res.W");
  REQUIRE(res != nullptr);
  res->t.value_mut().setConstant(0.05f);

  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  auto seqs = load_split(data_root().string(), "train");
  SampleControls ctl = make_controls(seqs[0]);
  const int n = seqs[0].pose.frames();

  SamplingConfig unit;
  unit.cfg = 1.0;
  SamplingConfig tau = unit;
  tau.control_strength = "tau_formula";

  Rng r1(5), r2(5), r3(5);
  MatF with_unit = sample_guided(model, sched, n, "walk", &ctl, unit, r1);
  MatF with_tau = sample_guided(model, sched, n, "walk", &ctl, tau, r2);
  MatF without = sample_guided(model, sched, n, "walk", nullptr, unit, r3);
  CHECK_FALSE(bitwise_equal(with_unit, without));
  CHECK_FALSE(bitwise_equal(with_unit, with_tau));
}

TEST_CASE("pipeline: regression sampling is one deterministic pass") {
  RunConfig cfg = tiny_cfg();
  GuidedModel model = make_guided_model(cfg);
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  auto seqs = load_split(data_root().string(), "train");
  SampleControls ctl = make_controls(seqs[2]);
  const int n = seqs[2].pose.frames();

  Rng ra(3), rb(3);
  MatF a = sample_regression(model, sched, n, "sway", &ctl, ra);
  MatF b = sample_regression(model, sched, n, "sway", &ctl, rb);
  REQUIRE(a.rows() == n);
  REQUIRE(a.cols() == Eigen::Index(kFeatureDim));
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("pipeline: ground-truth report has exact zeros") {
  RunConfig cfg = tiny_cfg();
  EvaluatorModel ev = make_evaluator(cfg);
  auto seqs = load_split(data_root().string(), "train");
  REQUIRE(seqs.size() >= 4);

  std::vector<PoseSequence> preds;
  for (const StoredSequence& s : seqs) preds.push_back(s.pose);
  MetricReport r = score_set(ev, seqs, preds, cfg.eval.rprecision_pool);

  // Stored joints are float32 on disk; recovery recomputes in double.
  CHECK(r.mpjpe_m < 1e-6);
  CHECK(r.lmpjpe_m < 1e-6);
  CHECK(r.traj_error_ratio == 0.0);
  CHECK(r.foot_skating == 0.0);
  CHECK(r.fid < 1e-6);
  CHECK(r.cop_error_m >= 0.0);
  CHECK(r.cop_error_m < 0.25);
  CHECK(r.r_precision_top3 >= 0.0);
  CHECK(r.r_precision_top3 <= 1.0);
}

TEST_CASE("pipeline: evaluate_set covers the three modes") {
  RunConfig cfg = tiny_cfg();
  GuidedModel model = make_guided_model(cfg);
  EvaluatorModel ev = make_evaluator(cfg);
  NoiseSchedule sched = make_schedule(cfg.model.timesteps,
                                      cfg.model.beta_start,
                                      cfg.model.beta_end);
  auto seqs = load_split(data_root().string(), "train");

  SamplingConfig scfg;
  scfg.cfg = 2.0;
  for (const char* mode : {"full", "text_only", "regression"}) {
    EvalOptions opt;
    opt.mode = mode;
    MetricReport r = evaluate_set(model, ev, sched, seqs, opt, scfg);
    CHECK(std::isfinite(r.fid));
    CHECK(r.fid >= 0.0);
    CHECK(r.foot_skating >= 0.0);
    CHECK(r.foot_skating <= 1.0);
    CHECK(r.traj_error_ratio >= 0.0);
    CHECK(r.traj_error_ratio <= 1.0);
    CHECK(r.r_precision_top3 >= 0.0);
    CHECK(r.r_precision_top3 <= 1.0);
    CHECK(r.mpjpe_m > 0.0);
    CHECK(std::isfinite(r.cop_error_m));
  }

  SUBCASE("unknown mode rejected") {
    EvalOptions opt;
    opt.mode = "hybrid";
    CHECK_THROWS_WITH_AS(evaluate_set(model, ev, sched, seqs, opt, scfg),
                         doctest::Contains("unknown mode"), Error);
  }

  SUBCASE("reconstruction is deterministic in the sampling seed") {
    EvalOptions opt;
    auto p1 = reconstruct_set(model, sched, seqs, opt, scfg);
    auto p2 = reconstruct_set(model, sched, seqs, opt, scfg);
    REQUIRE(p1.size() == p2.size());
    for (size_t i = 0; i < p1.size(); ++i)
      CHECK(bitwise_equal(p1[i].data, p2[i].data));
  }
}

TEST_CASE("pipeline: joint export round-trips at print precision") {
  auto seqs = load_split(data_root().string(), "train");
  const JointSequence& joints = seqs[0].joints;

  fs::path path = fs::temp_directory_path() / "pmotion_joints.csv";
  export_joints(joints, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string tok;
    int cols = 0;
    while (std::getline(ss, tok, ',')) {
      size_t dot = tok.find('.');
      REQUIRE(dot != std::string::npos);
      CHECK(tok.size() - dot - 1 == 6);
      CHECK(std::abs(std::stod(tok) - joints.pos(rows, cols)) <= 5e-7);
      ++cols;
    }
    CHECK(cols == 3 * kJoints);
    ++rows;
  }
  CHECK(rows == joints.frames());

  SUBCASE("unwritable destination rejected") {
    CHECK_THROWS_WITH_AS(
        export_joints(joints, fs::path("/nonexistent/dir/j.csv")),
        doctest::Contains("cannot write"), Error);
  }
}
