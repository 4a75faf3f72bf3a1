#include "pmotion/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

namespace pmotion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_f32(const fs::path& path, const float* data, size_t count) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "dataset: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data),
            std::streamsize(count * sizeof(float)));
  require(out.good(), "dataset: short write to " + path.string());
}

std::vector<float> read_f32(const fs::path& path, size_t expect) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), "dataset: cannot open " + path.string());
  size_t bytes = size_t(in.tellg());
  require(bytes == expect * sizeof(float),
          "dataset: " + path.string() + " holds " + std::to_string(bytes) +
              " bytes, expected " + std::to_string(expect * sizeof(float)));
  std::vector<float> v(expect);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(bytes));
  require(in.good(), "dataset: short read from " + path.string());
  return v;
}

std::string seq_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "seq_%05d", index);
  return buf;
}

}  // namespace

SplitSizes split_sizes(int n) {
  require(n >= 1, "split_sizes: need at least one sequence");
  SplitSizes s;
  s.train = int(std::lround(0.8 * n));
  s.val = int(std::lround(0.15 * n));
  if (s.train + s.val > n) s.val = n - s.train;
  s.test = n - s.train - s.val;
  return s;
}

void save_sequence(const fs::path& dir, const SequenceRecord& rec,
                   const MatSpec& mat) {
  fs::create_directories(dir);
  const int n = rec.pose.frames();
  require(n >= 1, "save_sequence: empty record");
  require(rec.joints.frames() == n && rec.pressure.frames() == n,
          "save_sequence: stream lengths disagree");

  write_f32(dir / "motion.f32", rec.pose.data.data(),
            size_t(rec.pose.data.size()));

  MatF joints32 = rec.joints.pos.cast<float>();
  write_f32(dir / "joints.f32", joints32.data(), size_t(joints32.size()));

  std::vector<float> px;
  px.reserve(size_t(n) * size_t(rec.pressure.height) *
             size_t(rec.pressure.width));
  for (const MatF& m : rec.pressure.maps)
    px.insert(px.end(), m.data(), m.data() + m.size());
  write_f32(dir / "pressure.f32", px.data(), px.size());

  json meta;
  meta["kind"] = kind_name(rec.recipe.kind);
  meta["frames"] = n;
  meta["seed"] = rec.recipe.seed;
  meta["mass_kg"] = rec.recipe.mass_kg;
  meta["height_scale"] = rec.recipe.height_scale;
  meta["mat"] = {{"height", rec.pressure.height},
                 {"width", rec.pressure.width},
                 {"scale", mat.scale},
                 {"footprint_sigma", mat.footprint_sigma},
                 {"support_temp", mat.support_temp}};
  meta["calibration"] = {{"offset_x", rec.calib.offset.x()},
                         {"offset_z", rec.calib.offset.y()},
                         {"scale_x", rec.calib.scale.x()},
                         {"scale_z", rec.calib.scale.y()}};
  meta["captions"] = rec.captions;
  meta["clip_warnings"] = rec.clip_warnings;
  meta["fps"] = int(kFps);
  meta["feature_dim"] = kFeatureDim;
  meta["joint_dim"] = 3 * kJoints;

  std::ofstream out(dir / "meta.json");
  require(out.good(), "dataset: cannot write meta in " + dir.string());
  out << meta.dump(2) << "\n";
}

StoredSequence load_sequence(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  require(in.good(), "dataset: cannot open meta in " + dir.string());
  json meta;
  try {
    in >> meta;
  } catch (const std::exception& e) {
    fail("dataset: invalid meta.json in " + dir.string() + ": " + e.what());
  }

  StoredSequence s;
  s.recipe.kind = kind_from_name(meta.at("kind").get<std::string>());
  s.recipe.frames = meta.at("frames").get<int>();
  s.recipe.seed = meta.at("seed").get<uint64_t>();
  s.recipe.mass_kg = meta.at("mass_kg").get<double>();
  s.recipe.height_scale = meta.at("height_scale").get<double>();
  const json& jm = meta.at("mat");
  s.mat.height = jm.at("height").get<int>();
  s.mat.width = jm.at("width").get<int>();
  s.mat.scale = jm.at("scale").get<double>();
  s.mat.footprint_sigma = jm.at("footprint_sigma").get<double>();
  s.mat.support_temp = jm.at("support_temp").get<double>();
  const json& jc = meta.at("calibration");
  s.calib.offset = Vector2d(jc.at("offset_x").get<double>(),
                            jc.at("offset_z").get<double>());
  s.calib.scale = Vector2d(jc.at("scale_x").get<double>(),
                           jc.at("scale_z").get<double>());
  const json& jcap = meta.at("captions");
  require(jcap.is_array() && jcap.size() == s.captions.size(),
          "dataset: caption list malformed in " + dir.string());
  for (size_t i = 0; i < s.captions.size(); ++i)
    s.captions[i] = jcap.at(i).get<std::string>();
  s.clip_warnings = meta.at("clip_warnings").get<int>();
  require(meta.at("fps").get<int>() == kFps,
          "dataset: unexpected fps in " + dir.string());

  const int n = s.recipe.frames;
  require(n >= 1 && n <= kMaxFrames, "dataset: bad frame count in meta");

  std::vector<float> motion =
      read_f32(dir / "motion.f32", size_t(n) * kFeatureDim);
  s.pose.data = Eigen::Map<const MatF>(motion.data(), n, kFeatureDim);

  std::vector<float> joints =
      read_f32(dir / "joints.f32", size_t(n) * 3 * kJoints);
  s.joints.pos =
      Eigen::Map<const MatF>(joints.data(), n, 3 * kJoints).cast<double>();

  size_t px = size_t(s.mat.height) * size_t(s.mat.width);
  std::vector<float> pressure =
      read_f32(dir / "pressure.f32", size_t(n) * px);
  s.pressure.height = s.mat.height;
  s.pressure.width = s.mat.width;
  s.pressure.maps.reserve(size_t(n));
  for (int f = 0; f < n; ++f)
    s.pressure.maps.push_back(Eigen::Map<const MatF>(
        pressure.data() + size_t(f) * px, s.mat.height, s.mat.width));
  return s;
}

BuildReport build_dataset(const DataConfig& cfg) {
  const fs::path root = cfg.root;
  require(!fs::exists(root) || fs::is_directory(root),
          "dataset: root exists and is not a directory");
  for (const char* split : {"train", "val", "test"})
    require(!fs::exists(root / split),
            "dataset: split directory already exists under " + root.string());

  MatSpec mat;
  mat.height = cfg.mat_height;
  mat.width = cfg.mat_width;
  mat.scale = cfg.mat_scale;
  mat.footprint_sigma = cfg.footprint_sigma;

  constexpr std::array<MotionKind, 6> kinds = {
      MotionKind::Stand, MotionKind::Sway,  MotionKind::Walk,
      MotionKind::Turn,  MotionKind::Jump,  MotionKind::Squat};

  SplitSizes sizes = split_sizes(cfg.sequences);
  auto split_of = [&](int base) {
    if (base < sizes.train) return "train";
    if (base < sizes.train + sizes.val) return "val";
    return "test";
  };

  BuildReport report;
  report.bases = sizes;
  int counter = 0;
  for (int i = 0; i < cfg.sequences; ++i) {
    Rng rng(derive_seed(cfg.seed, uint64_t(i)));
    MotionRecipe recipe;
    recipe.kind = kinds[size_t(i) % kinds.size()];
    recipe.frames =
        int(rng.uniform_int(cfg.frames_min, cfg.frames_max));
    recipe.seed = derive_seed(cfg.seed, uint64_t(i), 1);
    recipe.mass_kg = rng.uniform_range(50.0, 90.0);
    recipe.height_scale = rng.uniform_range(0.92, 1.08);

    SequenceRecord rec = generate_record(recipe, mat);
    const char* split = split_of(i);
    save_sequence(root / split / seq_name(counter++), rec, mat);
    report.clip_warnings += rec.clip_warnings;
    ++report.total;

    for (int a = 0; a < cfg.augment_copies; ++a) {
      Rng arng(derive_seed(cfg.seed, uint64_t(i), uint64_t(2 + a)));
      SequenceRecord aug = augment_record(rec, mat, arng);
      save_sequence(root / split / seq_name(counter++), aug, mat);
      report.clip_warnings += aug.clip_warnings;
      ++report.total;
    }
  }

  json manifest;
  manifest["sequences"] = report.total;
  manifest["bases"] = cfg.sequences;
  manifest["augment_copies"] = cfg.augment_copies;
  manifest["splits"] = {{"train", sizes.train * (1 + cfg.augment_copies)},
                        {"val", sizes.val * (1 + cfg.augment_copies)},
                        {"test", sizes.test * (1 + cfg.augment_copies)}};
  manifest["mat"] = {{"height", mat.height},
                     {"width", mat.width},
                     {"scale", mat.scale}};
  manifest["frames"] = {{"min", cfg.frames_min}, {"max", cfg.frames_max}};
  manifest["seed"] = cfg.seed;
  manifest["clip_warnings"] = report.clip_warnings;
  std::string text = manifest.dump(2) + "\n";
  std::ofstream out(root / "manifest.json");
  require(out.good(), "dataset: cannot write manifest");
  out << text;
  report.manifest_digest = digest_hex(text);
  return report;
}

std::vector<fs::path> list_split(const fs::path& root,
                                 const std::string& split) {
  fs::path dir = root / split;
  require(fs::is_directory(dir), "dataset: missing split " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<StoredSequence> load_split(const fs::path& root,
                                       const std::string& split) {
  std::vector<StoredSequence> out;
  for (const fs::path& dir : list_split(root, split))
    out.push_back(load_sequence(dir));
  return out;
}

}  // namespace pmotion
