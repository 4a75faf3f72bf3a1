#include "pmotion/config.hpp"

#include <fstream>
#include <initializer_list>
#include <json.hpp>

namespace pmotion {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  require(j.is_object(), "config: section '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    require(known,
            "config: unknown key '" + item.key() + "' in section '" +
                section + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_data(const json& j, DataConfig& c) {
  check_keys(j, "data",
             {"root", "sequences", "frames_min", "frames_max", "mat_height",
              "mat_width", "mat_scale", "footprint_sigma", "augment_copies",
              "seed"});
  get(j, "root", c.root);
  get(j, "sequences", c.sequences);
  get(j, "frames_min", c.frames_min);
  get(j, "frames_max", c.frames_max);
  get(j, "mat_height", c.mat_height);
  get(j, "mat_width", c.mat_width);
  get(j, "mat_scale", c.mat_scale);
  get(j, "footprint_sigma", c.footprint_sigma);
  get(j, "augment_copies", c.augment_copies);
  get(j, "seed", c.seed);
}

void parse_model(const json& j, ModelConfig& c) {
  check_keys(j, "model",
             {"latent", "heads", "ffn", "layers", "vocab", "timesteps",
              "beta_start", "beta_end", "shift_dim", "traj_hidden",
              "grid_channels"});
  get(j, "latent", c.latent);
  get(j, "heads", c.heads);
  get(j, "ffn", c.ffn);
  get(j, "layers", c.layers);
  get(j, "vocab", c.vocab);
  get(j, "timesteps", c.timesteps);
  get(j, "beta_start", c.beta_start);
  get(j, "beta_end", c.beta_end);
  get(j, "shift_dim", c.shift_dim);
  get(j, "traj_hidden", c.traj_hidden);
  get(j, "grid_channels", c.grid_channels);
}

void parse_training(const json& j, TrainingConfig& c) {
  check_keys(j, "training",
             {"mode", "lr", "weight_decay", "batch", "steps", "text_dropout",
              "lambda_diff", "lambda_cons", "seed", "log_every",
              "checkpoint_every"});
  get(j, "mode", c.mode);
  get(j, "lr", c.lr);
  get(j, "weight_decay", c.weight_decay);
  get(j, "batch", c.batch);
  get(j, "steps", c.steps);
  get(j, "text_dropout", c.text_dropout);
  get(j, "lambda_diff", c.lambda_diff);
  get(j, "lambda_cons", c.lambda_cons);
  get(j, "seed", c.seed);
  get(j, "log_every", c.log_every);
  get(j, "checkpoint_every", c.checkpoint_every);
}

void parse_sampling(const json& j, SamplingConfig& c) {
  check_keys(j, "sampling", {"cfg", "control_strength", "seed"});
  get(j, "cfg", c.cfg);
  get(j, "control_strength", c.control_strength);
  get(j, "seed", c.seed);
}

void parse_eval(const json& j, EvalConfig& c) {
  check_keys(j, "eval",
             {"rprecision_pool", "contrastive_steps", "contrastive_batch",
              "embed_dim", "lr", "traj_threshold", "seed"});
  get(j, "rprecision_pool", c.rprecision_pool);
  get(j, "contrastive_steps", c.contrastive_steps);
  get(j, "contrastive_batch", c.contrastive_batch);
  get(j, "embed_dim", c.embed_dim);
  get(j, "lr", c.lr);
  get(j, "traj_threshold", c.traj_threshold);
  get(j, "seed", c.seed);
}

void validate(const RunConfig& c) {
  require(c.data.sequences >= 1, "config: data.sequences must be >= 1");
  require(c.data.frames_min >= 40 && c.data.frames_max <= kMaxFrames &&
              c.data.frames_min <= c.data.frames_max,
          "config: frame range must sit inside [40, 196]");
  require(c.data.mat_height >= 8 && c.data.mat_width >= 8,
          "config: mat must be at least 8x8");
  require(c.data.mat_scale > 0, "config: mat_scale must be positive");
  require(c.data.augment_copies >= 0,
          "config: augment_copies must be >= 0");
  require(c.model.latent >= 8 && c.model.latent % c.model.heads == 0,
          "config: latent must be >= 8 and divisible by heads");
  require(c.model.layers >= 2, "config: layers must be >= 2");
  require(c.model.timesteps >= 1, "config: timesteps must be >= 1");
  require(c.model.beta_start > 0 && c.model.beta_end < 1 &&
              c.model.beta_start <= c.model.beta_end,
          "config: betas must satisfy 0 < start <= end < 1");
  require(c.model.grid_channels >= 2 && c.model.grid_channels % 2 == 0,
          "config: grid_channels must be even and >= 2");
  require(c.training.mode == "full" || c.training.mode == "text_only" ||
              c.training.mode == "regression",
          "config: training.mode must be full, text_only or regression");
  require(c.training.lr > 0, "config: lr must be positive");
  require(c.training.batch >= 1, "config: batch must be >= 1");
  require(c.training.steps >= 1, "config: steps must be >= 1");
  require(c.training.text_dropout >= 0 && c.training.text_dropout <= 1,
          "config: text_dropout must lie in [0, 1]");
  require(c.sampling.cfg > 0, "config: sampling.cfg must be positive");
  require(c.sampling.control_strength == "unit" ||
              c.sampling.control_strength == "tau_formula",
          "config: control_strength must be unit or tau_formula");
  require(c.eval.rprecision_pool >= 4,
          "config: rprecision_pool must be >= 4");
  require(c.eval.embed_dim >= 4, "config: eval.embed_dim must be >= 4");
  require(c.eval.lr > 0, "config: eval.lr must be positive");
  require(c.eval.traj_threshold > 0,
          "config: traj_threshold must be positive");
}

}  // namespace

ModelDims RunConfig::dims() const {
  ModelDims d;
  d.latent = model.latent;
  d.heads = model.heads;
  d.ffn = model.ffn;
  d.layers = model.layers;
  d.vocab = model.vocab;
  d.timesteps = model.timesteps;
  d.features = kFeatureDim;
  d.max_frames = kMaxFrames;
  return d;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "<root>", {"data", "model", "training", "sampling", "eval"});
  RunConfig c;
  if (j.contains("data")) parse_data(j.at("data"), c.data);
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  if (j.contains("training")) parse_training(j.at("training"), c.training);
  if (j.contains("sampling")) parse_sampling(j.at("sampling"), c.sampling);
  if (j.contains("eval")) parse_eval(j.at("eval"), c.eval);
  validate(c);
  return c;
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["data"] = {{"root", c.data.root},
               {"sequences", c.data.sequences},
               {"frames_min", c.data.frames_min},
               {"frames_max", c.data.frames_max},
               {"mat_height", c.data.mat_height},
               {"mat_width", c.data.mat_width},
               {"mat_scale", c.data.mat_scale},
               {"footprint_sigma", c.data.footprint_sigma},
               {"augment_copies", c.data.augment_copies},
               {"seed", c.data.seed}};
  j["model"] = {{"latent", c.model.latent},
                {"heads", c.model.heads},
                {"ffn", c.model.ffn},
                {"layers", c.model.layers},
                {"vocab", c.model.vocab},
                {"timesteps", c.model.timesteps},
                {"beta_start", c.model.beta_start},
                {"beta_end", c.model.beta_end},
                {"shift_dim", c.model.shift_dim},
                {"traj_hidden", c.model.traj_hidden},
                {"grid_channels", c.model.grid_channels}};
  j["training"] = {{"mode", c.training.mode},
                   {"lr", c.training.lr},
                   {"weight_decay", c.training.weight_decay},
                   {"batch", c.training.batch},
                   {"steps", c.training.steps},
                   {"text_dropout", c.training.text_dropout},
                   {"lambda_diff", c.training.lambda_diff},
                   {"lambda_cons", c.training.lambda_cons},
                   {"seed", c.training.seed},
                   {"log_every", c.training.log_every},
                   {"checkpoint_every", c.training.checkpoint_every}};
  j["sampling"] = {{"cfg", c.sampling.cfg},
                   {"control_strength", c.sampling.control_strength},
                   {"seed", c.sampling.seed}};
  j["eval"] = {{"rprecision_pool", c.eval.rprecision_pool},
               {"contrastive_steps", c.eval.contrastive_steps},
               {"contrastive_batch", c.eval.contrastive_batch},
               {"embed_dim", c.eval.embed_dim},
               {"lr", c.eval.lr},
               {"traj_threshold", c.eval.traj_threshold},
               {"seed", c.eval.seed}};
  return j.dump(2) + "\n";
}

std::string RunConfig::digest() const { return digest_hex(dump_config(*this)); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "config: cannot write " + path);
  out << dump_config(cfg);
}

}  // namespace pmotion
