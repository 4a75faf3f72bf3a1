#pragma once

// Transformer denoiser over motion-feature frames and the DDPM sampler.
// The network predicts the clean sequence x0 from (x_t, t, prompt).

#include <functional>
#include <string>
#include <vector>

#include "pmotion/nn.hpp"
#include "pmotion/schedule.hpp"

namespace pmotion {

struct ModelDims {
  Eigen::Index latent = 512;
  int heads = 4;
  Eigen::Index ffn = 1024;
  int layers = 8;
  Eigen::Index features = kFeatureDim;
  Eigen::Index max_frames = kMaxFrames;
  int vocab = 4096;
  int timesteps = 1000;
};

// Token 0 carries the timestep + prompt condition; tokens 1..N are frames.
template <class S>
struct Backbone {
  ModelDims dims;
  Mat<S> time_table, pos_table;
  nn::Linear<S> in_proj, time_proj, out_proj;
  std::vector<nn::TransformerLayer<S>> layers;
  nn::LayerNorm<S> ln_out;

  Backbone() = default;
  Backbone(nn::ParamStore<S>& ps, const std::string& prefix,
           const ModelDims& d, Rng& rng)
      : dims(d) {
    time_table = nn::sinusoid_table<S>(d.timesteps + 1, d.latent);
    pos_table = nn::sinusoid_table<S>(d.max_frames, d.latent);
    in_proj = nn::Linear<S>(ps, prefix + ".in", d.features, d.latent, rng);
    time_proj = nn::Linear<S>(ps, prefix + ".time", d.latent, d.latent, rng);
    out_proj = nn::Linear<S>(ps, prefix + ".out", d.latent, d.features, rng);
    layers.reserve(size_t(d.layers));
    for (int i = 0; i < d.layers; ++i)
      layers.emplace_back(ps, prefix + ".layer" + std::to_string(i),
                          d.latent, d.heads, d.ffn, rng);
    ln_out = nn::LayerNorm<S>(ps, prefix + ".ln_out", d.latent);
  }

  // hiddens, when given, receives the (N+1, latent) output of every layer;
  // token_bias, when given, is added to the frame tokens before the stack.
  ad::Tensor<S> forward(const ad::Tensor<S>& x, int t,
                        const ad::Tensor<S>& text,
                        std::vector<ad::Tensor<S>>* hiddens = nullptr,
                        const ad::Tensor<S>* token_bias = nullptr) const {
    const Eigen::Index n = x.rows();
    require(n >= 1 && n <= dims.max_frames, "backbone: frame count");
    require(t >= 1 && t <= dims.timesteps, "backbone: timestep");
    ad::Tensor<S> tokens = ad::add(
        in_proj.forward(x),
        ad::Tensor<S>::constant(pos_table.topRows(n)));
    if (token_bias) tokens = ad::add(tokens, *token_bias);
    ad::Tensor<S> cond = ad::add(
        time_proj.forward(ad::Tensor<S>::constant(time_table.row(t))), text);
    ad::Tensor<S> seq =
        ad::concat_rows(std::vector<ad::Tensor<S>>{cond, tokens});
    for (const auto& layer : layers) {
      seq = layer.forward(seq);
      if (hiddens) hiddens->push_back(seq);
    }
    return out_proj.forward(ad::slice_rows(ln_out.forward(seq), 1, n));
  }
};

// Denoisers map (x_t, t) to a predicted x0; classifier-free guidance mixes
// the conditional and unconditional predictions in x0 space.
using DenoiseFn = std::function<MatF(const MatF& x_t, int t)>;

inline MatF guided_x0(const MatF& x_t, int t, const DenoiseFn& cond,
                      const DenoiseFn& uncond, double cfg) {
  MatF x0 = cond(x_t, t);
  if (cfg != 1.0) {
    MatF base = uncond(x_t, t);
    x0 = base + float(cfg) * (x0 - base);
  }
  return x0;
}

inline MatF ddpm_sample(const NoiseSchedule& sched, Eigen::Index frames,
                        Eigen::Index dim, const DenoiseFn& cond,
                        const DenoiseFn& uncond, double cfg, Rng& rng) {
  require(cfg == 1.0 || bool(uncond),
          "ddpm_sample: guidance needs an unconditional denoiser");
  MatF x = sample_noise_like(frames, dim, rng);
  for (int t = sched.steps(); t >= 1; --t) {
    MatF x0 = guided_x0(x, t, cond, uncond, cfg);
    MatF mean = float(sched.c_x0(t)) * x0 + float(sched.c_xt(t)) * x;
    if (t > 1)
      x = mean + float(std::sqrt(sched.post_var(t))) *
                     sample_noise_like(frames, dim, rng);
    else
      x = mean;
  }
  return x;
}

}  // namespace pmotion
