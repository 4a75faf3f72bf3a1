#pragma once

// Guidance branch: a trainable copy of the denoiser trunk reads the
// trajectory tokens, an adapter stream attends over shift tokens, and a
// zero-initialized head emits a residual added to the frozen prediction.

#include <string>
#include <vector>

#include "pmotion/diffusion.hpp"

namespace pmotion {

template <class S>
struct ControlBlock {
  nn::LayerNorm<S> ln1, ln2, ln3;
  nn::Mha<S> self_attn, cross_attn;
  nn::Ffn<S> ffn;
  nn::Linear<S> inject;

  ControlBlock() = default;
  ControlBlock(nn::ParamStore<S>& ps, const std::string& prefix,
               const ModelDims& d, Rng& rng) {
    ln1 = nn::LayerNorm<S>(ps, prefix + ".ln1", d.latent);
    ln2 = nn::LayerNorm<S>(ps, prefix + ".ln2", d.latent);
    ln3 = nn::LayerNorm<S>(ps, prefix + ".ln3", d.latent);
    self_attn = nn::Mha<S>(ps, prefix + ".self", d.latent, d.heads, rng);
    cross_attn = nn::Mha<S>(ps, prefix + ".cross", d.latent, d.heads, rng);
    ffn = nn::Ffn<S>(ps, prefix + ".ffn", d.latent, d.ffn, rng);
    inject = nn::Linear<S>(ps, prefix + ".inject", d.latent, d.latent, rng,
                           /*zero_init=*/true);
  }
};

template <class S>
struct ControlBranch {
  ModelDims dims;
  Eigen::Index shift_dim = 256;
  std::string prefix;
  Backbone<S> trunk;
  nn::Linear<S> traj_proj, shift_proj, enter, res_out;
  std::vector<ControlBlock<S>> blocks;

  ControlBranch() = default;
  ControlBranch(nn::ParamStore<S>& ps, const std::string& prefix_,
                const ModelDims& d, Eigen::Index shift_dim_, Rng& rng)
      : dims(d), shift_dim(shift_dim_), prefix(prefix_) {
    trunk = Backbone<S>(ps, prefix + ".trunk", d, rng);
    traj_proj = nn::Linear<S>(ps, prefix + ".traj", kTrajDim, d.latent, rng);
    shift_proj =
        nn::Linear<S>(ps, prefix + ".shift", shift_dim, d.latent, rng);
    enter = nn::Linear<S>(ps, prefix + ".enter", d.latent, d.latent, rng,
                          /*zero_init=*/true);
    blocks.reserve(size_t(d.layers - 1));
    for (int k = 0; k + 1 < d.layers; ++k)
      blocks.emplace_back(ps, prefix + ".block" + std::to_string(k), d, rng);
    res_out = nn::Linear<S>(ps, prefix + ".res", d.latent, d.features, rng,
                            /*zero_init=*/true);
  }

  // Residual x0 prediction from (x_t, t, prompt, trajectory, shift tokens).
  ad::Tensor<S> forward(const ad::Tensor<S>& x, int t,
                        const ad::Tensor<S>& text, const ad::Tensor<S>& traj,
                        const ad::Tensor<S>& shift) const {
    require(traj.rows() == x.rows() && traj.cols() == kTrajDim,
            "control: trajectory shape");
    require(shift.rows() == x.rows() && shift.cols() == shift_dim,
            "control: shift token shape");
    ad::Tensor<S> traj_tok = traj_proj.forward(traj);
    std::vector<ad::Tensor<S>> hs;
    trunk.forward(x, t, text, &hs, &traj_tok);
    ad::Tensor<S> kv = ad::concat_rows(
        std::vector<ad::Tensor<S>>{shift_proj.forward(shift), text});
    ad::Tensor<S> a = enter.forward(hs[0]);
    for (size_t k = 0; k < blocks.size(); ++k) {
      const auto& blk = blocks[k];
      ad::Tensor<S> n1 = blk.ln1.forward(a);
      a = ad::add(a, blk.self_attn.forward(n1, n1));
      a = ad::add(a, blk.cross_attn.forward(blk.ln2.forward(a), kv));
      a = ad::add(a, blk.ffn.forward(blk.ln3.forward(a)));
      a = ad::add(a, blk.inject.forward(hs[k + 1]));
    }
    return res_out.forward(ad::slice_rows(a, 1, x.rows()));
  }
};

}  // namespace pmotion
