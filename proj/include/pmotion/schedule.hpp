#pragma once

#include "pmotion/common.hpp"
#include "pmotion/rng.hpp"

namespace pmotion {

// Linear-beta DDPM schedule, 1-indexed timesteps t in [1, T].
struct NoiseSchedule {
  VecD betas, alphas, alpha_bar;
  VecD posterior_var;   // var of q(x_{t-1} | x_t, x0); index 0 -> t=1
  VecD mean_coef_x0;    // posterior mean = c0 * x0 + c1 * x_t
  VecD mean_coef_xt;

  int steps() const { return int(betas.size()); }
  double beta(int t) const { return betas[t - 1]; }
  double alpha(int t) const { return alphas[t - 1]; }
  double abar(int t) const { return alpha_bar[t - 1]; }
  double post_var(int t) const { return posterior_var[t - 1]; }
  double c_x0(int t) const { return mean_coef_x0[t - 1]; }
  double c_xt(int t) const { return mean_coef_xt[t - 1]; }
};

NoiseSchedule make_schedule(int steps, double beta_start = 1e-4,
                            double beta_end = 0.02);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
MatF q_sample(const NoiseSchedule& sched, const MatF& x0, int t,
              const MatF& eps);

MatF sample_noise_like(int rows, int cols, Rng& rng);

// Residual scale for guided denoising at step t with latent width `dim`:
// 20 * min(post_var, 0.01) / dim.
double control_strength(const NoiseSchedule& sched, int t, int dim);

}  // namespace pmotion
