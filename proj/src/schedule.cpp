#include "pmotion/schedule.hpp"

#include <cmath>

namespace pmotion {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  require(steps >= 1, "schedule: steps must be positive");
  require(beta_start > 0 && beta_end < 1 && beta_start <= beta_end,
          "schedule: invalid beta range");
  NoiseSchedule s;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bar.resize(steps);
  s.posterior_var.resize(steps);
  s.mean_coef_x0.resize(steps);
  s.mean_coef_xt.resize(steps);
  double abar = 1.0, abar_prev = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double b =
        steps == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) * i / (steps - 1);
    abar_prev = abar;
    abar *= 1.0 - b;
    s.betas[i] = b;
    s.alphas[i] = 1.0 - b;
    s.alpha_bar[i] = abar;
    s.posterior_var[i] = i == 0 ? b : b * (1.0 - abar_prev) / (1.0 - abar);
    s.mean_coef_x0[i] = std::sqrt(abar_prev) * b / (1.0 - abar);
    s.mean_coef_xt[i] =
        std::sqrt(1.0 - b) * (1.0 - abar_prev) / (1.0 - abar);
  }
  return s;
}

MatF q_sample(const NoiseSchedule& sched, const MatF& x0, int t,
              const MatF& eps) {
  require(t >= 1 && t <= sched.steps(), "q_sample: t out of range");
  require(x0.rows() == eps.rows() && x0.cols() == eps.cols(),
          "q_sample: shape mismatch");
  const float a = float(std::sqrt(sched.abar(t)));
  const float b = float(std::sqrt(1.0 - sched.abar(t)));
  return a * x0 + b * eps;
}

MatF sample_noise_like(int rows, int cols, Rng& rng) {
  MatF m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = float(rng.normal());
  return m;
}

double control_strength(const NoiseSchedule& sched, int t, int dim) {
  require(dim > 0, "control strength: bad dim");
  return 20.0 * std::min(sched.post_var(t), 0.01) / dim;
}

}  // namespace pmotion
