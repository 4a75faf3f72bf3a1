#include <doctest.h>

#include <cmath>

#include "pmotion/schedule.hpp"

using namespace pmotion;

TEST_CASE("schedule: default linear betas reproduce the standard table") {
  NoiseSchedule s = make_schedule(1000);
  CHECK(s.steps() == 1000);
  CHECK(s.beta(1) == doctest::Approx(1e-4));
  CHECK(s.beta(1000) == doctest::Approx(0.02));
  CHECK(s.abar(1) == doctest::Approx(0.9999));
  CHECK(s.abar(1000) < 1e-4);
  CHECK(s.abar(1000) > 1e-5);
  for (int t = 2; t <= 1000; ++t) {
    CHECK(s.abar(t) < s.abar(t - 1));
    CHECK(s.alpha(t) == doctest::Approx(1.0 - s.beta(t)));
  }
}

TEST_CASE("schedule: posterior mean coefficients satisfy the DDPM identity") {
  for (auto [steps, b0, b1] :
       {std::tuple{1000, 1e-4, 0.02}, std::tuple{100, 1e-4, 0.2}}) {
    NoiseSchedule s = make_schedule(steps, b0, b1);
    for (int t = 1; t <= steps; ++t) {
      const double abar_prev = t == 1 ? 1.0 : s.abar(t - 1);
      // Noise-free posterior mean must step x0 onto the t-1 marginal.
      CHECK(s.c_x0(t) + s.c_xt(t) * std::sqrt(s.abar(t)) ==
            doctest::Approx(std::sqrt(abar_prev)).epsilon(1e-12));
      // And a clean x_t = sqrt(abar) x0 must keep the same x0 fixed point:
      // c0 + c1*sqrt(abar_t) == sqrt(abar_{t-1}) covers both.
      CHECK(s.post_var(t) >= 0.0);
      CHECK(s.post_var(t) <= s.beta(t) + 1e-15);
    }
    CHECK(s.post_var(1) == doctest::Approx(s.beta(1)));
    CHECK(s.c_x0(1) == doctest::Approx(1.0));
    CHECK(s.c_xt(1) == doctest::Approx(0.0));
  }
}

TEST_CASE("schedule: desk-scale schedule still destroys the signal") {
  NoiseSchedule s = make_schedule(100, 1e-4, 0.2);
  CHECK(s.abar(100) < 1e-3);
}

TEST_CASE("schedule: q_sample mixes signal and noise by sqrt weights") {
  NoiseSchedule s = make_schedule(10, 0.1, 0.1);
  MatF x0 = MatF::Constant(2, 3, 1.0f);
  MatF eps = MatF::Constant(2, 3, -0.5f);
  const int t = 4;
  MatF xt = q_sample(s, x0, t, eps);
  const double a = std::sqrt(s.abar(t));
  const double b = std::sqrt(1.0 - s.abar(t));
  CHECK(xt(0, 0) == doctest::Approx(a - 0.5 * b).epsilon(1e-6));
  CHECK(s.abar(t) == doctest::Approx(std::pow(0.9, t)).epsilon(1e-12));
  MatF bad = MatF::Zero(1, 3);
  CHECK_THROWS_AS(q_sample(s, x0, t, bad), Error);
  CHECK_THROWS_AS(q_sample(s, x0, 0, eps), Error);
  CHECK_THROWS_AS(q_sample(s, x0, 11, eps), Error);
}

TEST_CASE("schedule: control strength saturates at the variance cap") {
  NoiseSchedule s = make_schedule(1000);
  // Late steps have posterior variance above the 0.01 cap.
  CHECK(s.post_var(1000) > 0.01);
  CHECK(control_strength(s, 1000, 512) == doctest::Approx(0.2 / 512));
  // Early steps fall below the cap and scale linearly.
  CHECK(s.post_var(2) < 0.01);
  CHECK(control_strength(s, 2, 512) ==
        doctest::Approx(20.0 * s.post_var(2) / 512));
  CHECK(control_strength(s, 2, 512) < control_strength(s, 1000, 512));
}

TEST_CASE("schedule: noise sampler is seeded and shaped") {
  Rng a(5), b(5), c(6);
  MatF m1 = sample_noise_like(3, 4, a);
  MatF m2 = sample_noise_like(3, 4, b);
  MatF m3 = sample_noise_like(3, 4, c);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((m1 - m3).cwiseAbs().maxCoeff() > 0.0f);
  CHECK(m1.rows() == 3);
  CHECK(m1.cols() == 4);
}
