#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "pmotion/nn.hpp"

using namespace pmotion;
using T = ad::Tensor<double>;
using gc::gradcheck_store;
using gc::proj;
using gc::random_mat;

TEST_CASE("nn: linear layer gradients") {
  Rng rng(21);
  nn::ParamStore<double> ps;
  nn::Linear<double> lin(ps, "lin", 4, 3, rng);
  auto x = T::param(random_mat(5, 4, rng));
  MatD c = random_mat(5, 3, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(lin.forward(in), c); }, 1e-6);
}

TEST_CASE("nn: feed-forward block gradients") {
  Rng rng(22);
  nn::ParamStore<double> ps;
  nn::Ffn<double> ffn(ps, "ffn", 4, 8, rng);
  auto x = T::param(random_mat(3, 4, rng));
  MatD c = random_mat(3, 4, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(ffn.forward(in), c); });
}

TEST_CASE("nn: self and cross attention gradients") {
  Rng rng(23);
  nn::ParamStore<double> ps;
  nn::Mha<double> attn(ps, "attn", 8, 2, rng);
  auto x = T::param(random_mat(5, 8, rng));
  MatD c = random_mat(5, 8, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(attn.forward(in, in), c); });

  nn::ParamStore<double> ps2;
  nn::Mha<double> cross(ps2, "cross", 8, 2, rng, 6);
  auto kv = T::constant(random_mat(3, 6, rng));
  gradcheck_store(ps2, x,
                  [&](T in) { return proj(cross.forward(in, kv), c); });
}

TEST_CASE("nn: transformer layer gradients") {
  Rng rng(24);
  nn::ParamStore<double> ps;
  nn::TransformerLayer<double> layer(ps, "blk", 8, 2, 16, rng);
  auto x = T::param(random_mat(4, 8, rng));
  MatD c = random_mat(4, 8, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(layer.forward(in), c); },
                  2e-5);
}

TEST_CASE("nn: gru gradients and shape") {
  Rng rng(25);
  nn::ParamStore<double> ps;
  nn::Gru<double> gru(ps, "gru", 4, 6, rng);
  auto x = T::param(random_mat(5, 4, rng));
  CHECK(gru.forward(x).rows() == 5);
  CHECK(gru.forward(x).cols() == 6);
  MatD c = random_mat(5, 6, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(gru.forward(in), c); },
                  2e-5);
}

TEST_CASE("nn: conv2d gradients") {
  Rng rng(26);
  nn::ParamStore<double> ps;
  nn::Conv2d<double> conv(ps, "conv", 2, 3, 3, 1, rng);
  auto x = T::param(random_mat(2, 4 * 5, rng));
  CHECK(conv.out_h(4) == 4);
  CHECK(conv.out_w(5) == 5);
  MatD c = random_mat(3, 4 * 5, rng);
  gradcheck_store(ps, x, [&](T in) { return proj(conv.forward(in, 4, 5), c); });
}

TEST_CASE("nn: param store bookkeeping") {
  Rng rng(27);
  nn::ParamStore<double> ps;
  ps.add("a", MatD::Zero(2, 2));
  CHECK_THROWS_AS(ps.add("a", MatD::Zero(1, 1)), Error);
  ps.add("b", MatD::Ones(3, 1), true);
  CHECK(ps.scalar_count() == 7);
  std::string d0 = ps.value_digest();
  std::string f0 = ps.frozen_digest();
  ps.find("a")->t.value_mut()(0, 0) = 5.0;
  CHECK(ps.value_digest() != d0);
  CHECK(ps.frozen_digest() == f0);  // only "b" is frozen
  CHECK(ps.find("missing") == nullptr);
}

TEST_CASE("nn: adamw minimizes a quadratic and respects freezing") {
  nn::ParamStore<double> ps;
  auto w = ps.add("w", MatD::Constant(1, 1, 5.0));
  auto frozen = ps.add("f", MatD::Constant(1, 1, 2.0), true);
  nn::AdamW<double> opt(0.1);
  for (int i = 0; i < 300; ++i) {
    ad::GradSink<double> sink;
    auto loss = ad::sum_all(ad::mul(w, w));
    ad::backward(loss, sink);
    // Frozen parameter also appears in a graph; it must not move.
    auto loss2 = ad::sum_all(ad::mul(frozen, frozen));
    ad::backward(loss2, sink);
    opt.step(ps, sink);
  }
  CHECK(std::abs(w.value()(0, 0)) < 1e-2);
  CHECK(frozen.value()(0, 0) == 2.0);
  CHECK(opt.steps_taken() == 300);
}

TEST_CASE("nn: adamw decoupled weight decay") {
  nn::ParamStore<double> ps;
  auto w = ps.add("w", MatD::Constant(1, 1, 1.0));
  nn::AdamW<double> opt(0.01, 0.5);
  auto zero = T::constant(MatD::Zero(1, 1));
  for (int i = 0; i < 10; ++i) {
    ad::GradSink<double> sink;
    ad::backward(ad::sum_all(ad::mul(w, zero)), sink);  // exact zero grad
    opt.step(ps, sink);
  }
  // Pure decay path: w *= (1 - lr*wd) each step.
  CHECK(w.value()(0, 0) == doctest::Approx(std::pow(1.0 - 0.005, 10)));
}

TEST_CASE("nn: initializer ranges and sinusoid table") {
  Rng rng(28);
  MatD x = nn::xavier_uniform<double>(20, 30, rng);
  const double lim = std::sqrt(6.0 / 50.0);
  CHECK(x.maxCoeff() <= lim);
  CHECK(x.minCoeff() >= -lim);
  CHECK(std::abs(x.mean()) < 0.05);

  MatD t = nn::sinusoid_table<double>(4, 8);
  CHECK(t(0, 0) == doctest::Approx(0.0));   // sin(0)
  CHECK(t(0, 1) == doctest::Approx(1.0));   // cos(0)
  CHECK(t.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK(t(1, 0) == doctest::Approx(std::sin(1.0)));
}
