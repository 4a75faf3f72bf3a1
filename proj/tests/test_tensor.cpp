#include <doctest.h>

#include <cmath>

#include "pmotion/rng.hpp"
#include "pmotion/tensor.hpp"

using namespace pmotion;
using T = ad::Tensor<double>;

namespace {

MatD random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1,
                double hi = 1) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform_range(lo, hi);
  return m;
}

// Central finite differences against the tape, elementwise, in double.
template <class Fn>
void gradcheck(std::vector<T> params, Fn&& fn, double tol = 1e-6) {
  ad::GradSink<double> sink;
  T loss = fn(params);
  REQUIRE(loss.rows() == 1);
  REQUIRE(loss.cols() == 1);
  ad::backward(loss, sink);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const MatD* g = sink.find(params[pi].node().get());
    REQUIRE_MESSAGE(g != nullptr, "missing grad for param ", pi);
    MatD& v = params[pi].value_mut();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double save = v.data()[i];
      const double h = std::max(1e-6, 1e-4 * std::abs(save));
      double f1, f0;
      {
        ad::NoGrad ng;
        v.data()[i] = save + h;
        f1 = fn(params).value()(0, 0);
        v.data()[i] = save - h;
        f0 = fn(params).value()(0, 0);
        v.data()[i] = save;
      }
      const double num = (f1 - f0) / (2.0 * h);
      const double ana = g->data()[i];
      // Below the FD noise floor both sides are an effective zero.
      if (std::abs(num) < 5e-8 && std::abs(ana) < 5e-8) continue;
      const double rel = std::abs(num - ana) /
                         std::max({1e-8, std::abs(num), std::abs(ana)});
      CHECK_MESSAGE(rel < tol, "param ", pi, " entry ", i, ": fd ", num,
                    " tape ", ana);
    }
  }
}

// Contract with a fixed random matrix so asymmetric gradient errors show up.
T proj(const T& out, const MatD& c) {
  return ad::sum_all(ad::mul(out, T::constant(c)));
}

}  // namespace

TEST_CASE("tape: arithmetic ops match finite differences") {
  Rng rng(7);
  MatD c = random_mat(3, 4, rng);
  auto a = T::param(random_mat(3, 4, rng));
  auto b = T::param(random_mat(3, 4, rng));
  gradcheck({a, b}, [&](std::vector<T>& p) {
    return proj(ad::add(p[0], p[1]), c);
  });
  gradcheck({a, b}, [&](std::vector<T>& p) {
    return proj(ad::sub(p[0], p[1]), c);
  });
  gradcheck({a, b}, [&](std::vector<T>& p) {
    return proj(ad::mul(p[0], p[1]), c);
  });
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::scale(p[0], -1.7), c);
  });
}

TEST_CASE("tape: matmul and transpose") {
  Rng rng(8);
  MatD c = random_mat(3, 5, rng);
  auto a = T::param(random_mat(3, 4, rng));
  auto b = T::param(random_mat(4, 5, rng));
  gradcheck({a, b}, [&](std::vector<T>& p) {
    return proj(ad::mm(p[0], p[1]), c);
  });
  MatD ct = random_mat(4, 3, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::transpose(p[0]), ct);
  });
}

TEST_CASE("tape: activations") {
  Rng rng(9);
  MatD c = random_mat(3, 4, rng);
  MatD x = random_mat(3, 4, rng, -2, 2);
  // Keep entries away from the relu kink where FD is ill-defined.
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x.data()[i]) < 0.05) x.data()[i] += 0.1;
  auto a = T::param(x);
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::relu(p[0]), c); });
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::gelu(p[0]), c); });
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::tanh_t(p[0]), c); });
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::sigmoid(p[0]), c); });
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::sin_t(p[0]), c); });
  gradcheck({a}, [&](std::vector<T>& p) { return proj(ad::cos_t(p[0]), c); });
  auto pos = T::param(random_mat(3, 4, rng, 0.3, 2.0));
  gradcheck({pos}, [&](std::vector<T>& p) {
    return proj(ad::sqrt_eps(p[0], 1e-12), c);
  });
  gradcheck({pos}, [&](std::vector<T>& p) {
    return proj(ad::log_eps(p[0], 1e-12), c);
  });
  MatD lv = pos.value();
  MatD ly = ad::log_eps(pos, 1e-12).value();
  for (Eigen::Index i = 0; i < lv.size(); ++i)
    CHECK(ly.data()[i] == doctest::Approx(std::log(lv.data()[i])).epsilon(1e-9));
}

TEST_CASE("tape: reductions and broadcasts") {
  Rng rng(10);
  auto a = T::param(random_mat(4, 5, rng));
  gradcheck({a}, [&](std::vector<T>& p) { return ad::sum_all(p[0]); });
  gradcheck({a}, [&](std::vector<T>& p) { return ad::mean_all(p[0]); });
  MatD c_col = random_mat(4, 1, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::sum_cols(p[0]), c_col);
  });
  MatD c_row = random_mat(1, 5, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::mean_rows(p[0]), c_row);
  });
  MatD c = random_mat(4, 5, rng);
  auto brow = T::param(random_mat(1, 5, rng));
  gradcheck({a, brow}, [&](std::vector<T>& p) {
    return proj(ad::add_row_vec(p[0], p[1]), c);
  });
  auto bcol = T::param(random_mat(4, 1, rng));
  gradcheck({a, bcol}, [&](std::vector<T>& p) {
    return proj(ad::add_col_vec(p[0], p[1]), c);
  });
  auto dcol = T::param(random_mat(4, 1, rng, 0.5, 2.0));
  gradcheck({a, dcol}, [&](std::vector<T>& p) {
    return proj(ad::div_col_vec(p[0], p[1]), c);
  });
  MatD q = ad::div_col_vec(a, dcol).value();
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index j = 0; j < 5; ++j)
      CHECK(q(r, j) ==
            doctest::Approx(a.value()(r, j) / dcol.value()(r, 0))
                .epsilon(1e-12));
}

TEST_CASE("tape: shape ops") {
  Rng rng(11);
  auto a = T::param(random_mat(6, 5, rng));
  MatD c2 = random_mat(2, 5, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::slice_rows(p[0], 3, 2), c2);
  });
  MatD c3 = random_mat(6, 2, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::slice_cols(p[0], 1, 2), c3);
  });
  auto b = T::param(random_mat(2, 5, rng));
  MatD c8 = random_mat(8, 5, rng);
  gradcheck({a, b}, [&](std::vector<T>& p) {
    return proj(ad::concat_rows<double>({p[0], p[1]}), c8);
  });
  auto d = T::param(random_mat(6, 3, rng));
  MatD cc = random_mat(6, 8, rng);
  gradcheck({a, d}, [&](std::vector<T>& p) {
    return proj(ad::concat_cols<double>({p[0], p[1]}), cc);
  });
  // Overlapping slices of the same parent accumulate.
  MatD c1 = random_mat(3, 5, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return ad::add(proj(ad::slice_rows(p[0], 0, 3), c1),
                   proj(ad::slice_rows(p[0], 1, 3), c1));
  });
}

TEST_CASE("tape: sequence ops") {
  Rng rng(12);
  auto a = T::param(random_mat(6, 3, rng));
  MatD c = random_mat(6, 3, rng);
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::cumsum_rows(p[0]), c);
  });
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::shift_rows_down(p[0]), c);
  });
  gradcheck({a}, [&](std::vector<T>& p) {
    return proj(ad::softmax_rows(p[0]), c);
  });
}

TEST_CASE("tape: cumsum forward matches prefix sums") {
  Rng rng(13);
  MatD x = random_mat(5, 2, rng);
  auto y = ad::cumsum_rows(T::constant(x)).value();
  for (Eigen::Index j = 0; j < 2; ++j) {
    double acc = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      acc += x(i, j);
      CHECK(y(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("tape: layernorm") {
  Rng rng(14);
  auto x = T::param(random_mat(4, 6, rng));
  auto gamma = T::param(random_mat(1, 6, rng, 0.5, 1.5));
  auto beta = T::param(random_mat(1, 6, rng));
  MatD c = random_mat(4, 6, rng);
  gradcheck(
      {x, gamma, beta},
      [&](std::vector<T>& p) {
        return proj(ad::layernorm_rows(p[0], p[1], p[2]), c);
      },
      1e-5);
  // Normalized rows have zero mean / unit variance under identity affine.
  auto ones = T::constant(MatD::Ones(1, 6));
  auto zeros = T::constant(MatD::Zero(1, 6));
  MatD y = ad::layernorm_rows(x, ones, zeros).value();
  for (int i = 0; i < 4; ++i) {
    CHECK(y.row(i).mean() == doctest::Approx(0).epsilon(1e-9));
    CHECK(y.row(i).squaredNorm() / 6.0 == doctest::Approx(1).epsilon(1e-4));
  }
}

TEST_CASE("tape: mse") {
  Rng rng(15);
  auto a = T::param(random_mat(3, 4, rng));
  auto b = T::param(random_mat(3, 4, rng));
  gradcheck({a, b}, [&](std::vector<T>& p) { return ad::mse(p[0], p[1]); });
  MatD d = a.value() - b.value();
  CHECK(ad::mse(a, b).value()(0, 0) ==
        doctest::Approx(d.array().square().mean()).epsilon(1e-12));
}

TEST_CASE("tape: im2col convolution path") {
  Rng rng(16);
  auto img = T::param(random_mat(2, 5 * 6, rng));  // 2 channels, 5x6
  MatD c = random_mat(2 * 3 * 3, 5 * 6, rng);
  gradcheck({img}, [&](std::vector<T>& p) {
    return proj(ad::im2col(p[0], 5, 6, 3, 1, 1), c);
  });
  MatD c2 = random_mat(2 * 3 * 3, 2 * 2, rng);
  gradcheck({img}, [&](std::vector<T>& p) {
    return proj(ad::im2col(p[0], 5, 6, 3, 2, 0), c2);
  });
}

TEST_CASE("tape: gather_rows_mean with repeated ids") {
  Rng rng(17);
  auto table = T::param(random_mat(10, 4, rng));
  MatD c = random_mat(1, 4, rng);
  std::vector<int> ids = {1, 3, 3, 7};
  gradcheck({table}, [&](std::vector<T>& p) {
    return proj(ad::gather_rows_mean(p[0], ids), c);
  });
  MatD expect =
      (table.value().row(1) + 2 * table.value().row(3) + table.value().row(7)) /
      4.0;
  CHECK((ad::gather_rows_mean(table, ids).value() - expect).norm() < 1e-12);
}

TEST_CASE("tape: sink accumulates across separate graphs") {
  Rng rng(18);
  auto w = T::param(random_mat(2, 2, rng));
  ad::GradSink<double> sink;
  auto l1 = ad::sum_all(ad::mul(w, w));
  ad::backward(l1, sink);
  auto l2 = ad::sum_all(ad::scale(w, 3.0));
  ad::backward(l2, sink);
  const MatD* g = sink.find(w.node().get());
  REQUIRE(g != nullptr);
  MatD expect = 2.0 * w.value() + MatD::Constant(2, 2, 3.0);
  CHECK((*g - expect).norm() < 1e-12);
}

TEST_CASE("tape: NoGrad suppresses graph recording") {
  Rng rng(19);
  auto w = T::param(random_mat(2, 2, rng));
  ad::NoGrad ng;
  auto y = ad::sum_all(ad::mul(w, w));
  CHECK_FALSE(y.node()->needs_grad);
  CHECK(y.node()->parents.empty());
}

TEST_CASE("tape: deep chain does not overflow the stack") {
  auto w = T::param(MatD::Ones(1, 1));
  T x = w;
  for (int i = 0; i < 20000; ++i) x = ad::scale(x, 1.0);
  ad::GradSink<double> sink;
  ad::backward(ad::sum_all(x), sink);
  const MatD* g = sink.find(w.node().get());
  REQUIRE(g != nullptr);
  CHECK((*g)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("tape: diamond graph accumulates both paths") {
  auto w = T::param(MatD::Constant(1, 1, 3.0));
  auto a = ad::scale(w, 2.0);
  auto loss = ad::sum_all(ad::mul(a, a));  // (2w)^2, d/dw = 8w = 24
  ad::GradSink<double> sink;
  ad::backward(loss, sink);
  CHECK((*sink.find(w.node().get()))(0, 0) == doctest::Approx(24.0));
}
