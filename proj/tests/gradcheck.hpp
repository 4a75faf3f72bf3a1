#pragma once

// Shared finite-difference gradient checks for tape-built modules.

#include <doctest.h>

#include <cmath>

#include "pmotion/nn.hpp"

namespace gc {

using pmotion::MatD;
using TD = pmotion::ad::Tensor<double>;

inline MatD random_mat(Eigen::Index r, Eigen::Index c, pmotion::Rng& rng) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform_range(-1, 1);
  return m;
}

// FD check over every parameter of the store plus the input.
template <class Fn>
void gradcheck_store(pmotion::nn::ParamStore<double>& ps, TD input, Fn&& fn,
                     double tol = 1e-5) {
  pmotion::ad::GradSink<double> sink;
  pmotion::ad::backward(fn(input), sink);
  std::vector<TD> all;
  for (auto& e : ps.entries()) all.push_back(e.t);
  all.push_back(input);
  for (auto& t : all) {
    const MatD* g = sink.find(t.node().get());
    if (!g) continue;  // layers may legitimately not use every tensor
    MatD& v = t.value_mut();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double save = v.data()[i];
      const double h = std::max(1e-6, 1e-4 * std::abs(save));
      double f1, f0;
      {
        pmotion::ad::NoGrad ng;
        v.data()[i] = save + h;
        f1 = fn(input).value()(0, 0);
        v.data()[i] = save - h;
        f0 = fn(input).value()(0, 0);
        v.data()[i] = save;
      }
      const double num = (f1 - f0) / (2.0 * h);
      const double ana = g->data()[i];
      // Below the FD noise floor both sides are an effective zero.
      if (std::abs(num) < 5e-8 && std::abs(ana) < 5e-8) continue;
      const double rel =
          std::abs(num - ana) / std::max({1e-8, std::abs(num), std::abs(ana)});
      CHECK_MESSAGE(rel < tol, "entry ", i, ": fd ", num, " tape ", ana);
    }
  }
}

// Random contraction so a matrix output reduces to one scalar.
inline TD proj(const TD& out, const MatD& c) {
  return pmotion::ad::sum_all(pmotion::ad::mul(out, TD::constant(c)));
}

}  // namespace gc
