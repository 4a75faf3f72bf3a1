#pragma once

// Training objective: denoising reconstruction plus key-joint consistency
// through differentiable trajectory recovery.

#include "pmotion/skeleton.hpp"
#include "pmotion/tensor.hpp"

namespace pmotion {

template <class S>
ad::Tensor<S> diffusion_loss(const ad::Tensor<S>& x0_pred,
                             const Mat<S>& x0_target) {
  return ad::mse(x0_pred, ad::Tensor<S>::constant(x0_target));
}

// World positions of the key joints recovered from a feature sequence,
// (N, 15); mirrors recover_global_joints but stays on the tape.
template <class S>
ad::Tensor<S> key_joint_world(const ad::Tensor<S>& x) {
  const Eigen::Index n = x.rows();
  require(x.cols() == kFeatureDim, "key_joint_world: bad feature width");
  ad::Tensor<S> yaw = ad::cumsum_rows(ad::slice_cols(x, kColRootYawVel, 1));
  ad::Tensor<S> c = ad::cos_t(yaw), s = ad::sin_t(yaw);
  ad::Tensor<S> prev = ad::shift_rows_down(yaw);
  ad::Tensor<S> cp = ad::cos_t(prev), sp = ad::sin_t(prev);
  ad::Tensor<S> vx = ad::slice_cols(x, kColRootVelX, 1);
  ad::Tensor<S> vz = ad::slice_cols(x, kColRootVelZ, 1);
  Mat<S> gate = Mat<S>::Ones(n, 1);
  gate(0, 0) = S(0);  // frame 0 integrates nothing
  ad::Tensor<S> g = ad::Tensor<S>::constant(std::move(gate));
  ad::Tensor<S> px = ad::cumsum_rows(
      ad::mul(g, ad::add(ad::mul(cp, vx), ad::mul(sp, vz))));
  ad::Tensor<S> pz = ad::cumsum_rows(
      ad::mul(g, ad::sub(ad::mul(cp, vz), ad::mul(sp, vx))));
  ad::Tensor<S> py = ad::slice_cols(x, kColRootHeight, 1);

  std::vector<ad::Tensor<S>> cols;
  cols.reserve(kKeyJoints.size() * 3);
  for (int key : kKeyJoints) {
    if (key == Pelvis) {
      cols.push_back(px);
      cols.push_back(py);
      cols.push_back(pz);
      continue;
    }
    ad::Tensor<S> lx = ad::slice_cols(x, kColLocalPos + 3 * (key - 1), 1);
    ad::Tensor<S> ly = ad::slice_cols(x, kColLocalPos + 3 * (key - 1) + 1, 1);
    ad::Tensor<S> lz = ad::slice_cols(x, kColLocalPos + 3 * (key - 1) + 2, 1);
    cols.push_back(ad::add(px, ad::add(ad::mul(c, lx), ad::mul(s, lz))));
    cols.push_back(ad::add(py, ly));
    cols.push_back(ad::add(pz, ad::sub(ad::mul(c, lz), ad::mul(s, lx))));
  }
  return ad::concat_cols(cols);
}

template <class S>
struct ConsistencyLoss {
  ad::Tensor<S> value;
  bool empty_mask = false;
};

// Mean Euclidean error over masked (frame, key joint) pairs; key_target is
// (N, 15) world positions, mask is (N, 5) in {0, 1}.
template <class S>
ConsistencyLoss<S> consistency_loss(const ad::Tensor<S>& x0_pred,
                                    const Mat<S>& key_target,
                                    const Mat<S>& mask) {
  const Eigen::Index n = x0_pred.rows();
  require(key_target.rows() == n && key_target.cols() == 15,
          "consistency_loss: target shape");
  require(mask.rows() == n &&
              mask.cols() == Eigen::Index(kKeyJoints.size()),
          "consistency_loss: mask shape");
  double active = double(mask.template cast<double>().sum());
  if (active <= 0.0)
    return {ad::Tensor<S>::constant(Mat<S>::Zero(1, 1)), true};

  ad::Tensor<S> pred = key_joint_world(x0_pred);
  ad::Tensor<S> diff =
      ad::sub(pred, ad::Tensor<S>::constant(key_target));
  ad::Tensor<S> ones3 = ad::Tensor<S>::constant(Mat<S>::Ones(3, 1));
  std::vector<ad::Tensor<S>> terms;
  terms.reserve(kKeyJoints.size());
  for (size_t j = 0; j < kKeyJoints.size(); ++j) {
    ad::Tensor<S> dj = ad::slice_cols(diff, Eigen::Index(3 * j), 3);
    ad::Tensor<S> dist =
        ad::sqrt_eps(ad::mm(ad::mul(dj, dj), ones3), S(1e-12));
    terms.push_back(ad::mul(
        dist, ad::Tensor<S>::constant(Mat<S>(mask.col(Eigen::Index(j))))));
  }
  ad::Tensor<S> total = ad::sum_all(ad::concat_cols(terms));
  return {ad::scale(total, S(1.0 / active)), false};
}

}  // namespace pmotion
