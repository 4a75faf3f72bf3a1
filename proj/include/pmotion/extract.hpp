#pragma once

// Pressure-map extractors: a trajectory regressor (pretrained, then
// frozen) and a per-frame shift-token encoder trained with the branch.

#include <string>
#include <vector>

#include "pmotion/nn.hpp"
#include "pmotion/pressure.hpp"

namespace pmotion {

// Pressure values are fed in units of this many newtons.
constexpr double kPressureUnit = 20.0;

// (C, H*W) -> (1, C) spatial average.
template <class S>
ad::Tensor<S> spatial_mean(const ad::Tensor<S>& img) {
  return ad::transpose(
      ad::scale(ad::sum_cols(img), S(1.0 / double(img.cols()))));
}

// Channels log1p(P), Pn*x, Pn*z, Pn with mat-frame coordinates; pooled
// means of the middle two rows read out the centre of pressure directly.
template <class S>
Mat<S> traj_channels(const MatF& map, double sx, double sz) {
  const Eigen::Index h = map.rows(), w = map.cols();
  Mat<S> m(4, h * w);
  double total = std::max(double(map.sum()), 1e-8);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      Eigen::Index col = i * w + j;
      double p = double(map(i, j));
      double pn = p / total;
      m(0, col) = S(std::log1p(p));
      m(1, col) = S(pn * double(j) * sx);
      m(2, col) = S(pn * double(i) * sz);
      m(3, col) = S(pn);
    }
  return m;
}

// Per-frame conv features -> GRU -> self-attention; emits a mat-frame
// trajectory per frame plus one planar offset for the whole sequence.
template <class S>
struct TrajExtractor {
  int height = 0, width = 0;
  double sx = 0.02, sz = 0.02;
  Eigen::Index hidden = 256;
  nn::Conv2d<S> conv1, conv2;
  nn::Gru<S> gru;
  nn::TransformerLayer<S> attn;
  nn::Linear<S> traj_head, offset_head;

  TrajExtractor() = default;
  TrajExtractor(nn::ParamStore<S>& ps, const std::string& prefix, int h,
                int w, double scale_x, double scale_z, Eigen::Index hidden_,
                Rng& rng)
      : height(h), width(w), sx(scale_x), sz(scale_z), hidden(hidden_) {
    conv1 = nn::Conv2d<S>(ps, prefix + ".conv1", 4, 8, 3, 2, rng);
    conv2 = nn::Conv2d<S>(ps, prefix + ".conv2", 8, 16, 3, 2, rng);
    gru = nn::Gru<S>(ps, prefix + ".gru", 20, hidden, rng);
    attn = nn::TransformerLayer<S>(ps, prefix + ".attn", hidden, 4, hidden,
                                   rng);
    traj_head = nn::Linear<S>(ps, prefix + ".traj", hidden, kTrajDim, rng);
    offset_head = nn::Linear<S>(ps, prefix + ".offset", hidden, 2, rng);
  }

  struct Output {
    ad::Tensor<S> traj;    // (N, kTrajDim), mat-frame
    ad::Tensor<S> offset;  // (1, 2), world-frame planar offset
  };

  Output forward(const PressureSequence& seq) const {
    require(seq.height == height && seq.width == width,
            "traj extractor: mat size mismatch");
    std::vector<ad::Tensor<S>> rows;
    rows.reserve(size_t(seq.frames()));
    for (const MatF& map : seq.maps) {
      ad::Tensor<S> x =
          ad::Tensor<S>::constant(traj_channels<S>(map, sx, sz));
      ad::Tensor<S> h1 = ad::relu(conv1.forward(x, height, width));
      ad::Tensor<S> h2 = ad::relu(
          conv2.forward(h1, conv1.out_h(height), conv1.out_w(width)));
      rows.push_back(ad::concat_cols(
          std::vector<ad::Tensor<S>>{spatial_mean(h2), spatial_mean(x)}));
    }
    ad::Tensor<S> h = attn.forward(gru.forward(ad::concat_rows(rows)));
    return {traj_head.forward(h), offset_head.forward(ad::mean_rows(h))};
  }
};

// Multi-scale convs over (P, dP, grid encoding); one token per frame.
template <class S>
struct ShiftExtractor {
  int height = 0, width = 0, d_e = 8;
  Eigen::Index out_dim = 256;
  Mat<S> grid;
  nn::Conv2d<S> c3, c5, c7;
  nn::Linear<S> head;

  ShiftExtractor() = default;
  ShiftExtractor(nn::ParamStore<S>& ps, const std::string& prefix, int h,
                 int w, int d_e_, Eigen::Index out_dim_, Rng& rng)
      : height(h), width(w), d_e(d_e_), out_dim(out_dim_) {
    grid = grid_encoding(h, w, d_e_).cast<S>();
    c3 = nn::Conv2d<S>(ps, prefix + ".c3", 2 + d_e_, 8, 3, 2, rng);
    c5 = nn::Conv2d<S>(ps, prefix + ".c5", 2 + d_e_, 8, 5, 2, rng);
    c7 = nn::Conv2d<S>(ps, prefix + ".c7", 2 + d_e_, 8, 7, 2, rng);
    head = nn::Linear<S>(ps, prefix + ".head", 24, out_dim_, rng);
  }

  ad::Tensor<S> forward(const PressureSequence& seq) const {
    require(seq.height == height && seq.width == width,
            "shift extractor: mat size mismatch");
    std::vector<MatF> diffs = temporal_diff(seq);
    std::vector<ad::Tensor<S>> rows;
    rows.reserve(size_t(seq.frames()));
    for (int f = 0; f < seq.frames(); ++f) {
      Mat<S> ch(2 + d_e, Eigen::Index(height) * width);
      ch.row(0) =
          Eigen::Map<const Eigen::RowVectorXf>(seq.maps[size_t(f)].data(),
                                               ch.cols())
              .template cast<S>() *
          S(1.0 / kPressureUnit);
      ch.row(1) = Eigen::Map<const Eigen::RowVectorXf>(
                      diffs[size_t(f)].data(), ch.cols())
                      .template cast<S>() *
                  S(1.0 / kPressureUnit);
      ch.bottomRows(d_e) = grid;
      ad::Tensor<S> x = ad::Tensor<S>::constant(std::move(ch));
      ad::Tensor<S> p3 = spatial_mean(ad::relu(c3.forward(x, height, width)));
      ad::Tensor<S> p5 = spatial_mean(ad::relu(c5.forward(x, height, width)));
      ad::Tensor<S> p7 = spatial_mean(ad::relu(c7.forward(x, height, width)));
      rows.push_back(
          ad::concat_cols(std::vector<ad::Tensor<S>>{p3, p5, p7}));
    }
    return head.forward(ad::concat_rows(rows));
  }
};

}  // namespace pmotion
