#pragma once

// Layers, parameter registry and optimizer built on the autodiff tape.

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "pmotion/digest.hpp"
#include "pmotion/rng.hpp"
#include "pmotion/tensor.hpp"

namespace pmotion::nn {

using ad::Tensor;

template <class S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<S> t;
    bool frozen = false;
  };

  Tensor<S> add(const std::string& name, Mat<S> v, bool frozen = false) {
    for (const auto& e : entries_)
      require(e.name != name, "duplicate parameter name: " + name);
    Tensor<S> t = Tensor<S>::param(std::move(v));
    entries_.push_back({name, t, frozen});
    return t;
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  Entry* find(const std::string& name) {
    for (auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }

  void freeze_all() {
    for (auto& e : entries_) e.frozen = true;
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& e : entries_) n += size_t(e.t.value().size());
    return n;
  }

  // Digest of every value (frozen or not), in registration order.
  std::string value_digest() const {
    Fnv1a f;
    for (const auto& e : entries_) {
      f.update(e.name);
      const Mat<S>& m = e.t.value();
      f.update(m.data(), sizeof(S) * size_t(m.size()));
    }
    return f.hex();
  }

  std::string frozen_digest() const {
    Fnv1a f;
    for (const auto& e : entries_) {
      if (!e.frozen) continue;
      f.update(e.name);
      const Mat<S>& m = e.t.value();
      f.update(m.data(), sizeof(S) * size_t(m.size()));
    }
    return f.hex();
  }

 private:
  std::vector<Entry> entries_;
};

// Copies every src value under src_prefix into the dst entry with the same
// suffix under dst_prefix; shapes must match and every entry must exist.
template <class S>
void copy_params(ParamStore<S>& dst, const std::string& dst_prefix,
                 const ParamStore<S>& src, const std::string& src_prefix) {
  int copied = 0;
  for (const auto& e : src.entries()) {
    if (e.name.rfind(src_prefix, 0) != 0) continue;
    std::string target = dst_prefix + e.name.substr(src_prefix.size());
    auto* d = dst.find(target);
    require(d != nullptr, "copy_params: missing destination " + target);
    require(d->t.rows() == e.t.rows() && d->t.cols() == e.t.cols(),
            "copy_params: shape mismatch at " + target);
    d->t.value_mut() = e.t.value();
    ++copied;
  }
  require(copied > 0, "copy_params: no source entries under " + src_prefix);
}

// ---- initializers ----

template <class S>
Mat<S> xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  double limit = std::sqrt(6.0 / double(rows + cols));
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = S(rng.uniform_range(-limit, limit));
  return m;
}

template <class S>
Mat<S> normal_init(Eigen::Index rows, Eigen::Index cols, double std,
                   Rng& rng) {
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = S(rng.normal() * std);
  return m;
}

// ---- layers ----

template <class S>
struct Linear {
  Tensor<S> W, b;

  Linear() = default;
  Linear(ParamStore<S>& ps, const std::string& prefix, Eigen::Index in,
         Eigen::Index out, Rng& rng, bool zero_init = false) {
    Mat<S> w = zero_init ? Mat<S>::Zero(in, out)
                         : xavier_uniform<S>(in, out, rng);
    W = ps.add(prefix + ".W", std::move(w));
    b = ps.add(prefix + ".b", Mat<S>::Zero(1, out));
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    return ad::add_row_vec(ad::mm(x, W), b);
  }
};

template <class S>
struct LayerNorm {
  Tensor<S> gamma, beta;

  LayerNorm() = default;
  LayerNorm(ParamStore<S>& ps, const std::string& prefix, Eigen::Index dim) {
    gamma = ps.add(prefix + ".gamma", Mat<S>::Ones(1, dim));
    beta = ps.add(prefix + ".beta", Mat<S>::Zero(1, dim));
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    return ad::layernorm_rows(x, gamma, beta);
  }
};

// Multi-head attention; rows of q/kv inputs are tokens.
template <class S>
struct Mha {
  int heads = 1;
  Eigen::Index dim = 0;
  Linear<S> wq, wk, wv, wo;

  Mha() = default;
  Mha(ParamStore<S>& ps, const std::string& prefix, Eigen::Index d, int h,
      Rng& rng, Eigen::Index kv_dim = -1)
      : heads(h), dim(d) {
    require(d % h == 0, "attention dim not divisible by heads");
    if (kv_dim < 0) kv_dim = d;
    wq = Linear<S>(ps, prefix + ".q", d, d, rng);
    wk = Linear<S>(ps, prefix + ".k", kv_dim, d, rng);
    wv = Linear<S>(ps, prefix + ".v", kv_dim, d, rng);
    wo = Linear<S>(ps, prefix + ".o", d, d, rng);
  }

  Tensor<S> forward(const Tensor<S>& q_in, const Tensor<S>& kv_in) const {
    Eigen::Index dh = dim / heads;
    Tensor<S> Q = wq.forward(q_in);
    Tensor<S> K = wk.forward(kv_in);
    Tensor<S> V = wv.forward(kv_in);
    S inv = S(1.0 / std::sqrt(double(dh)));
    std::vector<Tensor<S>> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      Tensor<S> Qh = ad::slice_cols(Q, h * dh, dh);
      Tensor<S> Kh = ad::slice_cols(K, h * dh, dh);
      Tensor<S> Vh = ad::slice_cols(V, h * dh, dh);
      Tensor<S> scores = ad::scale(ad::mm(Qh, ad::transpose(Kh)), inv);
      Tensor<S> probs = ad::softmax_rows(scores);
      outs.push_back(ad::mm(probs, Vh));
    }
    return wo.forward(ad::concat_cols(outs));
  }
};

template <class S>
struct Ffn {
  Linear<S> l1, l2;

  Ffn() = default;
  Ffn(ParamStore<S>& ps, const std::string& prefix, Eigen::Index d,
      Eigen::Index hidden, Rng& rng) {
    l1 = Linear<S>(ps, prefix + ".l1", d, hidden, rng);
    l2 = Linear<S>(ps, prefix + ".l2", hidden, d, rng);
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    return l2.forward(ad::gelu(l1.forward(x)));
  }
};

// Pre-norm transformer encoder layer (self-attention + feed-forward).
template <class S>
struct TransformerLayer {
  LayerNorm<S> ln1, ln2;
  Mha<S> attn;
  Ffn<S> ffn;

  TransformerLayer() = default;
  TransformerLayer(ParamStore<S>& ps, const std::string& prefix,
                   Eigen::Index d, int heads, Eigen::Index ffn_dim,
                   Rng& rng) {
    ln1 = LayerNorm<S>(ps, prefix + ".ln1", d);
    ln2 = LayerNorm<S>(ps, prefix + ".ln2", d);
    attn = Mha<S>(ps, prefix + ".attn", d, heads, rng);
    ffn = Ffn<S>(ps, prefix + ".ffn", d, ffn_dim, rng);
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    Tensor<S> n1 = ln1.forward(x);
    Tensor<S> y = ad::add(x, attn.forward(n1, n1));
    return ad::add(y, ffn.forward(ln2.forward(y)));
  }
};

// GRU over a sequence; input rows are timesteps. Gate layout [r, z, n].
template <class S>
struct Gru {
  Eigen::Index hidden = 0;
  Tensor<S> Wx, Wh, bx, bh;

  Gru() = default;
  Gru(ParamStore<S>& ps, const std::string& prefix, Eigen::Index in,
      Eigen::Index h, Rng& rng)
      : hidden(h) {
    Wx = ps.add(prefix + ".Wx", xavier_uniform<S>(in, 3 * h, rng));
    Wh = ps.add(prefix + ".Wh", xavier_uniform<S>(h, 3 * h, rng));
    bx = ps.add(prefix + ".bx", Mat<S>::Zero(1, 3 * h));
    bh = ps.add(prefix + ".bh", Mat<S>::Zero(1, 3 * h));
  }

  // Returns all hidden states (N, hidden).
  Tensor<S> forward(const Tensor<S>& x) const {
    Eigen::Index n = x.rows(), h = hidden;
    Tensor<S> ones = Tensor<S>::constant(Mat<S>::Ones(1, h));
    Tensor<S> state = Tensor<S>::constant(Mat<S>::Zero(1, h));
    std::vector<Tensor<S>> outs;
    outs.reserve(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      Tensor<S> xt = ad::slice_rows(x, t, 1);
      Tensor<S> gx = ad::add_row_vec(ad::mm(xt, Wx), bx);
      Tensor<S> gh = ad::add_row_vec(ad::mm(state, Wh), bh);
      Tensor<S> r = ad::sigmoid(
          ad::add(ad::slice_cols(gx, 0, h), ad::slice_cols(gh, 0, h)));
      Tensor<S> z = ad::sigmoid(
          ad::add(ad::slice_cols(gx, h, h), ad::slice_cols(gh, h, h)));
      Tensor<S> cand = ad::tanh_t(ad::add(
          ad::slice_cols(gx, 2 * h, h),
          ad::mul(r, ad::slice_cols(gh, 2 * h, h))));
      state = ad::add(ad::mul(z, state),
                      ad::mul(ad::sub(ones, z), cand));
      outs.push_back(state);
    }
    return ad::concat_rows(outs);
  }
};

// 2-D convolution on a (Cin, H*W) image via im2col.
template <class S>
struct Conv2d {
  int k = 3, stride = 1, pad = 1;
  Tensor<S> W, b;

  Conv2d() = default;
  Conv2d(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
         int kernel, int stride_, Rng& rng)
      : k(kernel), stride(stride_), pad(kernel / 2) {
    W = ps.add(prefix + ".W",
               xavier_uniform<S>(cout, Eigen::Index(cin) * kernel * kernel,
                                 rng));
    b = ps.add(prefix + ".b", Mat<S>::Zero(cout, 1));
  }

  Tensor<S> forward(const Tensor<S>& x, int H, int Wd) const {
    Tensor<S> col = ad::im2col(x, H, Wd, k, stride, pad);
    return ad::add_col_vec(ad::mm(W, col), b);
  }

  int out_h(int H) const { return (H + 2 * pad - k) / stride + 1; }
  int out_w(int Wd) const { return (Wd + 2 * pad - k) / stride + 1; }
};

// Classic fixed sinusoidal embedding; row per position.
template <class S>
Mat<S> sinusoid_table(Eigen::Index positions, Eigen::Index dim) {
  Mat<S> t(positions, dim);
  for (Eigen::Index p = 0; p < positions; ++p)
    for (Eigen::Index i = 0; i < dim; ++i) {
      double freq = std::pow(10000.0, -double(2 * (i / 2)) / double(dim));
      double a = double(p) * freq;
      t(p, i) = S(i % 2 == 0 ? std::sin(a) : std::cos(a));
    }
  return t;
}

// ---- optimizer ----

// Adam with decoupled weight decay. Steps every non-frozen entry of the
// store, in registration order, using gradients accumulated in the sink.
template <class S>
class AdamW {
 public:
  double lr = 1e-5;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 0.0;

  explicit AdamW(double lr_ = 1e-5, double wd = 0.0)
      : lr(lr_), weight_decay(wd) {}

  void step(ParamStore<S>& ps, const ad::GradSink<S>& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1, double(t_));
    double bc2 = 1.0 - std::pow(beta2, double(t_));
    for (auto& e : ps.entries()) {
      if (e.frozen) continue;
      const Mat<S>* g = grads.find(e.t.node().get());
      if (!g) continue;
      auto& st = state_[e.t.node().get()];
      Mat<S>& m = st.first;
      Mat<S>& v = st.second;
      if (m.size() == 0) {
        m = Mat<S>::Zero(g->rows(), g->cols());
        v = Mat<S>::Zero(g->rows(), g->cols());
      }
      m = m * S(beta1) + (*g) * S(1.0 - beta1);
      v = v * S(beta2) + g->cwiseProduct(*g) * S(1.0 - beta2);
      Mat<S>& w = e.t.value_mut();
      if (weight_decay != 0.0) w -= w * S(lr * weight_decay);
      Mat<S> mhat = m * S(1.0 / bc1);
      Mat<S> vhat = v * S(1.0 / bc2);
      w -= (mhat.array() / (vhat.array().sqrt() + S(eps))).matrix() * S(lr);
    }
  }

  int64_t steps_taken() const { return t_; }

 private:
  std::unordered_map<const ad::Node<S>*, std::pair<Mat<S>, Mat<S>>> state_;
  int64_t t_ = 0;
};

}  // namespace pmotion::nn
