#pragma once

// Reverse-mode autodiff over dense row-major Eigen matrices.
//
// Graphs are built dynamically: each op returns a Tensor handle whose node
// stores the value, parent links and a backward closure. backward() runs a
// topological sweep and accumulates parameter gradients into a GradSink
// keyed by leaf node, so parameter leaves can be shared across many item
// graphs (and, if ever needed, across threads with one sink per thread).
//
// Instantiated with float for production and double for gradient checks and
// loss oracles.

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pmotion/common.hpp"

namespace pmotion::ad {

template <class S>
struct Node;
template <class S>
using NodePtr = std::shared_ptr<Node<S>>;

template <class S>
class GradSink {
 public:
  void add(const Node<S>* leaf, const Mat<S>& g) {
    auto it = grads_.find(leaf);
    if (it == grads_.end())
      grads_.emplace(leaf, g);
    else
      it->second += g;
  }
  const Mat<S>* find(const Node<S>* leaf) const {
    auto it = grads_.find(leaf);
    return it == grads_.end() ? nullptr : &it->second;
  }
  void merge(const GradSink& other) {
    for (const auto& [k, v] : other.grads_) add(k, v);
  }
  void clear() { grads_.clear(); }
  size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<const Node<S>*, Mat<S>> grads_;
};

template <class S>
struct Node {
  Mat<S> val;
  Mat<S> grad;  // intermediates only; parameter grads go to the sink
  bool needs_grad = false;
  bool is_param = false;
  std::vector<NodePtr<S>> parents;
  std::function<void(Node<S>&, GradSink<S>&)> back;
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables graph recording in scope (inference / frozen forward passes).
struct NoGrad {
  NoGrad() : prev_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGrad() { grad_mode_flag() = prev_; }

 private:
  bool prev_;
};

template <class S>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr<S> n) : n_(std::move(n)) {}

  static Tensor constant(Mat<S> v) {
    auto n = std::make_shared<Node<S>>();
    n->val = std::move(v);
    return Tensor(std::move(n));
  }
  static Tensor param(Mat<S> v) {
    auto n = std::make_shared<Node<S>>();
    n->val = std::move(v);
    n->needs_grad = true;
    n->is_param = true;
    return Tensor(std::move(n));
  }

  const Mat<S>& value() const { return n_->val; }
  Mat<S>& value_mut() { return n_->val; }
  NodePtr<S> node() const { return n_; }
  bool defined() const { return n_ != nullptr; }
  Eigen::Index rows() const { return n_->val.rows(); }
  Eigen::Index cols() const { return n_->val.cols(); }

 private:
  NodePtr<S> n_;
};

namespace detail {

template <class S>
void accum(GradSink<S>& sink, Node<S>& p, const Mat<S>& g) {
  if (!p.needs_grad) return;
  if (p.is_param) {
    sink.add(&p, g);
    return;
  }
  if (p.grad.size() == 0)
    p.grad = g;
  else
    p.grad += g;
}

template <class S, class Backward>
Tensor<S> make_op(Mat<S> val, std::vector<NodePtr<S>> parents, Backward bw) {
  auto n = std::make_shared<Node<S>>();
  n->val = std::move(val);
  if (grad_mode_flag()) {
    bool needs = false;
    for (const auto& p : parents) needs |= p->needs_grad;
    if (needs) {
      n->needs_grad = true;
      n->parents = std::move(parents);
      n->back = std::move(bw);
    }
  }
  return Tensor<S>(std::move(n));
}

}  // namespace detail

// ---- elementwise / arithmetic ----

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return detail::make_op<S>(
      a.value() + b.value(), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], n.grad);
        detail::accum(s, *n.parents[1], n.grad);
      });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return detail::make_op<S>(
      a.value() - b.value(), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], n.grad);
        detail::accum(s, *n.parents[1], Mat<S>(-n.grad));
      });
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S k) {
  return detail::make_op<S>(
      Mat<S>(a.value() * k), {a.node()},
      [k](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], Mat<S>(n.grad * k));
      });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  return detail::make_op<S>(
      a.value().cwiseProduct(b.value()), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0],
                      Mat<S>(n.grad.cwiseProduct(n.parents[1]->val)));
        detail::accum(s, *n.parents[1],
                      Mat<S>(n.grad.cwiseProduct(n.parents[0]->val)));
      });
}

template <class S>
Tensor<S> mm(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.cols() == b.rows(), "mm: inner dimension mismatch");
  return detail::make_op<S>(
      Mat<S>(a.value() * b.value()), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0],
                      Mat<S>(n.grad * n.parents[1]->val.transpose()));
        detail::accum(s, *n.parents[1],
                      Mat<S>(n.parents[0]->val.transpose() * n.grad));
      });
}

template <class S>
Tensor<S> transpose(const Tensor<S>& a) {
  return detail::make_op<S>(
      Mat<S>(a.value().transpose()), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], Mat<S>(n.grad.transpose()));
      });
}

// ---- activations ----

template <class S>
Tensor<S> relu(const Tensor<S>& a) {
  return detail::make_op<S>(
      a.value().cwiseMax(S(0)), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad;
        const Mat<S>& x = n.parents[0]->val;
        for (Eigen::Index i = 0; i < g.size(); ++i)
          if (x.data()[i] <= S(0)) g.data()[i] = S(0);
        detail::accum(s, *n.parents[0], g);
      });
}

template <class S>
Tensor<S> gelu(const Tensor<S>& a) {
  Mat<S> y = a.value();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double x = double(y.data()[i]);
    y.data()[i] = S(x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2)));
  }
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad;
        const Mat<S>& xm = n.parents[0]->val;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          double x = double(xm.data()[i]);
          double phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
          double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
          g.data()[i] *= S(phi + x * pdf);
        }
        detail::accum(s, *n.parents[0], g);
      });
}

template <class S>
Tensor<S> tanh_t(const Tensor<S>& a) {
  Mat<S> y = a.value().array().tanh().matrix();
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g =
            n.grad.cwiseProduct((Mat<S>::Ones(n.val.rows(), n.val.cols()) -
                                 n.val.cwiseProduct(n.val)));
        detail::accum(s, *n.parents[0], g);
      });
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  Mat<S> y = ((a.value().array() * S(-1)).exp() + S(1)).inverse().matrix();
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad.cwiseProduct(
            n.val.cwiseProduct(Mat<S>::Ones(n.val.rows(), n.val.cols()) -
                               n.val));
        detail::accum(s, *n.parents[0], g);
      });
}

template <class S>
Tensor<S> sin_t(const Tensor<S>& a) {
  return detail::make_op<S>(
      Mat<S>(a.value().array().sin().matrix()), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(
            s, *n.parents[0],
            Mat<S>(n.grad.cwiseProduct(
                Mat<S>(n.parents[0]->val.array().cos().matrix()))));
      });
}

template <class S>
Tensor<S> cos_t(const Tensor<S>& a) {
  return detail::make_op<S>(
      Mat<S>(a.value().array().cos().matrix()), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(
            s, *n.parents[0],
            Mat<S>(-n.grad.cwiseProduct(
                Mat<S>(n.parents[0]->val.array().sin().matrix()))));
      });
}

// ln(x + eps); eps keeps the value and gradient finite at zero.
template <class S>
Tensor<S> log_eps(const Tensor<S>& a, S eps) {
  Mat<S> y = (a.value().array() + eps).log().matrix();
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad.cwiseProduct(
            Mat<S>((-n.val.array()).exp().matrix()));
        detail::accum(s, *n.parents[0], g);
      });
}

// sqrt(x + eps); eps keeps the gradient finite at zero.
template <class S>
Tensor<S> sqrt_eps(const Tensor<S>& a, S eps) {
  Mat<S> y = (a.value().array() + eps).sqrt().matrix();
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad.cwiseQuotient(Mat<S>(n.val * S(2)));
        detail::accum(s, *n.parents[0], g);
      });
}

// ---- reductions / broadcasts ----

template <class S>
Tensor<S> sum_all(const Tensor<S>& a) {
  Mat<S> y(1, 1);
  y(0, 0) = S(a.value().template cast<double>().sum());
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        const auto& p = *n.parents[0];
        detail::accum(s, *n.parents[0],
                      Mat<S>(Mat<S>::Constant(p.val.rows(), p.val.cols(),
                                              n.grad(0, 0))));
      });
}

template <class S>
Tensor<S> mean_all(const Tensor<S>& a) {
  double inv = 1.0 / double(a.value().size());
  Mat<S> y(1, 1);
  y(0, 0) = S(a.value().template cast<double>().sum() * inv);
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [inv](Node<S>& n, GradSink<S>& s) {
        const auto& p = *n.parents[0];
        detail::accum(s, *n.parents[0],
                      Mat<S>(Mat<S>::Constant(p.val.rows(), p.val.cols(),
                                              S(double(n.grad(0, 0)) * inv))));
      });
}

// Sum over columns within each row -> (R, 1).
template <class S>
Tensor<S> sum_cols(const Tensor<S>& a) {
  return detail::make_op<S>(
      Mat<S>(a.value().rowwise().sum()), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        const auto& p = *n.parents[0];
        detail::accum(s, *n.parents[0],
                      Mat<S>(n.grad * Mat<S>::Ones(1, p.val.cols())));
      });
}

// Mean over rows -> (1, C).
template <class S>
Tensor<S> mean_rows(const Tensor<S>& a) {
  S inv = S(1.0 / double(a.rows()));
  return detail::make_op<S>(
      Mat<S>(a.value().colwise().mean()), {a.node()},
      [inv](Node<S>& n, GradSink<S>& s) {
        const auto& p = *n.parents[0];
        detail::accum(s, *n.parents[0],
                      Mat<S>((Mat<S>::Ones(p.val.rows(), 1) * n.grad) * inv));
      });
}

// a(R,C) + bias(1,C) broadcast over rows.
template <class S>
Tensor<S> add_row_vec(const Tensor<S>& a, const Tensor<S>& b) {
  require(b.rows() == 1 && b.cols() == a.cols(), "add_row_vec: bad bias shape");
  Mat<S> y = a.value().rowwise() + b.value().row(0);
  return detail::make_op<S>(
      std::move(y), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], n.grad);
        detail::accum(s, *n.parents[1], Mat<S>(n.grad.colwise().sum()));
      });
}

// a(R,C) + bias(R,1) broadcast over columns.
template <class S>
Tensor<S> add_col_vec(const Tensor<S>& a, const Tensor<S>& b) {
  require(b.cols() == 1 && b.rows() == a.rows(), "add_col_vec: bad bias shape");
  Mat<S> y = a.value().colwise() + b.value().col(0);
  return detail::make_op<S>(
      std::move(y), {a.node(), b.node()},
      [](Node<S>& n, GradSink<S>& s) {
        detail::accum(s, *n.parents[0], n.grad);
        detail::accum(s, *n.parents[1], Mat<S>(n.grad.rowwise().sum()));
      });
}

// a(R,C) / d(R,1) broadcast over columns; d must be nonzero.
template <class S>
Tensor<S> div_col_vec(const Tensor<S>& a, const Tensor<S>& d) {
  require(d.cols() == 1 && d.rows() == a.rows(),
          "div_col_vec: bad divisor shape");
  Mat<S> y =
      (a.value().array().colwise() / d.value().col(0).array()).matrix();
  return detail::make_op<S>(
      std::move(y), {a.node(), d.node()},
      [](Node<S>& n, GradSink<S>& s) {
        const auto& dv = n.parents[1]->val.col(0).array();
        detail::accum(s, *n.parents[0],
                      Mat<S>((n.grad.array().colwise() / dv).matrix()));
        Mat<S> gd = -(n.grad.cwiseProduct(n.val).rowwise().sum().array() /
                      dv)
                         .matrix();
        detail::accum(s, *n.parents[1], gd);
      });
}

// ---- shape ops ----

template <class S>
Tensor<S> slice_rows(const Tensor<S>& a, Eigen::Index r0, Eigen::Index n) {
  require(r0 >= 0 && r0 + n <= a.rows(), "slice_rows: out of range");
  return detail::make_op<S>(
      Mat<S>(a.value().middleRows(r0, n)), {a.node()},
      [r0, n](Node<S>& nd, GradSink<S>& s) {
        const auto& p = *nd.parents[0];
        Mat<S> g = Mat<S>::Zero(p.val.rows(), p.val.cols());
        g.middleRows(r0, n) = nd.grad;
        detail::accum(s, *nd.parents[0], g);
      });
}

template <class S>
Tensor<S> slice_cols(const Tensor<S>& a, Eigen::Index c0, Eigen::Index n) {
  require(c0 >= 0 && c0 + n <= a.cols(), "slice_cols: out of range");
  return detail::make_op<S>(
      Mat<S>(a.value().middleCols(c0, n)), {a.node()},
      [c0, n](Node<S>& nd, GradSink<S>& s) {
        const auto& p = *nd.parents[0];
        Mat<S> g = Mat<S>::Zero(p.val.rows(), p.val.cols());
        g.middleCols(c0, n) = nd.grad;
        detail::accum(s, *nd.parents[0], g);
      });
}

template <class S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  require(!parts.empty(), "concat_rows: empty");
  Eigen::Index rows = 0, cols = parts[0].cols();
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Mat<S> y(rows, cols);
  std::vector<NodePtr<S>> parents;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    y.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    parents.push_back(p.node());
  }
  return detail::make_op<S>(
      std::move(y), std::move(parents), [](Node<S>& n, GradSink<S>& s) {
        Eigen::Index r = 0;
        for (auto& p : n.parents) {
          detail::accum(s, *p, Mat<S>(n.grad.middleRows(r, p->val.rows())));
          r += p->val.rows();
        }
      });
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  require(!parts.empty(), "concat_cols: empty");
  Eigen::Index cols = 0, rows = parts[0].rows();
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Mat<S> y(rows, cols);
  std::vector<NodePtr<S>> parents;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    y.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    parents.push_back(p.node());
  }
  return detail::make_op<S>(
      std::move(y), std::move(parents), [](Node<S>& n, GradSink<S>& s) {
        Eigen::Index c = 0;
        for (auto& p : n.parents) {
          detail::accum(s, *p, Mat<S>(n.grad.middleCols(c, p->val.cols())));
          c += p->val.cols();
        }
      });
}

// ---- sequence ops ----

// Inclusive prefix sum down the rows of each column.
template <class S>
Tensor<S> cumsum_rows(const Tensor<S>& a) {
  Mat<S> y = a.value();
  for (Eigen::Index i = 1; i < y.rows(); ++i) y.row(i) += y.row(i - 1);
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad;
        for (Eigen::Index i = g.rows() - 2; i >= 0; --i)
          g.row(i) += g.row(i + 1);
        detail::accum(s, *n.parents[0], g);
      });
}

// Rows shifted down by one; row 0 becomes zero.
template <class S>
Tensor<S> shift_rows_down(const Tensor<S>& a) {
  Mat<S> y = Mat<S>::Zero(a.rows(), a.cols());
  if (a.rows() > 1) y.bottomRows(a.rows() - 1) = a.value().topRows(a.rows() - 1);
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = Mat<S>::Zero(n.grad.rows(), n.grad.cols());
        if (n.grad.rows() > 1)
          g.topRows(n.grad.rows() - 1) = n.grad.bottomRows(n.grad.rows() - 1);
        detail::accum(s, *n.parents[0], g);
      });
}

template <class S>
Tensor<S> softmax_rows(const Tensor<S>& a) {
  Mat<S> y = a.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    S m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [](Node<S>& n, GradSink<S>& s) {
        Mat<S> g = n.grad.cwiseProduct(n.val);
        Vec<S> rowdot = g.rowwise().sum();
        g -= (rowdot.asDiagonal() * n.val);
        detail::accum(s, *n.parents[0], g);
      });
}

// Layer norm over each row with learned gain/bias (1,C).
template <class S>
Tensor<S> layernorm_rows(const Tensor<S>& a, const Tensor<S>& gamma,
                         const Tensor<S>& beta, S eps = S(1e-5)) {
  const Mat<S>& x = a.value();
  Eigen::Index R = x.rows(), C = x.cols();
  Mat<S> xhat(R, C);
  Vec<S> inv_std(R);
  for (Eigen::Index i = 0; i < R; ++i) {
    S mu = x.row(i).mean();
    S var = (x.row(i).array() - mu).square().sum() / S(C);
    S is = S(1) / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((x.row(i).array() - mu) * is).matrix();
  }
  Mat<S> y = (xhat.array().rowwise() * gamma.value().row(0).array())
                 .matrix()
                 .rowwise() +
             beta.value().row(0);
  auto xhat_keep = std::make_shared<Mat<S>>(std::move(xhat));
  auto inv_keep = std::make_shared<Vec<S>>(std::move(inv_std));
  return detail::make_op<S>(
      std::move(y), {a.node(), gamma.node(), beta.node()},
      [xhat_keep, inv_keep](Node<S>& n, GradSink<S>& s) {
        const Mat<S>& xh = *xhat_keep;
        Eigen::Index R = xh.rows(), C = xh.cols();
        const Mat<S>& gm = n.parents[1]->val;
        detail::accum(s, *n.parents[2], Mat<S>(n.grad.colwise().sum()));
        detail::accum(s, *n.parents[1],
                      Mat<S>(n.grad.cwiseProduct(xh).colwise().sum()));
        Mat<S> dxh =
            (n.grad.array().rowwise() * gm.row(0).array()).matrix();
        Mat<S> dx(R, C);
        for (Eigen::Index i = 0; i < R; ++i) {
          S m1 = dxh.row(i).mean();
          S m2 = dxh.row(i).cwiseProduct(xh.row(i)).mean();
          dx.row(i) = ((dxh.row(i).array() - m1 - xh.row(i).array() * m2) *
                       (*inv_keep)(i))
                          .matrix();
        }
        detail::accum(s, *n.parents[0], dx);
      });
}

// Mean squared error over all entries -> (1,1).
template <class S>
Tensor<S> mse(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mse: shape mismatch");
  Mat<S> d = a.value() - b.value();
  double n = double(d.size());
  Mat<S> y(1, 1);
  y(0, 0) = S(d.template cast<double>().array().square().sum() / n);
  auto d_keep = std::make_shared<Mat<S>>(std::move(d));
  return detail::make_op<S>(
      std::move(y), {a.node(), b.node()},
      [d_keep, n](Node<S>& nd, GradSink<S>& s) {
        Mat<S> g = (*d_keep) * S(2.0 / n * double(nd.grad(0, 0)));
        detail::accum(s, *nd.parents[0], g);
        detail::accum(s, *nd.parents[1], Mat<S>(-g));
      });
}

// im2col for a single image stored as (C, H*W) row-major; output
// (C*k*k, Ho*Wo) with zero padding `pad` and stride `stride`.
template <class S>
Tensor<S> im2col(const Tensor<S>& a, int H, int W, int k, int stride,
                 int pad) {
  const Mat<S>& x = a.value();
  int C = int(x.rows());
  require(x.cols() == Eigen::Index(H) * W, "im2col: spatial size mismatch");
  int Ho = (H + 2 * pad - k) / stride + 1;
  int Wo = (W + 2 * pad - k) / stride + 1;
  require(Ho > 0 && Wo > 0, "im2col: kernel larger than padded input");
  Mat<S> y = Mat<S>::Zero(Eigen::Index(C) * k * k, Eigen::Index(Ho) * Wo);
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        Eigen::Index row = Eigen::Index(c) * k * k + ky * k + kx;
        for (int oy = 0; oy < Ho; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < Wo; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= W) continue;
            y(row, Eigen::Index(oy) * Wo + ox) =
                x(c, Eigen::Index(iy) * W + ix);
          }
        }
      }
  return detail::make_op<S>(
      std::move(y), {a.node()},
      [H, W, k, stride, pad, C](Node<S>& n, GradSink<S>& s) {
        int Ho = (H + 2 * pad - k) / stride + 1;
        int Wo = (W + 2 * pad - k) / stride + 1;
        Mat<S> g = Mat<S>::Zero(C, Eigen::Index(H) * W);
        for (int c = 0; c < C; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              Eigen::Index row = Eigen::Index(c) * k * k + ky * k + kx;
              for (int oy = 0; oy < Ho; ++oy) {
                int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= H) continue;
                for (int ox = 0; ox < Wo; ++ox) {
                  int ix = ox * stride - pad + kx;
                  if (ix < 0 || ix >= W) continue;
                  g(c, Eigen::Index(iy) * W + ix) +=
                      n.grad(row, Eigen::Index(oy) * Wo + ox);
                }
              }
            }
        detail::accum(s, *n.parents[0], g);
      });
}

// Mean of table rows selected by ids -> (1, C). Used by hashing text encoders.
template <class S>
Tensor<S> gather_rows_mean(const Tensor<S>& table,
                           const std::vector<int>& ids) {
  require(!ids.empty(), "gather_rows_mean: empty id list");
  Mat<S> y = Mat<S>::Zero(1, table.cols());
  for (int id : ids) {
    require(id >= 0 && id < table.rows(), "gather_rows_mean: id out of range");
    y.row(0) += table.value().row(id);
  }
  y /= S(double(ids.size()));
  auto ids_keep = std::make_shared<std::vector<int>>(ids);
  return detail::make_op<S>(
      std::move(y), {table.node()},
      [ids_keep](Node<S>& n, GradSink<S>& s) {
        const auto& p = *n.parents[0];
        Mat<S> g = Mat<S>::Zero(p.val.rows(), p.val.cols());
        S inv = S(1.0 / double(ids_keep->size()));
        for (int id : *ids_keep) g.row(id) += n.grad.row(0) * inv;
        detail::accum(s, *n.parents[0], g);
      });
}

// ---- backward driver ----

template <class S>
void backward(const Tensor<S>& root, GradSink<S>& sink, Mat<S> seed) {
  require(root.defined(), "backward: undefined tensor");
  require(seed.rows() == root.rows() && seed.cols() == root.cols(),
          "backward: seed shape mismatch");
  if (!root.node()->needs_grad) return;

  // Iterative post-order DFS; graphs can be thousands of nodes deep.
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<S>* p = node->parents[idx++].get();
      if (p->needs_grad && !p->is_param && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad = std::move(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->grad.size() == 0) continue;  // unreachable branch
    if (n->back) n->back(*n, sink);
    if (n != root.node().get()) n->grad.resize(0, 0);  // free as we go
  }
  root.node()->grad.resize(0, 0);
}

// Scalar-loss convenience: seeds with 1.
template <class S>
void backward(const Tensor<S>& loss, GradSink<S>& sink) {
  require(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be 1x1");
  Mat<S> seed(1, 1);
  seed(0, 0) = S(1);
  backward(loss, sink, std::move(seed));
}

}  // namespace pmotion::ad
