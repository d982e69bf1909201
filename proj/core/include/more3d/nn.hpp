#ifndef MORE3D_NN_HPP_
#define MORE3D_NN_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "more3d/errors.hpp"
#include "more3d/rng.hpp"

// Minimal dense layers with explicit Forward/Backward, templated on the
// scalar type: float for training, double for finite-difference verification.
// One forward/backward may be in flight per layer instance (activations are
// cached in the layer).
namespace more3d {
namespace nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;

  void setup(std::string param_name, int rows, int cols) {
    name = std::move(param_name);
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }

  // uniform(-a, a), a = sqrt(6 / (fan_in + fan_out))
  void init_xavier(Rng& rng) {
    const double a =
        std::sqrt(6.0 / static_cast<double>(value.rows() + value.cols()));
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        value(r, c) = static_cast<T>(rng.uniform(-a, a));
      }
    }
  }

  void set_constant(T x) { value.setConstant(x); }
  void zero_grad() { grad.setZero(); }
};

template <typename T>
T gelu_scalar(T x) {
  const T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T c = static_cast<T>(0.044715);
  return static_cast<T>(0.5) * x *
         (static_cast<T>(1) + std::tanh(k * (x + c * x * x * x)));
}

template <typename T>
T gelu_grad_scalar(T x) {
  const T k = static_cast<T>(0.7978845608028654);
  const T c = static_cast<T>(0.044715);
  const T u = k * (x + c * x * x * x);
  const T t = std::tanh(u);
  const T du = k * (static_cast<T>(1) + static_cast<T>(3) * c * x * x);
  return static_cast<T>(0.5) * (static_cast<T>(1) + t) +
         static_cast<T>(0.5) * x * (static_cast<T>(1) - t * t) * du;
}

template <typename T>
struct Linear {
  Param<T> weight;  // (in, out)
  Param<T> bias;    // (1, out)
  Mat<T> x_cache;

  void setup(const std::string& name, int in, int out, Rng& rng) {
    weight.setup(name + ".weight", in, out);
    weight.init_xavier(rng);
    bias.setup(name + ".bias", 1, out);
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Mat<T> forward(const Mat<T>& x) {
    if (x.cols() != weight.value.rows()) {
      throw RuntimeFault("linear " + weight.name + ": input width " +
                         std::to_string(x.cols()) + " != " +
                         std::to_string(weight.value.rows()));
    }
    x_cache = x;
    Mat<T> y = x * weight.value;
    y.rowwise() += bias.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    weight.grad.noalias() += x_cache.transpose() * dy;
    bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value.transpose();
  }
};

template <typename T>
struct Gelu {
  Mat<T> x_cache;

  Mat<T> forward(const Mat<T>& x) {
    x_cache = x;
    Mat<T> y = x;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        y(r, c) = gelu_scalar(y(r, c));
      }
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx = dy;
    for (Eigen::Index r = 0; r < dx.rows(); ++r) {
      for (Eigen::Index c = 0; c < dx.cols(); ++c) {
        dx(r, c) *= gelu_grad_scalar(x_cache(r, c));
      }
    }
    return dx;
  }
};

template <typename T>
struct LayerNorm {
  Param<T> gamma;  // (1, d)
  Param<T> beta;   // (1, d)
  Mat<T> x_hat;
  Mat<T> inv_std;  // (n, 1)
  static constexpr T kEps = static_cast<T>(1e-5);

  void setup(const std::string& name, int dim) {
    gamma.setup(name + ".gamma", 1, dim);
    gamma.set_constant(static_cast<T>(1));
    beta.setup(name + ".beta", 1, dim);
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  Mat<T> forward(const Mat<T>& x) {
    const auto n = x.rows();
    const auto d = x.cols();
    x_hat.resize(n, d);
    inv_std.resize(n, 1);
    Mat<T> y(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      const T mean = x.row(r).mean();
      T var = 0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const T diff = x(r, c) - mean;
        var += diff * diff;
      }
      var /= static_cast<T>(d);
      const T inv = static_cast<T>(1) / std::sqrt(var + kEps);
      inv_std(r, 0) = inv;
      for (Eigen::Index c = 0; c < d; ++c) {
        x_hat(r, c) = (x(r, c) - mean) * inv;
        y(r, c) = gamma.value(0, c) * x_hat(r, c) + beta.value(0, c);
      }
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const auto n = dy.rows();
    const auto d = dy.cols();
    Mat<T> dx(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      T sum_dxhat = 0;
      T sum_dxhat_xhat = 0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const T dxh = dy(r, c) * gamma.value(0, c);
        sum_dxhat += dxh;
        sum_dxhat_xhat += dxh * x_hat(r, c);
        gamma.grad(0, c) += dy(r, c) * x_hat(r, c);
        beta.grad(0, c) += dy(r, c);
      }
      const T inv_d = static_cast<T>(1) / static_cast<T>(d);
      for (Eigen::Index c = 0; c < d; ++c) {
        const T dxh = dy(r, c) * gamma.value(0, c);
        dx(r, c) = inv_std(r, 0) *
                   (dxh - inv_d * sum_dxhat - x_hat(r, c) * inv_d * sum_dxhat_xhat);
      }
    }
    return dx;
  }
};

// Causal multi-head self-attention over one sequence (L, d).
template <typename T>
struct CausalSelfAttention {
  int n_heads = 1;
  int head_dim = 1;
  Linear<T> qkv;   // d -> 3d
  Linear<T> proj;  // d -> d
  Mat<T> qkv_cache;
  std::vector<Mat<T>> attn;  // per head, (L, L) post-softmax

  void setup(const std::string& name, int d_model, int heads, Rng& rng) {
    if (heads < 1 || d_model % heads != 0) {
      throw UsageError("d_model " + std::to_string(d_model) +
                       " must be divisible by n_heads " + std::to_string(heads));
    }
    n_heads = heads;
    head_dim = d_model / heads;
    qkv.setup(name + ".qkv", d_model, 3 * d_model, rng);
    proj.setup(name + ".proj", d_model, d_model, rng);
  }

  void collect(std::vector<Param<T>*>& out) {
    qkv.collect(out);
    proj.collect(out);
  }

  Mat<T> forward(const Mat<T>& x) {
    const auto L = x.rows();
    const auto d = x.cols();
    qkv_cache = qkv.forward(x);
    attn.assign(static_cast<size_t>(n_heads), Mat<T>());
    const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(head_dim));
    Mat<T> ctx(L, d);
    for (int h = 0; h < n_heads; ++h) {
      const auto q = qkv_cache.block(0, h * head_dim, L, head_dim);
      const auto k = qkv_cache.block(0, d + h * head_dim, L, head_dim);
      const auto v = qkv_cache.block(0, 2 * d + h * head_dim, L, head_dim);
      Mat<T> scores = q * k.transpose() * scale;
      Mat<T>& a = attn[static_cast<size_t>(h)];
      a.setZero(L, L);
      for (Eigen::Index i = 0; i < L; ++i) {
        T row_max = scores(i, 0);
        for (Eigen::Index j = 1; j <= i; ++j) row_max = std::max(row_max, scores(i, j));
        T denom = 0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          a(i, j) = std::exp(scores(i, j) - row_max);
          denom += a(i, j);
        }
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) /= denom;
      }
      ctx.block(0, h * head_dim, L, head_dim) = a * v;
    }
    return proj.forward(ctx);
  }

  Mat<T> backward(const Mat<T>& dy) {
    const auto L = dy.rows();
    const auto d = dy.cols();
    const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(head_dim));
    Mat<T> dctx = proj.backward(dy);
    Mat<T> dqkv;
    dqkv.setZero(L, 3 * d);
    for (int h = 0; h < n_heads; ++h) {
      const auto q = qkv_cache.block(0, h * head_dim, L, head_dim);
      const auto k = qkv_cache.block(0, d + h * head_dim, L, head_dim);
      const auto v = qkv_cache.block(0, 2 * d + h * head_dim, L, head_dim);
      const Mat<T>& a = attn[static_cast<size_t>(h)];
      const auto dctx_h = dctx.block(0, h * head_dim, L, head_dim);
      Mat<T> da = dctx_h * v.transpose();
      dqkv.block(0, 2 * d + h * head_dim, L, head_dim) = a.transpose() * dctx_h;
      // softmax backward per causal row
      Mat<T> dscores;
      dscores.setZero(L, L);
      for (Eigen::Index i = 0; i < L; ++i) {
        T dot = 0;
        for (Eigen::Index j = 0; j <= i; ++j) dot += da(i, j) * a(i, j);
        for (Eigen::Index j = 0; j <= i; ++j) {
          dscores(i, j) = a(i, j) * (da(i, j) - dot);
        }
      }
      dqkv.block(0, h * head_dim, L, head_dim) = dscores * k * scale;
      dqkv.block(0, d + h * head_dim, L, head_dim) =
          dscores.transpose() * q * scale;
    }
    return qkv.backward(dqkv);
  }
};

// Pre-norm transformer block: x + attn(ln1(x)), then x + mlp(ln2(x)).
template <typename T>
struct Block {
  LayerNorm<T> ln1;
  CausalSelfAttention<T> attn;
  LayerNorm<T> ln2;
  Linear<T> fc1;  // d -> 4d
  Gelu<T> act;
  Linear<T> fc2;  // 4d -> d

  void setup(const std::string& name, int d_model, int n_heads, Rng& rng) {
    ln1.setup(name + ".ln1", d_model);
    attn.setup(name + ".attn", d_model, n_heads, rng);
    ln2.setup(name + ".ln2", d_model);
    fc1.setup(name + ".fc1", d_model, 4 * d_model, rng);
    fc2.setup(name + ".fc2", 4 * d_model, d_model, rng);
  }

  void collect(std::vector<Param<T>*>& out) {
    ln1.collect(out);
    attn.collect(out);
    ln2.collect(out);
    fc1.collect(out);
    fc2.collect(out);
  }

  Mat<T> forward(const Mat<T>& x) {
    Mat<T> x1 = x + attn.forward(ln1.forward(x));
    Mat<T> y = x1 + fc2.forward(act.forward(fc1.forward(ln2.forward(x1))));
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx1 = dy + ln2.backward(fc1.backward(act.backward(fc2.backward(dy))));
    Mat<T> dx = dx1 + ln1.backward(attn.backward(dx1));
    return dx;
  }
};

// Row-wise softmax cross-entropy against integer targets; returns the mean
// and writes d(mean CE)/d(logits) when grad is non-null. float64 accumulation
// regardless of T.
template <typename T>
double softmax_cross_entropy(const Mat<T>& logits,
                             const std::vector<int>& targets,
                             Mat<T>* grad) {
  if (static_cast<size_t>(logits.rows()) != targets.size()) {
    throw RuntimeFault("cross-entropy: " + std::to_string(logits.rows()) +
                       " logit rows vs " + std::to_string(targets.size()) +
                       " targets");
  }
  if (logits.rows() == 0) throw RuntimeFault("cross-entropy: no rows");
  const auto n = logits.rows();
  const auto v = logits.cols();
  if (grad) grad->setZero(n, v);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int target = targets[static_cast<size_t>(r)];
    if (target < 0 || target >= v) {
      throw RuntimeFault("cross-entropy: target " + std::to_string(target) +
                         " out of range [0," + std::to_string(v) + ")");
    }
    double row_max = static_cast<double>(logits(r, 0));
    for (Eigen::Index c = 1; c < v; ++c) {
      row_max = std::max(row_max, static_cast<double>(logits(r, c)));
    }
    double denom = 0.0;
    for (Eigen::Index c = 0; c < v; ++c) {
      denom += std::exp(static_cast<double>(logits(r, c)) - row_max);
    }
    const double log_denom = std::log(denom);
    total += log_denom -
             (static_cast<double>(logits(r, target)) - row_max);
    if (grad) {
      const double inv_n = 1.0 / static_cast<double>(n);
      for (Eigen::Index c = 0; c < v; ++c) {
        const double p =
            std::exp(static_cast<double>(logits(r, c)) - row_max) / denom;
        (*grad)(r, c) = static_cast<T>((p - (c == target ? 1.0 : 0.0)) * inv_n);
      }
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace nn
}  // namespace more3d

#endif  // MORE3D_NN_HPP_
