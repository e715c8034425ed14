#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "simtrans/errors.hpp"

namespace simtrans {

// All training math runs in double by default; -DSIMTRANS_SINGLE_PRECISION
// switches the whole stack to float (gradient checks require double).
#ifdef SIMTRANS_SINGLE_PRECISION
using Scalar = float;
#else
using Scalar = double;
#endif

template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// softmax
// ---------------------------------------------------------------------------

// Row-wise softmax with max-subtraction, stable for entries up to +-1e4.
template <class S>
MatrixT<S> softmax_rows(const MatrixT<S>& x) {
  MatrixT<S> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    if (x.cols() == 0) continue;
    const S m = x.row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (x.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

// axis 0 normalizes each column, axis 1 each row.
template <class S>
MatrixT<S> softmax(const MatrixT<S>& x, int axis) {
  if (axis == 1) return softmax_rows(x);
  if (axis == 0) {
    MatrixT<S> xt = x.transpose();
    MatrixT<S> st = softmax_rows(xt);
    return st.transpose();
  }
  throw ArgumentError("softmax: axis must be 0 or 1, got " + std::to_string(axis));
}

template <class S>
VectorT<S> softmax(const VectorT<S>& x) {
  if (x.size() == 0) return x;
  const S m = x.maxCoeff();
  Eigen::Array<S, Eigen::Dynamic, 1> e = (x.array() - m).exp();
  return e / e.sum();
}

template <class S>
VectorT<S> log_softmax(const VectorT<S>& x) {
  const S m = x.maxCoeff();
  const S lse = m + std::log((x.array() - m).exp().sum());
  return x.array() - lse;
}

// Backward through a row-wise softmax: given y = softmax_rows(x) and dL/dy,
// each row maps to y .* (dy - <dy, y>).
template <class S>
MatrixT<S> softmax_rows_backward(const MatrixT<S>& y, const MatrixT<S>& grad_out) {
  MatrixT<S> dx(y.rows(), y.cols());
  for (Index i = 0; i < y.rows(); ++i) {
    const S dot = y.row(i).dot(grad_out.row(i));
    dx.row(i) = y.row(i).array() * (grad_out.row(i).array() - dot);
  }
  return dx;
}

// Softmax over the allowed entries of each row; a row with nothing allowed
// yields zeros rather than NaN.
template <class S>
MatrixT<S> masked_softmax_rows(const MatrixT<S>& x, const BoolMatrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols())
    throw ArgumentError("masked_softmax_rows: mask shape mismatch");
  MatrixT<S> out = MatrixT<S>::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    S m = std::numeric_limits<S>::lowest();
    bool any = false;
    for (Index j = 0; j < x.cols(); ++j)
      if (mask(i, j)) {
        m = any ? std::max(m, x(i, j)) : x(i, j);
        any = true;
      }
    if (!any) continue;
    S sum = 0;
    for (Index j = 0; j < x.cols(); ++j)
      if (mask(i, j)) {
        out(i, j) = std::exp(x(i, j) - m);
        sum += out(i, j);
      }
    out.row(i) /= sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// layer norm
// ---------------------------------------------------------------------------

template <class S>
struct LayerNormCache {
  MatrixT<S> normalized;        // (x - mean) * inv_std, per row
  VectorT<S> inv_std;           // one per row
};

template <class S>
MatrixT<S> layer_norm_forward(const MatrixT<S>& x, const VectorT<S>& gain,
                              const VectorT<S>& bias, S epsilon,
                              LayerNormCache<S>* cache = nullptr) {
  if (gain.size() != x.cols() || bias.size() != x.cols())
    throw ArgumentError("layer_norm: gain/bias length must equal last dimension");
  if (!(epsilon > 0)) throw ArgumentError("layer_norm: epsilon must be > 0");
  const S n = static_cast<S>(x.cols());
  MatrixT<S> xhat(x.rows(), x.cols());
  VectorT<S> inv_std(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const S mean = x.row(i).mean();
    const S var = (x.row(i).array() - mean).square().sum() / n;
    const S istd = S(1) / std::sqrt(var + epsilon);
    xhat.row(i) = (x.row(i).array() - mean) * istd;
    inv_std(i) = istd;
  }
  MatrixT<S> y = (xhat.array().rowwise() * gain.transpose().array()).rowwise() +
                 bias.transpose().array();
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <class S>
MatrixT<S> layer_norm(const MatrixT<S>& x, const VectorT<S>& gain,
                      const VectorT<S>& bias, S epsilon) {
  return layer_norm_forward<S>(x, gain, bias, epsilon, nullptr);
}

template <class S>
struct LayerNormGrads {
  MatrixT<S> input;
  VectorT<S> gain;
  VectorT<S> bias;
};

template <class S>
LayerNormGrads<S> layer_norm_backward(const LayerNormCache<S>& cache,
                                      const VectorT<S>& gain,
                                      const MatrixT<S>& grad_out) {
  const MatrixT<S>& xhat = cache.normalized;
  LayerNormGrads<S> g;
  g.gain = (grad_out.array() * xhat.array()).colwise().sum();
  g.bias = grad_out.colwise().sum();
  g.input.resize(xhat.rows(), xhat.cols());
  const S n = static_cast<S>(xhat.cols());
  for (Index i = 0; i < xhat.rows(); ++i) {
    Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
        grad_out.row(i).array() * gain.transpose().array();
    const S mean_dxhat = dxhat.sum() / n;
    const S mean_dxhat_xhat = (dxhat * xhat.row(i).array()).sum() / n;
    g.input.row(i) =
        cache.inv_std(i) * (dxhat - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat);
  }
  return g;
}

// ---------------------------------------------------------------------------
// label-smoothed cross entropy
// ---------------------------------------------------------------------------

struct CeResult {
  Scalar loss = 0;          // mean over non-pad positions
  Matrix grad;              // dL/dlogits, zero at pad positions
  long long positions = 0;  // non-pad position count
};

// loss per non-pad row = (1-eps) * -log p[target] + (eps/V) * sum_k -log p[k];
// rows whose target equals pad_id contribute nothing.
CeResult label_smoothed_ce(const Matrix& logits, const std::vector<int>& targets,
                           Scalar epsilon, int pad_id);

// ---------------------------------------------------------------------------
// optimizer, gradient clipping, learning-rate schedule
// ---------------------------------------------------------------------------

// Flat view over one named parameter tensor; matrices and vectors alike.
struct TensorView {
  std::string name;
  Scalar* data = nullptr;
  Index rows = 0, cols = 0;
  Index size() const { return rows * cols; }
  Eigen::Map<ArrayX> array() const { return Eigen::Map<ArrayX>(data, size()); }
};

struct OptimizerState {
  long long step = 0;            // completed updates
  std::vector<ArrayX> m, v;      // first/second moments, one per tensor
  static OptimizerState init(const std::vector<TensorView>& params);
};

// Bias-corrected Adam with decoupled weight decay (applied to the parameters
// before the moment update). Throws NumericError naming the tensor on any
// non-finite gradient entry.
void adam_step(const std::vector<TensorView>& params,
               const std::vector<TensorView>& grads, OptimizerState& state,
               Scalar lr, Scalar beta1, Scalar beta2, Scalar eps,
               Scalar weight_decay);

// Scales gradients to `threshold` when their global L2 norm exceeds it;
// threshold 0 disables clipping. Returns the pre-clip global norm.
Scalar clip_grad_norm(const std::vector<TensorView>& grads, Scalar threshold);

struct LrSchedule {
  Scalar base_rate = 5e-4;
  long long warmup_steps = 4000;
};

// Linear warmup to base_rate, then inverse-square-root decay.
Scalar lr_at(long long step, const LrSchedule& schedule);

}  // namespace simtrans
