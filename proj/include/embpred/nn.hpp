#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "embpred/error.hpp"
#include "embpred/rng.hpp"
#include "embpred/types.hpp"

// Minimal reverse-mode layer set for the fixed feedforward architecture:
// embedding, linear, relu, 1-D batch norm, inverted dropout, softmax
// cross-entropy, and a bias-corrected adaptive-moment optimizer. Each layer is
// a value type that caches what its backward pass needs; there is no general
// computation graph.
namespace embpred::nn {

enum class Mode { train, eval };

template <typename S>
struct Param {
  MatX<S> value;
  MatX<S> grad;

  void init(Index rows, Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
  Index size() const { return value.size(); }
};

// y.row(b) = table.row(indices[b]); backward scatters row gradients back,
// summing over repeated indices.
template <typename S>
class Embedding {
 public:
  Embedding() = default;
  Embedding(Index rows, Index dim) { table_.init(rows, dim); }

  void init_weights(Rng& rng, double stddev = 0.01) {
    for (Index i = 0; i < table_.value.rows(); ++i) {
      for (Index j = 0; j < table_.value.cols(); ++j) {
        table_.value(i, j) = static_cast<S>(rng.normal(0.0, stddev));
      }
    }
  }

  MatX<S> forward(const VecXi& indices) {
    const Index batch = indices.size();
    MatX<S> out(batch, table_.value.cols());
    for (Index b = 0; b < batch; ++b) {
      const Index idx = indices[b];
      if (idx < 0 || idx >= table_.value.rows()) {
        throw ValidationError("embedding index " + std::to_string(idx) + " out of range [0, " +
                              std::to_string(table_.value.rows()) + ")");
      }
      out.row(b) = table_.value.row(idx);
    }
    last_indices_ = indices;
    return out;
  }

  void backward(const MatX<S>& dy) {
    for (Index b = 0; b < last_indices_.size(); ++b) {
      table_.grad.row(last_indices_[b]) += dy.row(b);
    }
  }

  Param<S>& table() { return table_; }
  const Param<S>& table() const { return table_; }
  Index rows() const { return table_.value.rows(); }
  Index dim() const { return table_.value.cols(); }

 private:
  Param<S> table_;
  VecXi last_indices_;
};

// y = x W + b
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(Index in, Index out) {
    weight_.init(in, out);
    bias_.init(1, out);
  }

  void init_weights(Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(weight_.value.rows() + weight_.value.cols()));
    for (Index i = 0; i < weight_.value.rows(); ++i) {
      for (Index j = 0; j < weight_.value.cols(); ++j) {
        weight_.value(i, j) = static_cast<S>(rng.uniform(-bound, bound));
      }
    }
    bias_.value.setZero();
  }

  MatX<S> forward(const MatX<S>& x) {
    if (x.cols() != weight_.value.rows()) {
      throw ValidationError("linear: input width " + std::to_string(x.cols()) +
                            " does not match weight shape " + std::to_string(weight_.value.rows()) +
                            "x" + std::to_string(weight_.value.cols()));
    }
    x_cache_ = x;
    MatX<S> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  MatX<S> backward(const MatX<S>& dy) {
    weight_.grad.noalias() += x_cache_.transpose() * dy;
    bias_.grad.row(0) += dy.colwise().sum();
    return dy * weight_.value.transpose();
  }

  Param<S>& weight() { return weight_; }
  Param<S>& bias() { return bias_; }
  const Param<S>& weight() const { return weight_; }
  const Param<S>& bias() const { return bias_; }
  Index in_features() const { return weight_.value.rows(); }
  Index out_features() const { return weight_.value.cols(); }

 private:
  Param<S> weight_;  // in x out
  Param<S> bias_;    // 1 x out
  MatX<S> x_cache_;
};

// max(0, x); the gradient at exactly 0 is 0.
template <typename S>
class ReLU {
 public:
  MatX<S> forward(const MatX<S>& x) {
    mask_ = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseMax(S(0));
  }
  MatX<S> backward(const MatX<S>& dy) { return dy.cwiseProduct(mask_); }

 private:
  MatX<S> mask_;
};

// Per-feature normalization: batch statistics (population variance) in train
// mode with running-average tracking, running statistics in eval mode.
template <typename S>
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  explicit BatchNorm1d(Index features, S momentum = S(0.1), S eps = S(1e-5))
      : momentum_(momentum), eps_(eps) {
    gamma_.init(1, features);
    beta_.init(1, features);
    gamma_.value.setOnes();
    running_mean_.setZero(1, features);
    running_var_.setOnes(1, features);
  }

  MatX<S> forward(const MatX<S>& x, Mode mode) {
    const Index batch = x.rows();
    if (mode == Mode::train) {
      if (batch < 2) {
        throw ValidationError("batch norm requires a batch of at least 2 in train mode");
      }
      mean_ = x.colwise().mean();
      MatX<S> centered = x.rowwise() - mean_.row(0);
      var_ = centered.array().square().colwise().mean();
      inv_std_ = (var_.array() + eps_).rsqrt().matrix();
      xhat_ = (centered.array().rowwise() * inv_std_.row(0).array()).matrix();
      running_mean_ = (S(1) - momentum_) * running_mean_ + momentum_ * mean_;
      running_var_ = (S(1) - momentum_) * running_var_ + momentum_ * var_;
      train_cached_ = true;
      MatX<S> y = (xhat_.array().rowwise() * gamma_.value.row(0).array()).matrix();
      y.rowwise() += beta_.value.row(0);
      return y;
    }
    MatX<S> inv = (running_var_.array() + eps_).rsqrt().matrix();
    MatX<S> y = x.rowwise() - running_mean_.row(0);
    y.array() = y.array().rowwise() * inv.row(0).array();
    y.array() = y.array().rowwise() * gamma_.value.row(0).array();
    y.rowwise() += beta_.value.row(0);
    return y;
  }

  // Full gradient including the mean and variance paths (train mode).
  MatX<S> backward(const MatX<S>& dy) {
    if (!train_cached_) {
      throw NumericError("batch norm backward requires a cached train-mode forward");
    }
    const S batch = static_cast<S>(dy.rows());
    gamma_.grad.row(0) += (dy.array() * xhat_.array()).colwise().sum().matrix();
    beta_.grad.row(0) += dy.colwise().sum();

    MatX<S> dxhat = (dy.array().rowwise() * gamma_.value.row(0).array()).matrix();
    MatX<S> sum_dxhat = dxhat.colwise().sum();
    MatX<S> sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum().matrix();

    MatX<S> dx = (batch * dxhat.array()).matrix();
    dx.rowwise() -= sum_dxhat.row(0);
    dx.array() -= xhat_.array().rowwise() * sum_dxhat_xhat.row(0).array();
    dx.array() = dx.array().rowwise() * (inv_std_.row(0).array() / batch);
    return dx;
  }

  Param<S>& gamma() { return gamma_; }
  Param<S>& beta() { return beta_; }
  const Param<S>& gamma() const { return gamma_; }
  const Param<S>& beta() const { return beta_; }
  MatX<S>& running_mean() { return running_mean_; }
  MatX<S>& running_var() { return running_var_; }
  const MatX<S>& running_mean() const { return running_mean_; }
  const MatX<S>& running_var() const { return running_var_; }
  Index features() const { return gamma_.value.cols(); }
  S momentum() const { return momentum_; }
  S eps() const { return eps_; }

 private:
  S momentum_ = S(0.1);
  S eps_ = S(1e-5);
  Param<S> gamma_;
  Param<S> beta_;
  MatX<S> running_mean_;
  MatX<S> running_var_;
  // train-mode caches
  MatX<S> mean_, var_, inv_std_, xhat_;
  bool train_cached_ = false;
};

// Inverted dropout: zero with probability p, scale survivors by 1/(1-p);
// identity in eval mode.
template <typename S>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(S p) : p_(p) {
    if (p < S(0) || p >= S(1)) throw ValidationError("dropout probability must be in [0, 1)");
  }

  MatX<S> forward(const MatX<S>& x, Mode mode, Rng& rng) {
    if (mode == Mode::eval || p_ == S(0)) {
      mask_.setOnes(x.rows(), x.cols());
      return x;
    }
    const S scale = S(1) / (S(1) - p_);
    mask_.resize(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) {
        mask_(i, j) = rng.uniform() < static_cast<double>(p_) ? S(0) : scale;
      }
    }
    return x.cwiseProduct(mask_);
  }

  // Deterministic path used by gradient tests.
  MatX<S> forward_with_mask(const MatX<S>& x, const MatX<S>& mask) {
    mask_ = mask;
    return x.cwiseProduct(mask_);
  }

  MatX<S> backward(const MatX<S>& dy) { return dy.cwiseProduct(mask_); }

  S p() const { return p_; }
  const MatX<S>& mask() const { return mask_; }

 private:
  S p_ = S(0);
  MatX<S> mask_;
};

template <typename S>
MatX<S> softmax(const MatX<S>& logits) {
  MatX<S> shifted = logits;
  VecX<S> row_max = logits.rowwise().maxCoeff();
  shifted.colwise() -= row_max;
  MatX<S> e = shifted.array().exp().matrix();
  VecX<S> sums = e.rowwise().sum();
  for (Index i = 0; i < e.rows(); ++i) e.row(i) /= sums[i];
  return e;
}

// Mean negative log-likelihood over the batch plus its gradient w.r.t. the
// logits: (softmax - onehot) / batch.
template <typename S>
std::pair<S, MatX<S>> softmax_cross_entropy(const MatX<S>& logits, const VecXi& targets) {
  if (logits.rows() != targets.size()) {
    throw ValidationError("cross entropy: " + std::to_string(logits.rows()) + " logit rows vs " +
                          std::to_string(targets.size()) + " targets");
  }
  const Index batch = logits.rows();
  MatX<S> probs = softmax(logits);
  S loss = S(0);
  MatX<S> dlogits = probs;
  for (Index i = 0; i < batch; ++i) {
    const Index t = targets[i];
    if (t < 0 || t >= logits.cols()) {
      throw ValidationError("cross entropy: target " + std::to_string(t) + " out of range");
    }
    loss -= std::log(std::max(probs(i, t), std::numeric_limits<S>::min()));
    dlogits(i, t) -= S(1);
  }
  loss /= static_cast<S>(batch);
  dlogits /= static_cast<S>(batch);
  return {loss, dlogits};
}

// Bias-corrected adaptive moment estimation over a fixed parameter list.
template <typename S>
class Adam {
 public:
  explicit Adam(S lr, S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(std::vector<Param<S>*> params) {
    params_ = std::move(params);
    m_.clear();
    v_.clear();
    for (const Param<S>* p : params_) {
      m_.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
    }
    t_ = 0;
  }

  void step() {
    ++t_;
    const S bc1 = S(1) - std::pow(beta1_, static_cast<S>(t_));
    const S bc2 = S(1) - std::pow(beta2_, static_cast<S>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<S>& p = *params_[i];
      if (!p.grad.allFinite()) {
        throw NumericError("non-finite gradient in optimizer step " + std::to_string(t_));
      }
      m_[i] = beta1_ * m_[i] + (S(1) - beta1_) * p.grad;
      v_[i] = beta2_ * v_[i] + (S(1) - beta2_) * p.grad.cwiseProduct(p.grad);
      MatX<S> m_hat = m_[i] / bc1;
      MatX<S> v_hat = v_[i] / bc2;
      p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
    }
  }

  long step_count() const { return t_; }

 private:
  S lr_, beta1_, beta2_, eps_;
  std::vector<Param<S>*> params_;
  std::vector<MatX<S>> m_, v_;
  long t_ = 0;
};

}  // namespace embpred::nn
