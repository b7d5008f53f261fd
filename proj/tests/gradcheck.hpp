#pragma once

// Central finite-difference gradient checks shared by the unit tests and the
// acceptance suite. Checks run in both precisions: float against 1e-3, double
// (the shadow configuration) against 1e-6.

#include <algorithm>
#include <cmath>
#include <utility>

#include "embpred/model.hpp"
#include "embpred/nn.hpp"
#include "embpred/rng.hpp"
#include "embpred/types.hpp"

namespace gradcheck {

using embpred::Index;
using embpred::MatX;
using embpred::Rng;
using embpred::VecXi;

template <typename S>
struct Tolerances;
template <>
struct Tolerances<float> {
  static constexpr double step = 1e-2;
  static constexpr double tol = 1e-3;
};
template <>
struct Tolerances<double> {
  static constexpr double step = 1e-5;
  static constexpr double tol = 1e-6;
};

// Worst-case relative error (floored at magnitude 1) between the analytic
// gradient of x and central differences of the objective f().
template <typename S, typename F>
double max_rel_err(MatX<S>& x, const MatX<S>& analytic, F&& f) {
  const double h = Tolerances<S>::step;
  double worst = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const S saved = x(i, j);
      const S xp = static_cast<S>(static_cast<double>(saved) + h);
      const S xm = static_cast<S>(static_cast<double>(saved) - h);
      x(i, j) = xp;
      const double fp = f();
      x(i, j) = xm;
      const double fm = f();
      x(i, j) = saved;
      const double numeric = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
      const double a = static_cast<double>(analytic(i, j));
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <typename S>
MatX<S> random_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  MatX<S> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = static_cast<S>(rng.uniform(lo, hi));
  }
  return m;
}

template <typename S>
double weighted_sum(const MatX<S>& y, const MatX<S>& c) {
  return static_cast<double>(y.cwiseProduct(c).sum());
}

template <typename S>
double check_embedding(std::uint64_t seed) {
  Rng rng(seed);
  const Index n = 3 + rng.uniform_int(4);
  const Index d = 2 + rng.uniform_int(3);
  const Index batch = 2 + rng.uniform_int(5);
  embpred::nn::Embedding<S> emb(n, d);
  emb.table().value = random_matrix<S>(rng, n, d);
  VecXi idx(batch);
  for (Index b = 0; b < batch; ++b) idx[b] = static_cast<std::int32_t>(rng.uniform_int(n));
  const MatX<S> c = random_matrix<S>(rng, batch, d, 0.5, 1.5);

  emb.table().zero_grad();
  emb.forward(idx);
  emb.backward(c);
  MatX<S> analytic = emb.table().grad;

  auto f = [&]() {
    embpred::nn::Embedding<S> e2 = emb;
    return weighted_sum(e2.forward(idx), c);
  };
  return max_rel_err(emb.table().value, analytic, f);
}

template <typename S>
double check_linear(std::uint64_t seed) {
  Rng rng(seed);
  const Index in = 2 + rng.uniform_int(4);
  const Index out = 2 + rng.uniform_int(3);
  const Index batch = 2 + rng.uniform_int(4);
  embpred::nn::Linear<S> lin(in, out);
  lin.weight().value = random_matrix<S>(rng, in, out);
  lin.bias().value = random_matrix<S>(rng, 1, out);
  MatX<S> x = random_matrix<S>(rng, batch, in);
  const MatX<S> c = random_matrix<S>(rng, batch, out, 0.5, 1.5);

  lin.weight().zero_grad();
  lin.bias().zero_grad();
  lin.forward(x);
  MatX<S> dx = lin.backward(c);

  double worst = 0;
  auto f = [&]() {
    embpred::nn::Linear<S> l2 = lin;
    return weighted_sum(l2.forward(x), c);
  };
  worst = std::max(worst, max_rel_err(lin.weight().value, MatX<S>(lin.weight().grad), f));
  worst = std::max(worst, max_rel_err(lin.bias().value, MatX<S>(lin.bias().grad), f));
  worst = std::max(worst, max_rel_err(x, dx, f));
  return worst;
}

template <typename S>
double check_relu(std::uint64_t seed) {
  Rng rng(seed);
  const Index rows = 2 + rng.uniform_int(4);
  const Index cols = 2 + rng.uniform_int(4);
  MatX<S> x = random_matrix<S>(rng, rows, cols);
  // keep inputs away from the kink
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (std::abs(static_cast<double>(x(i, j))) < 0.05) x(i, j) = S(0.25);
    }
  }
  const MatX<S> c = random_matrix<S>(rng, rows, cols, 0.5, 1.5);
  embpred::nn::ReLU<S> relu;
  relu.forward(x);
  MatX<S> dx = relu.backward(c);
  auto f = [&]() {
    embpred::nn::ReLU<S> r2;
    return weighted_sum(r2.forward(x), c);
  };
  return max_rel_err(x, dx, f);
}

template <typename S>
double check_batchnorm(std::uint64_t seed) {
  Rng rng(seed);
  const Index batch = 3 + rng.uniform_int(4);
  const Index features = 2 + rng.uniform_int(3);
  embpred::nn::BatchNorm1d<S> proto(features);
  proto.gamma().value = random_matrix<S>(rng, 1, features, 0.5, 1.5);
  proto.beta().value = random_matrix<S>(rng, 1, features, -0.5, 0.5);
  MatX<S> x = random_matrix<S>(rng, batch, features, -2.0, 2.0);
  // spread the batch so the variance path is well conditioned
  for (Index j = 0; j < features; ++j) x(0, j) += S(2);
  const MatX<S> c = random_matrix<S>(rng, batch, features, 0.5, 1.5);

  embpred::nn::BatchNorm1d<S> bn = proto;
  bn.gamma().zero_grad();
  bn.beta().zero_grad();
  bn.forward(x, embpred::nn::Mode::train);
  MatX<S> dx = bn.backward(c);

  auto f = [&]() {
    embpred::nn::BatchNorm1d<S> b2 = proto;
    return weighted_sum(b2.forward(x, embpred::nn::Mode::train), c);
  };
  double worst = max_rel_err(x, dx, f);
  worst = std::max(worst, max_rel_err(proto.gamma().value, MatX<S>(bn.gamma().grad), f));
  worst = std::max(worst, max_rel_err(proto.beta().value, MatX<S>(bn.beta().grad), f));
  return worst;
}

template <typename S>
double check_dropout(std::uint64_t seed) {
  Rng rng(seed);
  const Index rows = 2 + rng.uniform_int(4);
  const Index cols = 2 + rng.uniform_int(4);
  const S p = S(0.3);
  MatX<S> x = random_matrix<S>(rng, rows, cols);
  MatX<S> mask(rows, cols);
  const S scale = S(1) / (S(1) - p);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) mask(i, j) = rng.bernoulli(0.3) ? S(0) : scale;
  }
  const MatX<S> c = random_matrix<S>(rng, rows, cols, 0.5, 1.5);
  embpred::nn::Dropout<S> drop(p);
  drop.forward_with_mask(x, mask);
  MatX<S> dx = drop.backward(c);
  auto f = [&]() {
    embpred::nn::Dropout<S> d2(p);
    return weighted_sum(d2.forward_with_mask(x, mask), c);
  };
  return max_rel_err(x, dx, f);
}

template <typename S>
double check_softmax_cross_entropy(std::uint64_t seed) {
  Rng rng(seed);
  const Index batch = 2 + rng.uniform_int(5);
  MatX<S> logits = random_matrix<S>(rng, batch, 2, -2.0, 2.0);
  VecXi targets(batch);
  for (Index b = 0; b < batch; ++b) targets[b] = static_cast<std::int32_t>(rng.uniform_int(2));

  MatX<S> analytic = embpred::nn::softmax_cross_entropy(logits, targets).second;
  auto f = [&]() {
    return static_cast<double>(embpred::nn::softmax_cross_entropy(logits, targets).first);
  };
  return max_rel_err(logits, analytic, f);
}

// Composed network: every parameter against finite differences of the full
// cross-entropy objective, batch-norm paths in train mode, dropout disabled.
template <typename S>
double check_embnet(std::uint64_t seed) {
  Rng rng(seed);
  embpred::ModelConfig config;
  config.hidden_sizes = {5, 4};
  config.emb_dropout = 0.0;
  config.hidden_dropout = 0.0;
  config.seed = seed;

  std::vector<std::pair<std::string, Index>> cat_specs = {{"a", 3}, {"b", 5}};
  const Index n_cont = 2;
  const Index batch = 4;
  embpred::EmbNet<S> net0(cat_specs, n_cont, config);
  net0.set_mode(embpred::nn::Mode::train);

  embpred::MatXi cat(batch, 2);
  MatX<S> cont = random_matrix<S>(rng, batch, n_cont, -1.5, 1.5);
  VecXi targets(batch);
  for (Index b = 0; b < batch; ++b) {
    cat(b, 0) = static_cast<std::int32_t>(rng.uniform_int(3));
    cat(b, 1) = static_cast<std::int32_t>(rng.uniform_int(5));
    targets[b] = static_cast<std::int32_t>(rng.uniform_int(2));
  }

  embpred::EmbNet<S> net_a = net0;
  net_a.zero_grad();
  MatX<S> logits = net_a.forward(cat, cont);
  auto [loss, dlogits] = embpred::nn::softmax_cross_entropy(logits, targets);
  (void)loss;
  net_a.backward(dlogits);

  auto params0 = net0.parameters();
  auto params_a = net_a.parameters();
  auto f = [&]() {
    embpred::EmbNet<S> copy = net0;
    copy.set_mode(embpred::nn::Mode::train);
    return static_cast<double>(
        embpred::nn::softmax_cross_entropy(copy.forward(cat, cont), targets).first);
  };
  double worst = 0;
  for (std::size_t i = 0; i < params0.size(); ++i) {
    worst = std::max(worst, max_rel_err(params0[i]->value, MatX<S>(params_a[i]->grad), f));
  }
  return worst;
}

}  // namespace gradcheck
