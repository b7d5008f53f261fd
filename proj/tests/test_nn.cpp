#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "embpred/nn.hpp"
#include "embpred/rng.hpp"
#include "gradcheck.hpp"

using namespace embpred;
using namespace embpred::nn;

namespace {
constexpr int kUnitCases = 10;  // the acceptance suite runs the full 50
}

TEST_CASE("embedding gathers rows and accumulates gradients") {
  Embedding<double> emb(3, 2);
  emb.table().value << 1, 0, 0, 1, 5, 5;
  VecXi idx(2);
  idx << 2, 0;
  MatXd out = emb.forward(idx);
  CHECK(out(0, 0) == 5);
  CHECK(out(0, 1) == 5);
  CHECK(out(1, 0) == 1);
  CHECK(out(1, 1) == 0);

  // repeated index: both row gradients land in the same table row
  VecXi rep(2);
  rep << 0, 0;
  emb.table().zero_grad();
  emb.forward(rep);
  MatXd dy(2, 2);
  dy << 1, 2, 3, 4;
  emb.backward(dy);
  CHECK(emb.table().grad(0, 0) == 4);
  CHECK(emb.table().grad(0, 1) == 6);
  CHECK(emb.table().grad(1, 0) == 0);
}

TEST_CASE("embedding rejects out-of-range indices") {
  Embedding<double> emb(3, 2);
  VecXi idx(1);
  idx << 3;
  CHECK_THROWS_AS(emb.forward(idx), ValidationError);
}

TEST_CASE("linear with identity weights is the identity") {
  Linear<double> lin(3, 3);
  lin.weight().value = MatXd::Identity(3, 3);
  lin.bias().value = MatXd::Zero(1, 3);
  MatXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(lin.forward(x) == x);
}

TEST_CASE("linear on zero input broadcasts the bias") {
  Linear<double> lin(2, 3);
  lin.weight().value = MatXd::Random(2, 3);
  lin.bias().value << 1, 2, 3;
  MatXd x = MatXd::Zero(4, 2);
  MatXd y = lin.forward(x);
  for (Index i = 0; i < 4; ++i) {
    CHECK(y(i, 0) == 1);
    CHECK(y(i, 2) == 3);
  }
}

TEST_CASE("linear shape mismatch is reported") {
  Linear<double> lin(3, 2);
  MatXd x(2, 4);
  x.setZero();
  CHECK_THROWS_AS(lin.forward(x), ValidationError);
}

TEST_CASE("relu clamps negatives") {
  ReLU<double> relu;
  MatXd x(1, 3);
  x << -1, 0, 2;
  MatXd y = relu.forward(x);
  CHECK(y(0, 0) == 0);
  CHECK(y(0, 1) == 0);
  CHECK(y(0, 2) == 2);

  MatXd pos = MatXd::Constant(2, 2, 3.5);
  CHECK(relu.forward(pos) == pos);
}

TEST_CASE("batch norm train mode normalizes the batch") {
  BatchNorm1d<double> bn(2);
  MatXd x(4, 2);
  x << 1, 10, 2, 20, 3, 30, 4, 40;
  MatXd y = bn.forward(x, Mode::train);
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(y.col(j).mean()) < 1e-5);
    const double var = (y.col(j).array() - y.col(j).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("batch norm eval mode applies the affine map") {
  BatchNorm1d<double> bn(2, 0.1, 1e-12);
  bn.gamma().value << 2, 3;
  bn.beta().value << 1, -1;
  bn.running_mean().setZero();
  bn.running_var().setOnes();
  MatXd x(1, 2);
  x << 5, 7;
  MatXd y = bn.forward(x, Mode::eval);
  CHECK(y(0, 0) == doctest::Approx(11).epsilon(1e-9));
  CHECK(y(0, 1) == doctest::Approx(20).epsilon(1e-9));
}

TEST_CASE("batch norm rejects a train batch of one") {
  BatchNorm1d<double> bn(2);
  MatXd x(1, 2);
  x.setZero();
  CHECK_THROWS_AS(bn.forward(x, Mode::train), ValidationError);
}

TEST_CASE("dropout is the identity when p=0 or in eval mode") {
  Rng rng(1);
  MatXd x = MatXd::Random(3, 3);
  Dropout<double> zero(0.0);
  CHECK(zero.forward(x, Mode::train, rng) == x);
  Dropout<double> half(0.5);
  CHECK(half.forward(x, Mode::eval, rng) == x);
}

TEST_CASE("dropout keeps the expected value at p=0.15") {
  Rng rng(7);
  const Index n = 400;
  MatXd x = MatXd::Constant(n, 250, 1.0);  // 1e5 elements
  Dropout<double> drop(0.15);
  MatXd y = drop.forward(x, Mode::train, rng);
  const double zero_fraction = (y.array() == 0.0).count() / static_cast<double>(y.size());
  CHECK(zero_fraction == doctest::Approx(0.15).epsilon(0.07));
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("softmax cross entropy on uniform logits is ln 2") {
  MatXd logits = MatXd::Zero(1, 2);
  VecXi t(1);
  t << 1;
  auto [loss, grad] = softmax_cross_entropy(logits, t);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(grad(0, 0) == doctest::Approx(0.5));
  CHECK(grad(0, 1) == doctest::Approx(-0.5));
}

TEST_CASE("softmax cross entropy is stable for extreme logits") {
  MatXd logits(1, 2);
  logits << 100, -100;
  VecXi t(1);
  t << 0;
  auto [loss, grad] = softmax_cross_entropy(logits, t);
  CHECK(std::isfinite(loss));
  CHECK(loss < 1e-6);
  CHECK(std::isfinite(grad(0, 1)));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  MatXd logits = gradcheck::random_matrix<double>(rng, 6, 2, -5, 5);
  MatXd p = softmax(logits);
  for (Index i = 0; i < p.rows(); ++i) {
    CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  Param<double> p;
  p.init(2, 2);
  p.value.setConstant(1.5);
  Adam<double> adam(0.1);
  adam.attach({&p});
  adam.step();
  CHECK(p.value == MatXd::Constant(2, 2, 1.5));
}

TEST_CASE("adam first step is approximately -lr * sign(g)") {
  Param<double> p;
  p.init(1, 3);
  p.value << 1, 1, 1;
  p.grad << 0.3, -2.0, 7.0;
  Adam<double> adam(0.01);
  adam.attach({&p});
  adam.step();
  // bias-corrected: m_hat = g, v_hat = g^2 -> update = -lr * g/(|g| + eps)
  CHECK(p.value(0, 0) == doctest::Approx(1 - 0.01).epsilon(1e-4));
  CHECK(p.value(0, 1) == doctest::Approx(1 + 0.01).epsilon(1e-4));
  CHECK(p.value(0, 2) == doctest::Approx(1 - 0.01).epsilon(1e-4));
}

TEST_CASE("adam aborts on non-finite gradients") {
  Param<double> p;
  p.init(1, 1);
  p.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Adam<double> adam(0.01);
  adam.attach({&p});
  CHECK_THROWS_AS(adam.step(), NumericError);
}

TEST_CASE("gradient checks: every layer, both precisions") {
  for (int seed = 0; seed < kUnitCases; ++seed) {
    CAPTURE(seed);
    CHECK(gradcheck::check_embedding<float>(seed) < 1e-3);
    CHECK(gradcheck::check_embedding<double>(seed) < 1e-6);
    CHECK(gradcheck::check_linear<float>(seed) < 1e-3);
    CHECK(gradcheck::check_linear<double>(seed) < 1e-6);
    CHECK(gradcheck::check_relu<float>(seed) < 1e-3);
    CHECK(gradcheck::check_relu<double>(seed) < 1e-6);
    CHECK(gradcheck::check_batchnorm<float>(seed) < 1e-3);
    CHECK(gradcheck::check_batchnorm<double>(seed) < 1e-6);
    CHECK(gradcheck::check_dropout<float>(seed) < 1e-3);
    CHECK(gradcheck::check_dropout<double>(seed) < 1e-6);
    CHECK(gradcheck::check_softmax_cross_entropy<float>(seed) < 1e-3);
    CHECK(gradcheck::check_softmax_cross_entropy<double>(seed) < 1e-6);
  }
}

TEST_CASE("gradient checks: composed network") {
  for (int seed = 0; seed < kUnitCases; ++seed) {
    CAPTURE(seed);
    CHECK(gradcheck::check_embnet<float>(seed) < 1e-3);
    CHECK(gradcheck::check_embnet<double>(seed) < 1e-6);
  }
}
