#include <gtest/gtest.h>

#include <cmath>

#include "qicnn/adam.hpp"
#include "qicnn/ops.hpp"

using namespace qicnn;

namespace {
// Scalar Adam written out by hand, used as the oracle below.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8, m = 0, v = 0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};
}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Parameter p("p", Tensor({2}, std::vector<double>{1.0, -2.0}));
  const Tensor before = p.value;
  Adam adam({&p}, {});
  for (int i = 0; i < 3; ++i) adam.step();
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(adam.first_moment(0), Tensor({2}, 0.0));
}

TEST(Adam, MomentsDecayUnderZeroGradient) {
  Parameter p("p", Tensor({1}, 1.0));
  Adam adam({&p}, {});
  p.grad[0] = 1.0;
  adam.step();
  const double m1 = adam.first_moment(0)[0], v1 = adam.second_moment(0)[0];
  adam.zero_grad();
  adam.step();
  EXPECT_DOUBLE_EQ(adam.first_moment(0)[0], 0.9 * m1);
  EXPECT_DOUBLE_EQ(adam.second_moment(0)[0], 0.999 * v1);
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
  Parameter p("p", Tensor({3}, std::vector<double>{0, 0, 0}));
  p.grad = Tensor({3}, std::vector<double>{2.5, -0.01, 300});
  AdamConfig cfg;
  cfg.lr = 1e-3;
  Adam adam({&p}, cfg);
  adam.step();
  EXPECT_NEAR(p.value[0], -1e-3, 1e-9);
  EXPECT_NEAR(p.value[1], 1e-3, 1e-9);
  EXPECT_NEAR(p.value[2], -1e-3, 1e-9);
}

TEST(Adam, QuadraticConvergesAndMatchesScalarOracle) {
  Parameter w("w", Tensor({1}, 0.0));
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam adam({&w}, cfg);
  ScalarAdam oracle{0.1};
  double w_ref = 0.0;
  for (int i = 0; i < 200; ++i) {
    adam.zero_grad();
    Tape tape;
    tape.backward(sum(square(sub(tape.parameter(w), tape.constant(Tensor({1}, 3.0))))));
    adam.step();
    w_ref = oracle.step(w_ref, 2.0 * (w_ref - 3.0));
  }
  EXPECT_LT(std::abs(w.value[0] - 3.0), 0.05);
  EXPECT_NEAR(w.value[0], w_ref, 1e-12);
}

TEST(Adam, ZeroLearningRateIsBitIdentical) {
  Parameter p("p", Tensor({2}, std::vector<double>{0.123456789, -7.5}));
  const Tensor before = p.value;
  AdamConfig cfg;
  cfg.lr = 0.0;
  Adam adam({&p}, cfg);
  for (int i = 0; i < 50; ++i) {
    p.grad = Tensor({2}, std::vector<double>{0.3 * i, -1.0});
    adam.step();
  }
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(adam.steps(), 50);
}

TEST(Adam, NonFiniteGradientThrowsWithoutTouchingParams) {
  Parameter a("layer.a", Tensor({1}, 1.0)), b("layer.b", Tensor({1}, 1.0));
  Adam adam({&a, &b}, {});
  a.grad[0] = 1.0;
  b.grad[0] = std::nan("");
  try {
    adam.step();
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.b"), std::string::npos);
  }
  EXPECT_EQ(a.value[0], 1.0);
  EXPECT_EQ(b.value[0], 1.0);
}
