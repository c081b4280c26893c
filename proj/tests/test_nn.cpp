#include <gtest/gtest.h>

#include <cmath>

#include "hwqoc/nn.hpp"

using namespace hwqoc;
using nn::Act;
using nn::AdamState;
using nn::Conv1d;
using nn::Mlp;

TEST(Mlp, ForwardDeterministicGivenParamsAndInput) {
  Mlp net({{3, 8, 2}, {Act::kTanh, Act::kIdentity}}, 5);
  Eigen::VectorXd x(3);
  x << 0.1, -2.0, 0.7;
  EXPECT_TRUE(net.forward(x) == net.forward(x));
}

TEST(Mlp, SameSeedSameInit) {
  Mlp a({{4, 4, 1}, {Act::kTanh, Act::kIdentity}}, 9);
  Mlp b({{4, 4, 1}, {Act::kTanh, Act::kIdentity}}, 9);
  EXPECT_TRUE(a.params() == b.params());
}

TEST(Mlp, ZeroWeightScaleZeroOutput) {
  Mlp net({{2, 4, 3}, {Act::kTanh, Act::kTanh}}, 1, /*weight_scale=*/0.0);
  Eigen::VectorXd x(2);
  x << 1.0, -1.0;
  EXPECT_DOUBLE_EQ(net.forward(x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  // Scalar loss L = sum(output): dL/dtheta via backward against central
  // differences on a 2-layer net.
  Mlp net({{3, 5, 2}, {Act::kTanh, Act::kIdentity}}, 7);
  Eigen::VectorXd x(3);
  x << 0.3, -0.8, 1.2;

  Mlp::Tape tape;
  net.forward(x, &tape);
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(net.params().size());
  net.backward(tape, Eigen::VectorXd::Ones(2), dtheta);

  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < net.params().size(); ++i) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double up = net.forward(x).sum();
    net.params()[i] = keep - h;
    const double dn = net.forward(x).sum();
    net.params()[i] = keep;
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst, std::abs(dtheta[i] - fd) / std::max(std::abs(fd), 1e-8));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Mlp, BackwardInputGradientMatchesFiniteDifferences) {
  Mlp net({{4, 6, 1}, {Act::kRelu, Act::kIdentity}}, 3);
  Eigen::VectorXd x(4);
  x << 0.5, -0.2, 0.9, 0.1;
  Mlp::Tape tape;
  net.forward(x, &tape);
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(net.params().size());
  const Eigen::VectorXd dx = net.backward(tape, Eigen::VectorXd::Ones(1), dtheta);

  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd up = x, dn = x;
    up[i] += h;
    dn[i] -= h;
    const double fd = (net.forward(up).sum() - net.forward(dn).sum()) / (2.0 * h);
    EXPECT_NEAR(dx[i], fd, 1e-6);
  }
}

TEST(Conv1d, BackwardMatchesFiniteDifferences) {
  Conv1d conv(2, 3, 3, 11);
  Eigen::MatrixXd x(2, 5);
  x << 0.1, -0.4, 0.8, 0.2, -0.9, 1.1, 0.3, -0.2, 0.6, 0.4;

  Conv1d::Tape tape;
  const Eigen::MatrixXd y = conv.forward(x, &tape);
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(conv.params().size());
  const Eigen::MatrixXd dx =
      conv.backward(tape, Eigen::MatrixXd::Ones(y.rows(), y.cols()), dtheta);

  const double h = 1e-6;
  for (int i = 0; i < conv.params().size(); ++i) {
    const double keep = conv.params()[i];
    conv.params()[i] = keep + h;
    const double up = conv.forward(x).sum();
    conv.params()[i] = keep - h;
    const double dn = conv.forward(x).sum();
    conv.params()[i] = keep;
    EXPECT_NEAR(dtheta[i], (up - dn) / (2.0 * h), 1e-5);
  }
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 5; ++c) {
      Eigen::MatrixXd up = x, dn = x;
      up(r, c) += h;
      dn(r, c) -= h;
      EXPECT_NEAR(dx(r, c), (conv.forward(up).sum() - conv.forward(dn).sum()) / (2.0 * h),
                  1e-5);
    }
}

TEST(Conv1d, EvenKernelRejected) {
  EXPECT_THROW(Conv1d(1, 1, 4, 1), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Eigen::VectorXd p(3);
  p << 1.0, -2.0, 3.0;
  const Eigen::VectorXd keep = p;
  AdamState st;
  nn::adam_step(p, Eigen::VectorXd::Zero(3), st, 0.1);
  EXPECT_TRUE(p == keep);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
  Eigen::VectorXd p(2);
  p << 0.5, -0.5;
  const Eigen::VectorXd keep = p;
  Eigen::VectorXd g(2);
  g << 10.0, -3.0;
  AdamState st;
  nn::adam_step(p, g, st, 0.0);
  EXPECT_TRUE(p == keep);
}

TEST(Adam, QuadraticConvergesToKnownMinimum) {
  // L(x) = (x - 2)^2 from x = -5. Adam moves at most about lr per step, so
  // give it room to cross the 7-unit gap and ring down.
  Eigen::VectorXd x(1);
  x << -5.0;
  AdamState st;
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd g(1);
    g << 2.0 * (x[0] - 2.0);
    nn::adam_step(x, g, st, 0.1);
  }
  EXPECT_NEAR(x[0], 2.0, 1e-3);
}

TEST(Adam, GlobalNormClipReportsPreClipNorm) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;  // norm 5
  AdamState st;
  const double norm = nn::adam_step(p, g, st, 0.01, /*clip=*/1.0);
  EXPECT_DOUBLE_EQ(norm, 5.0);
}

TEST(Adam, ClippedStepMatchesManuallyScaledGradient) {
  Eigen::VectorXd p1 = Eigen::VectorXd::Zero(2), p2 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  AdamState s1, s2;
  nn::adam_step(p1, g, s1, 0.01, /*clip=*/1.0);
  nn::adam_step(p2, Eigen::VectorXd(g / 5.0), s2, 0.01, /*clip=*/0.0);
  EXPECT_NEAR((p1 - p2).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Adam, MultiTensorSharesOneClipBudget) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1), b = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd ga(1), gb(1);
  ga << 3.0;
  gb << 4.0;
  AdamState st;
  const double norm =
      nn::adam_step({&a, &b}, {&ga, &gb}, st, 0.01, /*clip=*/10.0);
  EXPECT_DOUBLE_EQ(norm, 5.0);  // sqrt(3^2 + 4^2) across both tensors
}
