// Build smoke test: every public header compiles together and the basic
// pipeline produces a sane fidelity.

#include <gtest/gtest.h>

#include "hwqoc/autodiff.hpp"
#include "hwqoc/checks.hpp"
#include "hwqoc/config.hpp"
#include "hwqoc/e2e.hpp"
#include "hwqoc/hardware.hpp"
#include "hwqoc/harness.hpp"
#include "hwqoc/nn.hpp"
#include "hwqoc/ppo.hpp"
#include "hwqoc/qsim.hpp"
#include "hwqoc/report.hpp"
#include "hwqoc/rng.hpp"
#include "hwqoc/sade_adam.hpp"

TEST(Smoke, PipelineRuns) {
  const hwqoc::HardwareModel hw = hwqoc::demo_hardware(3, 7, 0.01);
  hwqoc::QuantumTask task;
  task.t_steps = 20;
  hwqoc::Simulator sim(hw, task, hwqoc::PhysicalConstants{});
  const hwqoc::MatD s = hwqoc::MatD::Zero(6, 4);
  const double f = sim.fidelity(s);
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0 + 1e-12);
}
