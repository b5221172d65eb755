#include <cmath>

#include <gtest/gtest.h>

#include "fmoyal/convergence.hpp"
#include "fmoyal/kernels.hpp"

using namespace fmoyal;

TEST(ConvergenceSweep, GroenewoldKernelOverDims) {
  const PhasePoint x1{0.3, 0.0}, x2{0.0, 0.2}, x{0.1, 0.1};
  auto target = [&](std::size_t dim, const DampingSchedule& s) {
    const auto k = kernel_numeric(NonlinearityFunction::identity(), x1, x2, x, dim, s);
    return Estimate{k.value, k.error_estimate};
  };
  const auto r = convergence_sweep(target, {64, 128, 256}, {DampingSchedule{}});
  ASSERT_EQ(r.by_dim.size(), 3u);
  EXPECT_FALSE(r.by_dim[0].successive_difference.has_value());
  EXPECT_LE(*r.by_dim[2].successive_difference, *r.by_dim[1].successive_difference);
  EXPECT_TRUE(r.dim_monotone);
}

TEST(ConvergenceSweep, ParityTraceOverSchedules) {
  auto target = [](std::size_t dim, const DampingSchedule& s) {
    const auto tr = damped_trace(times_parity(displacement(cd(0.5, 0.5), dim)), s);
    return Estimate{tr.value, tr.error_estimate};
  };
  const std::vector<DampingSchedule> schedules = {
      DampingSchedule{}, DampingSchedule({0.3, 0.15, 0.075}, 2),
      DampingSchedule({0.4, 0.2, 0.1, 0.05, 0.025}, 3)};
  const auto r = convergence_sweep(target, {300}, schedules);
  for (const auto& row : r.by_schedule) EXPECT_NEAR(row.estimate.value.real(), 0.5, 1e-3);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.warnings[0], "single dim: no convergence estimate over dim");
}

TEST(ConvergenceSweep, FlagsNonMonotoneAndEmptyLists) {
  int calls = 0;
  const std::vector<double> seq = {1.0, 1.1, 1.101, 1.2};
  auto target = [&](std::size_t, const DampingSchedule&) { return Estimate{seq[calls++ % 4], 0}; };
  const auto r = convergence_sweep(target, {8, 16, 32, 64}, {DampingSchedule{}});
  EXPECT_FALSE(r.dim_monotone);
  EXPECT_THROW(convergence_sweep(target, {}, {DampingSchedule{}}), ValidationError);
  EXPECT_THROW(convergence_sweep(target, {8}, {}), ValidationError);
}
