#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fmoyal/fock.hpp"
#include "fmoyal/random.hpp"
#include "oracles.hpp"

using namespace fmoyal;

namespace {

struct FrozenElement {
  cd alpha;
  int m, n;
  cd value;
};

// 40-digit mpmath evaluations of <m|exp(alpha a^+ - alpha^* a)|n>.
const std::vector<FrozenElement> kFrozen = {
    {{0.7, -0.4}, 0, 0, {0.72252735364207220517, 0.0}},
    {{0.7, -0.4}, 3, 5, {0.24047831302199122784, 0.40808440997671248225}},
    {{0.7, -0.4}, 10, 2, {-0.0019664569435053608894, 0.003141989799158950698}},
    {{0.7, -0.4}, 40, 37, {0.0009737075278759767287, -0.072888963515288239737}},
    {{3.0, 1.0}, 50, 60, {-0.11795820947278796617, 0.0089717893597723838197}},
    {{3.0, 1.0}, 5, 30, {0.028718854294027790248, 0.14950415723078996414}},
    {{8.0, 0.0}, 20, 3, {-0.00061580530947279335106, 0.0}},
    {{8.0, 0.0}, 3, 20, {0.00061580530947279335106, 0.0}},
    {{0.0, 2.5}, 120, 100, {0.054905166058512926167, 0.0}},
};

double interior_defect(const ComplexMatrix& m, std::size_t keep) {
  const auto k = static_cast<Eigen::Index>(keep);
  return (m.topLeftCorner(k, k) - ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(FockOperator, RejectsBadShapes) {
  EXPECT_THROW(FockOperator(ComplexMatrix::Zero(3, 4)), ShapeError);
  EXPECT_THROW(FockOperator(ComplexMatrix::Zero(1, 1)), InvalidDimension);
  EXPECT_THROW(FockOperator::identity(1), InvalidDimension);
  ComplexMatrix bad = ComplexMatrix::Identity(3, 3);
  bad(1, 2) = cd(std::nan(""), 0.0);
  EXPECT_THROW(FockOperator{bad}, Error);
  EXPECT_THROW(FockOperator::identity(3) * FockOperator::identity(4), ShapeError);
}

TEST(FockOperator, LadderCommutatorOnInteriorLevels) {
  const std::size_t dim = 12;
  const auto a = annihilator(dim), ad = creator(dim);
  const ComplexMatrix c = (a * ad - ad * a).matrix();
  EXPECT_LT(interior_defect(c, dim - 1), 1e-14);
  EXPECT_NEAR(c(dim - 1, dim - 1).real(), -static_cast<double>(dim - 1), 1e-12);
  const ComplexMatrix n = (ad * a).matrix();
  EXPECT_LT((n - number_operator(dim).matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FockOperator, TimesParityMatchesMatrixProduct) {
  SeededRng rng(7);
  const FockOperator a(rng.complex_matrix(9));
  const ComplexMatrix expected = a.matrix() * parity_operator(9).matrix();
  EXPECT_EQ((times_parity(a).matrix() - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Displacement, FrozenHighPrecisionValues) {
  for (const auto& f : kFrozen) {
    const std::size_t dim = static_cast<std::size_t>(std::max(f.m, f.n)) + 8;
    const auto t = displacement(f.alpha, dim);
    const cd got = t(f.m, f.n);
    EXPECT_NEAR(got.real(), f.value.real(), 1e-13) << "alpha=" << f.alpha << " m=" << f.m
                                                  << " n=" << f.n;
    EXPECT_NEAR(got.imag(), f.value.imag(), 1e-13) << "alpha=" << f.alpha << " m=" << f.m
                                                  << " n=" << f.n;
  }
}

TEST(Displacement, MatchesFiniteSumFormula) {
  for (cd alpha : {cd(0.3, 0.1), cd(-1.1, 0.6), cd(0.0, -1.7), cd(2.0, 0.0)}) {
    const auto t = displacement(alpha, 14);
    for (int m = 0; m < 12; ++m) {
      for (int n = 0; n < 12; ++n) {
        EXPECT_LT(std::abs(t(m, n) - oracle::displacement_sum(alpha, m, n)), 1e-12)
            << alpha << " " << m << " " << n;
      }
    }
  }
}

TEST(Displacement, MatchesMatrixExponentialOfLargerTruncation) {
  const cd alpha(1.2, -0.5);
  const auto t = displacement(alpha, 40);
  const auto ref = oracle::displacement_expm(alpha, 40, 160);
  EXPECT_LT((t.matrix() - ref).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Displacement, ZeroIsIdentity) {
  EXPECT_EQ((displacement(0.0, 10).matrix() - ComplexMatrix::Identity(10, 10)).cwiseAbs().maxCoeff(),
            0.0);
}

TEST(Displacement, UnitaryAwayFromTruncationCorner) {
  for (cd alpha : {cd(0.5, 0.0), cd(1.0, 0.0), cd(1.0, 1.0), cd(-2.0, 0.5)}) {
    const std::size_t dim = 96;
    const std::size_t buffer = leakage_buffer(alpha, dim);
    ASSERT_LT(buffer, dim);
    const auto t = displacement(alpha, dim);
    EXPECT_LT(interior_defect((t * t.adjoint()).matrix(), dim - buffer), 1e-10) << alpha;
    EXPECT_LT(interior_defect((t * displacement(-alpha, dim)).matrix(), dim - buffer), 1e-10);
  }
}

TEST(Displacement, ParityReversesDisplacement) {
  const cd alpha(0.8, -1.3);
  const auto p = parity_operator(30);
  const ComplexMatrix lhs = (p * displacement(alpha, 30) * p).matrix();
  EXPECT_LT((lhs - displacement(-alpha, 30).matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Displacement, RejectsNonFiniteAlpha) {
  EXPECT_THROW(displacement(cd(std::nan(""), 0.0), 8), Error);
}

TEST(States, CoherentStateIsDisplacedVacuum) {
  const cd beta(0.7, 0.3);
  const std::size_t dim = 40;
  const ComplexVector psi = coherent_state(beta, dim);
  const ComplexVector ref = displacement(beta, dim).matrix().col(0);
  EXPECT_LT((psi - ref).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(psi.squaredNorm(), 1.0, 1e-12);
  EXPECT_EQ(fock_state(3, 5)(3), cd(1.0));
  EXPECT_THROW(fock_state(5, 5), Error);
}

TEST(DampingSchedule, DefaultsAndValidation) {
  const DampingSchedule s;
  EXPECT_EQ(s.epsilons(), (std::vector<double>{0.4, 0.2, 0.1, 0.05}));
  EXPECT_EQ(s.extrapolation_order(), 2u);
  EXPECT_THROW(DampingSchedule({}, 0), ScheduleError);
  EXPECT_THROW(DampingSchedule({0.1, 0.2}, 1), ScheduleError);
  EXPECT_THROW(DampingSchedule({0.0}, 0), ScheduleError);
  EXPECT_THROW(DampingSchedule({2.5}, 0), ScheduleError);
  EXPECT_THROW(DampingSchedule({0.2}, 1), ScheduleError);
  EXPECT_THROW(DampingSchedule({0.4, 0.2}, 2), ScheduleError);
  EXPECT_NO_THROW(DampingSchedule({0.1}, 0));
}

TEST(DampedTrace, GeometricParitySeries) {
  // sum e^{-eps n} (-1)^n = 1 / (1 + e^{-eps}); at eps = 0.1 this is frozen.
  const std::size_t dim = 600;
  std::vector<cd> d(dim);
  for (std::size_t n = 0; n < dim; ++n) d[n] = (n % 2 == 0) ? 1.0 : -1.0;
  const auto single = damped_trace_diagonal(d, DampingSchedule({0.1}, 0));
  EXPECT_NEAR(single.value.real(), 0.52497918747893998748, 1e-14);
  EXPECT_FALSE(single.converged);
  EXPECT_EQ(single.error_estimate, 0.0);

  const auto full = damped_trace_diagonal(d, DampingSchedule{});
  EXPECT_NEAR(full.value.real(), 0.5, 1e-4);
  EXPECT_TRUE(full.converged);
  EXPECT_FALSE(full.absolutely_convergent);
  ASSERT_EQ(full.stages.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const double e = DampingSchedule{}.epsilons()[i];
    EXPECT_NEAR(full.stages[i].real(), 1.0 / (1.0 + std::exp(-e)), 1e-13);
  }
}

TEST(DampedTrace, ParityDisplacementStagesMatchAbelClosedForm) {
  const std::size_t dim = 400;
  for (cd gamma : {cd(0.0, 0.0), cd(0.5, 0.0), cd(1.0, 1.0), cd(0.0, 2.0)}) {
    const auto tr = damped_trace(times_parity(displacement(gamma, dim)));
    const double x = std::norm(gamma);
    if (tr.absolutely_convergent) continue;
    ASSERT_EQ(tr.stages.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(tr.stages[i].real(),
                  oracle::abel_parity_trace(x, DampingSchedule{}.epsilons()[i]), 1e-8)
          << gamma;
    }
    EXPECT_NEAR(tr.value.real(), oracle::parity_trace_limit, 1e-3) << gamma;
  }
}

TEST(DampedTrace, NumberMomentsMatchAbelRatios) {
  // The n^2 weight needs e^{-eps_min dim} dim^2 to be negligible.
  const std::size_t dim = 1000;
  const DampingSchedule fine({0.4, 0.2, 0.1, 0.05, 0.025}, 4);
  for (cd gamma : {cd(0.6, 0.2), cd(1.3, -0.4)}) {
    const double x = std::norm(gamma);
    const auto tp = times_parity(displacement(gamma, dim));
    std::vector<cd> d0(dim), d1(dim), d2(dim);
    for (std::size_t n = 0; n < dim; ++n) {
      const double nd = static_cast<double>(n);
      d0[n] = tp(n, n);
      d1[n] = nd * d0[n];
      d2[n] = nd * nd * d0[n];
    }
    const cd base = damped_trace_diagonal(d0, fine).value;
    const cd first = damped_trace_diagonal(d1, fine).value;
    const cd second = damped_trace_diagonal(d2, fine).value;
    EXPECT_NEAR((first / base).real(), oracle::number_moment_ratio(x), 1e-3);
    EXPECT_NEAR((second / base).real(), oracle::number_squared_moment_ratio(x), 1e-3);
  }
}

TEST(DampedTrace, TraceClassOperatorsSumExactly) {
  const auto rho = projector(coherent_state(cd(0.4, -0.2), 64));
  const auto tr = damped_trace(rho);
  EXPECT_TRUE(tr.absolutely_convergent);
  EXPECT_NEAR(tr.value.real(), 1.0, 1e-13);
}

TEST(DampedTrace, TruncationWarning) {
  std::vector<cd> d(40, cd(1.0));
  d[1] = -1.0;
  const auto tr = damped_trace_diagonal(d, DampingSchedule{});
  EXPECT_TRUE(tr.truncation_warning);
}

TEST(Extrapolation, ExactForPolynomialsOfMatchingOrder) {
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  std::vector<cd> v;
  for (double e : eps) v.emplace_back(3.0 - 2.0 * e + 5.0 * e * e, e);
  const auto ex = extrapolate_to_zero(eps, v, 2);
  EXPECT_NEAR(ex.value.real(), 3.0, 1e-12);
  EXPECT_NEAR(ex.value.imag(), 0.0, 1e-12);
}
