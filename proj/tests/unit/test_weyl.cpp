#include <cmath>

#include <gtest/gtest.h>

#include "fmoyal/weyl.hpp"
#include "oracles.hpp"

using namespace fmoyal;

namespace {

double max_error(const SymbolField& f, auto&& reference) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.grid.nq(); ++i) {
    for (std::size_t j = 0; j < f.grid.np(); ++j) {
      m = std::max(m, std::abs(f.at(i, j) - cd(reference(f.grid.q(i), f.grid.p(j)))));
    }
  }
  return m;
}

bool has_warning(const std::vector<std::string>& warnings, const std::string& prefix) {
  for (const auto& w : warnings) {
    if (w.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

}  // namespace

TEST(PhaseGrid, GeometryAndValidation) {
  const PhaseGrid g;
  EXPECT_EQ(g.nq(), 121u);
  EXPECT_DOUBLE_EQ(g.dq(), 0.1);
  EXPECT_DOUBLE_EQ(g.q(60), 0.0);
  EXPECT_DOUBLE_EQ(g.weight(0, 5), 0.05 * 0.1);
  EXPECT_THROW(PhaseGrid(1, 0, -1, 1, 5, 5), ValidationError);
  EXPECT_THROW(PhaseGrid(-1, 1, -1, 1, 1, 5), ValidationError);
  EXPECT_THROW(PhaseGrid(-1, std::nan(""), -1, 1, 5, 5), ValidationError);
}

TEST(Quantizer, SelfAdjoint) {
  for (double q : {-4.0, -1.5, 0.0, 2.5, 4.0}) {
    for (double p : {-4.0, 0.3, 4.0}) {
      EXPECT_TRUE(quantizer({q, p}, 64).is_hermitian(1e-10)) << q << "," << p;
    }
  }
}

TEST(Quantizer, TraceOfDequantizerIsInverseTwoPi) {
  for (PhasePoint x : {PhasePoint{0, 0}, PhasePoint{0.3, -0.2}, PhasePoint{-0.5, 0.6}}) {
    const auto tr = damped_trace(dequantizer(x, 400));
    EXPECT_NEAR(tr.value.real(), 1.0 / (2.0 * kPi), 1e-4);
    EXPECT_NEAR(tr.value.imag(), 0.0, 1e-10);
  }
}

TEST(SymbolOf, IdentityIsConstantOne) {
  const PhaseGrid g = PhaseGrid::symmetric(1.0, 5);
  const DampingSchedule fine({0.4, 0.2, 0.1, 0.05, 0.025}, 4);
  const SymbolField s = symbol_of(FockOperator::identity(600), g, fine);
  EXPECT_LT(max_error(s, [](double, double) { return 1.0; }), 1e-6);
}

TEST(SymbolOf, GridExtentWarning) {
  const SymbolField s = symbol_of(FockOperator::identity(16), PhaseGrid::symmetric(3.0, 3));
  EXPECT_TRUE(has_warning(s.warnings, "grid-extent"));
}

TEST(Wigner, VacuumIsGaussian) {
  const SymbolField w = wigner(projector(fock_state(0, 64)), PhaseGrid{});
  EXPECT_LT(max_error(w, [](double q, double p) { return oracle::coherent_wigner(0, 0, q, p); }),
            1e-6);
  EXPECT_TRUE(w.real_valued);
  ASSERT_TRUE(w.normalization.has_value());
  EXPECT_NEAR(*w.normalization, 1.0, 1e-3);
}

TEST(Wigner, CoherentStateIsDisplacedGaussian) {
  const cd beta(0.7, 0.3);
  const double q0 = kSqrt2 * beta.real(), p0 = kSqrt2 * beta.imag();
  const SymbolField w = wigner(projector(coherent_state(beta, 64)), PhaseGrid{});
  EXPECT_LT(
      max_error(w, [&](double q, double p) { return oracle::coherent_wigner(q0, p0, q, p); }),
      1e-6);
  EXPECT_LT(w.max_abs_imag(), 1e-6);
  EXPECT_NEAR(*w.normalization, 1.0, 1e-3);
}

TEST(Wigner, FirstExcitedState) {
  const SymbolField w = wigner(projector(fock_state(1, 64)), PhaseGrid{});
  EXPECT_NEAR(w.at(60, 60).real(), -2.0, 1e-6);
  EXPECT_LT(max_error(w, oracle::fock1_wigner), 1e-6);
  EXPECT_NEAR(*w.normalization, 1.0, 1e-3);
}

TEST(Wigner, RejectsInvalidDensityOperators) {
  ComplexMatrix m = projector(fock_state(0, 8)).matrix();
  m(0, 1) = 0.3;
  EXPECT_THROW(wigner(FockOperator(m), PhaseGrid::symmetric(1, 3)), ValidationError);
  EXPECT_THROW(wigner(FockOperator::identity(8) * cd(0.5), PhaseGrid::symmetric(1, 3)),
               ValidationError);
}

TEST(TraceRule, IntegratedSymbolEqualsTrace) {
  const PhaseGrid g;
  const std::vector<FockOperator> ops = {
      projector(fock_state(0, 64)), projector(fock_state(3, 64)),
      projector(coherent_state(cd(0.5, -0.4), 64)),
      FockOperator(fock_state(1, 64) * fock_state(2, 64).adjoint())};
  for (const auto& a : ops) {
    const cd lhs = integrate(symbol_of(a, g)) / (2.0 * kPi);
    EXPECT_LT(std::abs(lhs - damped_trace(a).value), 1e-3);
  }
}

TEST(RoundTrip, OperatorOfSymbolRecoversLowProjectors) {
  const PhaseGrid g;
  for (std::size_t level : {0u, 2u, 4u}) {
    const auto a = projector(fock_state(level, 64));
    const Quantized back = operator_of(symbol_of(a, g), 64);
    EXPECT_TRUE(back.warnings.empty());
    const ComplexMatrix diff = (back.op.matrix() - a.matrix()).topLeftCorner(16, 16);
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-4) << "level " << level;
  }
}

TEST(RoundTrip, SmearedDisplacementReproducesItsSymbol) {
  // A Gaussian-smeared dequantizer: integral g(x') D(x') dx' has symbol g.
  // The sampled sum carries a comb at the grid spacing, hence 1e-3.
  const PhaseGrid g;
  const SymbolField smear =
      sample_field(g, [](double q, double p) { return cd(std::exp(-2.0 * ((q - 0.4) * (q - 0.4) + p * p))); });
  const Quantized op = operator_of(smear, 64);
  const SymbolField again = symbol_of(op.op, g);
  double m = 0.0;
  for (std::size_t k = 0; k < smear.values.size(); ++k) {
    m = std::max(m, std::abs(again.values[k] - smear.values[k]));
  }
  EXPECT_LT(m, 1e-3);
}

TEST(OperatorOf, WarnsOnNonDecayingAndCoarseInput) {
  const PhaseGrid coarse = PhaseGrid::symmetric(3.0, 7);
  const SymbolField one = sample_field(coarse, [](double, double) { return cd(1.0); });
  const Quantized q = operator_of(one, 64);
  EXPECT_TRUE(has_warning(q.warnings, "non-decaying"));
  EXPECT_TRUE(has_warning(q.warnings, "aliasing"));
}

TEST(Fields, DecayAndIntegration) {
  const PhaseGrid g;
  const SymbolField gauss =
      sample_field(g, [](double q, double p) { return cd(std::exp(-q * q - p * p)); });
  EXPECT_TRUE(decays_at_boundary(gauss));
  EXPECT_NEAR(integrate(gauss).real(), kPi, 1e-12);
  const SymbolField flat = sample_field(g, [](double, double) { return cd(1.0); });
  EXPECT_FALSE(decays_at_boundary(flat));
}
