#pragma once

// Weyl correspondence: quantizer/dequantizer pair, symbol maps in both
// directions, and Wigner functions. Conventions (hbar = 1):
//
//   U(q,p) = 2 T(2 alpha) P,   D(q,p) = U(q,p) / (2 pi),   alpha = (q + i p)/sqrt(2)
//   symbol_A(x) = Tr[U(x) A],  A = integral of symbol_A(x) D(x) dq dp
//
// U is self-adjoint, so U and its adjoint coincide.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/summation.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;

  cd alpha() const { return {q * kInvSqrt2, p * kInvSqrt2}; }

  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

inline PhasePoint operator+(PhasePoint a, PhasePoint b) { return {a.q + b.q, a.p + b.p}; }

/// Uniform rectangular grid over [q_min, q_max] x [p_min, p_max].
class PhaseGrid {
 public:
  PhaseGrid() : PhaseGrid(-6.0, 6.0, -6.0, 6.0, 121, 121) {}

  PhaseGrid(double q_min, double q_max, double p_min, double p_max, std::size_t nq,
            std::size_t np)
      : q_min_(q_min), q_max_(q_max), p_min_(p_min), p_max_(p_max), nq_(nq), np_(np) {
    if (!(std::isfinite(q_min) && std::isfinite(q_max) && std::isfinite(p_min) &&
          std::isfinite(p_max))) {
      throw ValidationError("grid bounds must be finite");
    }
    if (!(q_min < q_max) || !(p_min < p_max)) {
      throw ValidationError("grid bounds must satisfy min < max");
    }
    if (nq < 2 || np < 2) throw ValidationError("grid needs at least 2 points per axis");
  }

  static PhaseGrid symmetric(double extent, std::size_t points) {
    return PhaseGrid(-extent, extent, -extent, extent, points, points);
  }

  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }
  std::size_t nq() const { return nq_; }
  std::size_t np() const { return np_; }
  std::size_t size() const { return nq_ * np_; }

  double dq() const { return (q_max_ - q_min_) / static_cast<double>(nq_ - 1); }
  double dp() const { return (p_max_ - p_min_) / static_cast<double>(np_ - 1); }
  double q(std::size_t i) const { return q_min_ + static_cast<double>(i) * dq(); }
  double p(std::size_t j) const { return p_min_ + static_cast<double>(j) * dp(); }
  PhasePoint point(std::size_t i, std::size_t j) const { return {q(i), p(j)}; }

  // Trapezoidal weights.
  double q_weight(std::size_t i) const { return (i == 0 || i + 1 == nq_) ? 0.5 * dq() : dq(); }
  double p_weight(std::size_t j) const { return (j == 0 || j + 1 == np_) ? 0.5 * dp() : dp(); }
  double weight(std::size_t i, std::size_t j) const { return q_weight(i) * p_weight(j); }

  double max_radius_squared() const {
    const double qm = std::max(std::abs(q_min_), std::abs(q_max_));
    const double pm = std::max(std::abs(p_min_), std::abs(p_max_));
    return qm * qm + pm * pm;
  }

  friend bool operator==(const PhaseGrid&, const PhaseGrid&) = default;

 private:
  double q_min_, q_max_, p_min_, p_max_;
  std::size_t nq_, np_;
};

/// Complex samples on a PhaseGrid, stored row-major (q index outer).
struct SymbolField {
  PhaseGrid grid;
  std::vector<cd> values;
  bool real_valued = false;
  bool imaginary_valued = false;
  double tolerance = 1e-6;
  /// Non-zero where the sample could not be computed reliably.
  std::vector<std::uint8_t> mask;
  std::vector<std::string> warnings;
  /// (1/2pi) * integral dq dp, set for Wigner functions.
  std::optional<double> normalization;

  SymbolField() = default;
  explicit SymbolField(PhaseGrid g)
      : grid(g), values(g.size(), cd{}), mask(g.size(), 0) {}

  cd& at(std::size_t i, std::size_t j) { return values[i * grid.np() + j]; }
  cd at(std::size_t i, std::size_t j) const { return values[i * grid.np() + j]; }

  double max_abs() const {
    double m = 0.0;
    for (const cd& v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double max_abs_imag() const {
    double m = 0.0;
    for (const cd& v : values) m = std::max(m, std::abs(v.imag()));
    return m;
  }
  double max_abs_real() const {
    double m = 0.0;
    for (const cd& v : values) m = std::max(m, std::abs(v.real()));
    return m;
  }

  /// Sets real_valued / imaginary_valued from the samples.
  void classify() {
    real_valued = max_abs_imag() < tolerance;
    imaginary_valued = max_abs_real() < tolerance;
  }

  std::size_t masked_count() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                  [](std::uint8_t m) { return m != 0; }));
  }
};

/// Trapezoidal integral of the field with measure dq dp.
inline cd integrate(const SymbolField& f) {
  std::vector<cd> terms(f.values.size());
  for (std::size_t i = 0; i < f.grid.nq(); ++i) {
    for (std::size_t j = 0; j < f.grid.np(); ++j) {
      terms[i * f.grid.np() + j] = f.grid.weight(i, j) * f.at(i, j);
    }
  }
  return pairwise_sum(terms);
}

/// Max boundary |value| below rel_tol times max interior |value|.
inline bool decays_at_boundary(const SymbolField& f, double rel_tol = 1e-4) {
  const auto& g = f.grid;
  double boundary = 0.0;
  double interior = 0.0;
  for (std::size_t i = 0; i < g.nq(); ++i) {
    for (std::size_t j = 0; j < g.np(); ++j) {
      const double a = std::abs(f.at(i, j));
      const bool edge = i == 0 || j == 0 || i + 1 == g.nq() || j + 1 == g.np();
      double& slot = edge ? boundary : interior;
      slot = std::max(slot, a);
    }
  }
  if (interior == 0.0) return boundary == 0.0;
  return boundary < rel_tol * interior;
}

inline SymbolField sample_field(const PhaseGrid& grid, auto&& fn) {
  SymbolField f(grid);
  for (std::size_t i = 0; i < grid.nq(); ++i) {
    for (std::size_t j = 0; j < grid.np(); ++j) f.at(i, j) = fn(grid.q(i), grid.p(j));
  }
  f.classify();
  return f;
}

// --- quantizer / dequantizer --------------------------------------------

/// U(x) = 2 T(2 alpha) P.
inline FockOperator quantizer(PhasePoint x, std::size_t dim) {
  return times_parity(displacement(2.0 * x.alpha(), dim)) * cd(2.0);
}

/// D(x) = U(x) / (2 pi) = T(2 alpha) P / pi.
inline FockOperator dequantizer(PhasePoint x, std::size_t dim) {
  return times_parity(displacement(2.0 * x.alpha(), dim)) * cd(1.0 / kPi);
}

namespace detail {

// d_n = sum_m U(x)_{nm} A_{mn} for U(x) = 2 T(2 alpha) P.
inline std::vector<cd> quantizer_product_diagonal(PhasePoint x, const FockOperator& a) {
  const FockOperator t = displacement(2.0 * x.alpha(), a.dim());
  const auto& tm = t.matrix();
  const auto& am = a.matrix();
  std::vector<cd> d(a.dim());
  for (Eigen::Index n = 0; n < tm.rows(); ++n) {
    cd acc{};
    for (Eigen::Index m = 0; m < tm.cols(); ++m) {
      const cd term = tm(n, m) * am(m, n);
      acc += (m % 2 == 0) ? term : -term;
    }
    d[n] = 2.0 * acc;
  }
  return d;
}

inline void warn_grid_extent(SymbolField& f, std::size_t dim) {
  // |2 alpha|^2 = 2 (q^2 + p^2) is the level where displaced parities live.
  if (2.0 * f.grid.max_radius_squared() > 0.5 * static_cast<double>(dim)) {
    f.warnings.push_back("grid-extent: 2(q^2+p^2) reaches " +
                         std::to_string(2.0 * f.grid.max_radius_squared()) +
                         ", beyond dim/2 = " + std::to_string(dim / 2) +
                         "; non trace-class operators are unreliable near the edges");
  }
}

}  // namespace detail

/// Weyl symbol of `a` on the grid: Tr[U(x) a] as a damped trace per point.
inline SymbolField symbol_of(const FockOperator& a, const PhaseGrid& grid,
                             const DampingSchedule& schedule = {}) {
  SymbolField f(grid);
  detail::warn_grid_extent(f, a.dim());
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < grid.nq(); ++i) {
    for (std::size_t j = 0; j < grid.np(); ++j) {
      const auto d = detail::quantizer_product_diagonal(grid.point(i, j), a);
      const DampedTrace tr = damped_trace_diagonal(d, schedule);
      const std::size_t idx = i * grid.np() + j;
      if (!std::isfinite(tr.value.real()) || !std::isfinite(tr.value.imag())) {
        f.mask[idx] = 1;
        f.values[idx] = cd{};
        continue;
      }
      f.values[idx] = tr.value;
      if (!tr.converged && schedule.epsilons().size() >= 2) ++unconverged;
    }
  }
  if (unconverged > 0) {
    f.warnings.push_back("extrapolation: " + std::to_string(unconverged) +
                         " points did not converge");
  }
  if (f.masked_count() > 0) {
    f.warnings.push_back("non-finite: " + std::to_string(f.masked_count()) + " points masked");
  }
  f.classify();
  return f;
}

struct Quantized {
  FockOperator op;
  std::vector<std::string> warnings;
};

/// Operator with the given symbol: trapezoidal quadrature of f(x) D(x) dq dp.
inline Quantized operator_of(const SymbolField& f, std::size_t dim) {
  detail::require_dim(dim);
  const auto& g = f.grid;
  Quantized out{FockOperator::zero(dim), {}};
  if (!decays_at_boundary(f)) {
    out.warnings.push_back("non-decaying: boundary values exceed 1e-4 of the interior maximum");
  }
  const double max_spacing = kPi / std::sqrt(2.0 * static_cast<double>(dim));
  if (g.dq() > max_spacing || g.dp() > max_spacing) {
    out.warnings.push_back("aliasing: grid spacing exceeds pi/sqrt(2 dim) = " +
                           std::to_string(max_spacing));
  }
  PairwiseAccumulator<ComplexMatrix> acc;
  for (std::size_t i = 0; i < g.nq(); ++i) {
    for (std::size_t j = 0; j < g.np(); ++j) {
      const cd v = f.at(i, j);
      if (v == cd{} || f.mask[i * g.np() + j] != 0) continue;
      const FockOperator d = dequantizer(g.point(i, j), dim);
      acc.add(d.matrix() * (v * g.weight(i, j)));
    }
  }
  out.op = FockOperator(acc.total(ComplexMatrix::Zero(dim, dim)));
  return out;
}

struct WignerOptions {
  double hermitian_tolerance = 1e-10;
  double trace_tolerance = 1e-6;
};

/// Wigner function W(x) = 2 Tr[rho T(2 alpha) P], with its normalization
/// (1/2pi) * integral W dq dp attached.
inline SymbolField wigner(const FockOperator& rho, const PhaseGrid& grid,
                          const DampingSchedule& schedule = {},
                          const WignerOptions& options = {}) {
  std::vector<std::string> violations;
  const double herm = (rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff();
  if (herm > options.hermitian_tolerance) {
    violations.push_back("not Hermitian (max |rho - rho^dagger| = " + std::to_string(herm) + ")");
  }
  const DampedTrace tr = damped_trace(rho, schedule);
  if (std::abs(tr.value - 1.0) > options.trace_tolerance) {
    violations.push_back("trace " + std::to_string(tr.value.real()) + "+" +
                         std::to_string(tr.value.imag()) + "i differs from 1");
  }
  if (!violations.empty()) {
    std::string msg = "invalid density operator:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ValidationError(msg);
  }
  SymbolField w = symbol_of(rho, grid, schedule);
  w.normalization = integrate(w).real() / (2.0 * kPi);
  return w;
}

}  // namespace fmoyal
