#pragma once

// Star-product kernels K(x1, x2; x), with x the evaluation point.
//
// Analytic: the Groenewold kernel and its O(lambda^2) q-deformation.
// Numeric: Tr[D(x1) f(N) D(x2) U(x)] as a damped trace in truncated Fock
// space, for any diagonal insertion f.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/foscillator.hpp"
#include "fmoyal/types.hpp"
#include "fmoyal/weyl.hpp"

namespace fmoyal {

struct KernelSample {
  PhasePoint x1, x2, x_out;
  cd value;
  /// Extrapolation-stage difference for numeric kernels; 0 for analytic ones.
  double error_estimate = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;
};

struct StructureSample {
  PhasePoint x1, x2, x_out;
  cd value;
};

/// Symplectic phase 2(q p1 - q1 p + q1 p2 - q2 p1 + q2 p - q p2), grouped as
/// 2(S(1,2) - S(2,1)) so that swapping x1 and x2 negates it bit for bit.
inline double groenewold_phase(PhasePoint x1, PhasePoint x2, PhasePoint x) {
  const double forward = x.q * x1.p + x1.q * x2.p + x2.q * x.p;
  const double backward = x.q * x2.p + x2.q * x1.p + x1.q * x.p;
  return 2.0 * (forward - backward);
}

/// mu = (q - q2 - q1)^2 + (p - p2 - p1)^2.
inline double deformation_mu(PhasePoint x1, PhasePoint x2, PhasePoint x) {
  const double dq = x.q - (x1.q + x2.q);
  const double dp = x.p - (x1.p + x2.p);
  return dq * dq + dp * dp;
}

inline KernelSample groenewold_analytic(PhasePoint x1, PhasePoint x2, PhasePoint x) {
  return {x1, x2, x, std::polar(1.0 / (kPi * kPi), groenewold_phase(x1, x2, x)), 0.0, true, {}};
}

/// K_G (1 + (lambda^2/192)(mu - 1)^2).
inline KernelSample lambda_kernel_analytic(double lambda, PhasePoint x1, PhasePoint x2,
                                           PhasePoint x) {
  KernelSample s = groenewold_analytic(x1, x2, x);
  const double m1 = deformation_mu(x1, x2, x) - 1.0;
  s.value *= 1.0 + lambda * lambda / 192.0 * m1 * m1;
  return s;
}

/// The three displaced parities of a kernel triple, built once so several
/// insertions can be traced against them.
class TraceKernel {
 public:
  TraceKernel(PhasePoint x1, PhasePoint x2, PhasePoint x, std::size_t dim)
      : x1_(x1), x2_(x2), x_(x), d1_(dequantizer(x1, dim)), d2_(dequantizer(x2, dim)),
        u_(quantizer(x, dim)) {}

  std::size_t dim() const { return d1_.dim(); }

  /// Damped trace of D(x1) diag(insertion) D(x2) U(x).
  KernelSample evaluate(std::span<const cd> insertion, const DampingSchedule& schedule) const {
    if (insertion.size() < dim()) {
      throw ShapeError("insertion has " + std::to_string(insertion.size()) +
                       " levels, need " + std::to_string(dim()));
    }
    ComplexVector f(dim());
    for (std::size_t n = 0; n < dim(); ++n) {
      if (!std::isfinite(insertion[n].real()) || !std::isfinite(insertion[n].imag())) {
        throw ValidationError("insertion value at level " + std::to_string(n) + " is not finite");
      }
      f(n) = insertion[n];
    }
    const FockOperator left(d1_.matrix() * f.asDiagonal() * d2_.matrix());
    const auto diag = product_diagonal(left, u_);
    const DampedTrace tr = damped_trace_diagonal(diag, schedule);

    KernelSample s{x1_, x2_, x_, tr.value, tr.error_estimate, tr.converged, {}};
    if (!tr.converged) s.warnings.push_back("extrapolation did not converge");
    if (tr.truncation_warning) {
      s.warnings.push_back("truncation: exp(-eps_min * dim) >= 1e-6");
    }
    if (dim() < 64) s.warnings.push_back("dim below 64");
    return s;
  }

 private:
  PhasePoint x1_, x2_, x_;
  FockOperator d1_, d2_, u_;
};

inline KernelSample kernel_numeric_diagonal(std::span<const cd> insertion, PhasePoint x1,
                                            PhasePoint x2, PhasePoint x, std::size_t dim,
                                            const DampingSchedule& schedule = {}) {
  return TraceKernel(x1, x2, x, dim).evaluate(insertion, schedule);
}

/// Tr[D(x1) f(N) D(x2) U(x)]; with f = 1 this is the numeric Groenewold kernel.
inline KernelSample kernel_numeric(const NonlinearityFunction& f, PhasePoint x1, PhasePoint x2,
                                   PhasePoint x, std::size_t dim,
                                   const DampingSchedule& schedule = {}) {
  const auto fv = f.complex_values(dim);
  return kernel_numeric_diagonal(fv, x1, x2, x, dim, schedule);
}

inline std::vector<cd> tau_insertion(double tau, std::size_t dim) {
  std::vector<cd> f(dim);
  for (std::size_t n = 0; n < dim; ++n) f[n] = std::polar(1.0, tau * static_cast<double>(n));
  return f;
}

/// Kernel with the generating insertion f(n) = exp(i tau n).
inline KernelSample tau_kernel(double tau, PhasePoint x1, PhasePoint x2, PhasePoint x,
                               std::size_t dim, const DampingSchedule& schedule = {}) {
  return kernel_numeric_diagonal(tau_insertion(tau, dim), x1, x2, x, dim, schedule);
}

inline std::vector<cd> number_squared_insertion(std::size_t dim) {
  std::vector<cd> f(dim);
  for (std::size_t n = 0; n < dim; ++n) {
    const double nd = static_cast<double>(n);
    f[n] = nd * nd;
  }
  return f;
}

struct DeformationReport {
  PhasePoint x1, x2, x_out;
  double mu = 0.0;
  KernelSample base;     // f = 1
  KernelSample squared;  // f(n) = n^2
  cd r_num;              // squared / base
  double r_ana = 0.0;    // (mu - 1)^2 / 16
  double abs_diff = 0.0;
  double error_estimate = 0.0;
};

/// Compares Tr[D1 N^2 D2 U] / Tr[D1 D2 U] with (mu - 1)^2 / 16, the value
/// implied by the closed-form O(lambda^2) kernel for f = 1 + (lambda^2/12) n^2.
inline DeformationReport deformation_check(PhasePoint x1, PhasePoint x2, PhasePoint x,
                                           std::size_t dim,
                                           const DampingSchedule& schedule = {}) {
  const TraceKernel kernel(x1, x2, x, dim);
  DeformationReport r{x1, x2, x, deformation_mu(x1, x2, x), {}, {}, {}, 0.0, 0.0, 0.0};
  r.base = kernel.evaluate(std::vector<cd>(dim, cd(1.0)), schedule);
  r.squared = kernel.evaluate(number_squared_insertion(dim), schedule);
  const double base_abs = std::abs(r.base.value);
  if (base_abs < 10.0 * r.base.error_estimate) {
    throw IllConditioned("base kernel |K| = " + std::to_string(base_abs) +
                         " is below 10x its error estimate " +
                         std::to_string(r.base.error_estimate));
  }
  r.r_num = r.squared.value / r.base.value;
  const double m1 = r.mu - 1.0;
  r.r_ana = m1 * m1 / 16.0;
  r.abs_diff = std::abs(r.r_num - r.r_ana);
  r.error_estimate =
      (r.squared.error_estimate + std::abs(r.r_num) * r.base.error_estimate) / base_abs;
  return r;
}

struct QuadraticFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // R ~ c0 + c1 mu + c2 mu^2
  double max_residual = 0.0;
};

/// Least-squares fit of Re(r_num) against mu.
inline QuadraticFit fit_quadratic_in_mu(std::span<const DeformationReport> reports) {
  if (reports.size() < 3) throw ValidationError("quadratic fit needs at least 3 reports");
  Eigen::MatrixXd a(reports.size(), 3);
  Eigen::VectorXd y(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double mu = reports[i].mu;
    a(i, 0) = 1.0;
    a(i, 1) = mu;
    a(i, 2) = mu * mu;
    y(i) = reports[i].r_num.real();
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  QuadraticFit fit{c(0), c(1), c(2), (a * c - y).cwiseAbs().maxCoeff()};
  return fit;
}

struct StructureKind {
  enum class Kind { groenewold, lambda };
  Kind kind = Kind::groenewold;
  double lambda = 0.0;

  static StructureKind groenewold() { return {}; }
  static StructureKind deformed(double lam) { return {Kind::lambda, lam}; }
};

/// C(x1, x2; x) = K(x1, x2; x) - K(x2, x1; x).
inline StructureSample structure_constants(StructureKind kind, PhasePoint x1, PhasePoint x2,
                                           PhasePoint x) {
  cd c = groenewold_analytic(x1, x2, x).value - groenewold_analytic(x2, x1, x).value;
  if (kind.kind == StructureKind::Kind::lambda) {
    const double m1 = deformation_mu(x1, x2, x) - 1.0;
    c *= 1.0 + kind.lambda * kind.lambda / 192.0 * m1 * m1;
  }
  return {x1, x2, x, c};
}

}  // namespace fmoyal
