#pragma once

// Star products of phase-space symbols.
//
// Operator route: symbol_of(operator_of(fa) f(N) operator_of(fb)).
// Kernel route: trapezoidal double quadrature of fa(x1) fb(x2) K(x1, x2; x)
// with the analytic kernel. The kernel depends on x1 only through x1 - x in
// everything but a separable phase, so the x2 sum is computed once per
// offset x1 - x and reused across output points. The result is the same
// trapezoidal sum as the direct four-fold loop, reordered.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/foscillator.hpp"
#include "fmoyal/types.hpp"
#include "fmoyal/weyl.hpp"

namespace fmoyal {

enum class StarRoute { kernel_quadrature, operator_product };

struct StarKernel {
  enum class Kind { groenewold, f_deformed };
  Kind kind = Kind::groenewold;
  NonlinearityFunction f;

  static StarKernel groenewold() { return {}; }
  static StarKernel deformed(NonlinearityFunction fn) { return {Kind::f_deformed, std::move(fn)}; }

  bool is_identity() const {
    return kind == Kind::groenewold || f.kind() == NonlinearityFunction::Kind::identity;
  }
};

struct StarConfig {
  StarRoute route = StarRoute::operator_product;
  StarKernel kernel;
  PhaseGrid grid;
  std::size_t dim = 64;
  DampingSchedule schedule;
};

namespace detail {

inline void require_same_grid(const SymbolField& a, const SymbolField& b, const StarConfig& cfg) {
  if (!(a.grid == b.grid) || !(a.grid == cfg.grid)) {
    throw ShapeError("star product inputs and config must share one grid");
  }
  if (a.values.size() != a.grid.size() || b.values.size() != b.grid.size()) {
    throw ShapeError("symbol field sample count does not match its grid");
  }
}

inline void merge_warnings(std::vector<std::string>& into, const std::vector<std::string>& from,
                           const char* prefix) {
  for (const auto& w : from) into.push_back(std::string(prefix) + w);
}

// Coefficient on (mu - 1)^2 for the kernel of the configured deformation.
inline double kernel_deformation_coefficient(const StarKernel& k) {
  if (k.is_identity()) return 0.0;
  using K = NonlinearityFunction::Kind;
  switch (k.f.kind()) {
    case K::q_exact:
    case K::q_quadratic:
      return k.f.lambda() * k.f.lambda() / 192.0;
    default:
      throw ContractViolation(
          "kernel route has a closed-form kernel only for identity and q-type nonlinearities; "
          "use the operator route for tabulated f");
  }
}

// Row-major (2n-1) x (2m-1) table over offsets di = i - a, dj = j - b.
struct OffsetTable {
  std::size_t rows = 0, cols = 0;
  std::vector<double> re, im;
};

// M(di, dj) = sum_{k,l} w_k w_l fb(k,l) q_k^qa p_l^pb exp(2i(u p_l - q_k v)),
// u = di*dq, v = dj*dp.
inline ComplexMatrix moment_transform(const SymbolField& fb, int qa, int pb) {
  const auto& g = fb.grid;
  const auto nq = static_cast<Eigen::Index>(g.nq());
  const auto np = static_cast<Eigen::Index>(g.np());
  ComplexMatrix weighted(nq, np);
  for (Eigen::Index k = 0; k < nq; ++k) {
    for (Eigen::Index l = 0; l < np; ++l) {
      const double qk = g.q(k), pl = g.p(l);
      weighted(k, l) = fb.at(k, l) * (g.weight(k, l) * std::pow(qk, qa) * std::pow(pl, pb));
    }
  }
  const Eigen::Index ndi = 2 * nq - 1, ndj = 2 * np - 1;
  ComplexMatrix e1(np, ndi);
  for (Eigen::Index l = 0; l < np; ++l) {
    for (Eigen::Index di = 0; di < ndi; ++di) {
      const double u = static_cast<double>(di - (nq - 1)) * g.dq();
      e1(l, di) = std::polar(1.0, 2.0 * u * g.p(l));
    }
  }
  ComplexMatrix e2(ndj, nq);
  for (Eigen::Index dj = 0; dj < ndj; ++dj) {
    for (Eigen::Index k = 0; k < nq; ++k) {
      const double v = static_cast<double>(dj - (np - 1)) * g.dp();
      e2(dj, k) = std::polar(1.0, -2.0 * g.q(k) * v);
    }
  }
  const ComplexMatrix h = weighted * e1;  // (k, di)
  return (e2 * h).transpose();            // (di, dj)
}

inline OffsetTable inner_transform(const SymbolField& fb, double deformation) {
  const auto& g = fb.grid;
  const ComplexMatrix m00 = moment_transform(fb, 0, 0);
  ComplexMatrix total = m00;
  if (deformation != 0.0) {
    const ComplexMatrix m10 = moment_transform(fb, 1, 0), m01 = moment_transform(fb, 0, 1);
    const ComplexMatrix m20 = moment_transform(fb, 2, 0), m02 = moment_transform(fb, 0, 2);
    const ComplexMatrix m11 = moment_transform(fb, 1, 1);
    const ComplexMatrix m30 = moment_transform(fb, 3, 0), m12 = moment_transform(fb, 1, 2);
    const ComplexMatrix m21 = moment_transform(fb, 2, 1), m03 = moment_transform(fb, 0, 3);
    const ComplexMatrix m40 = moment_transform(fb, 4, 0), m22 = moment_transform(fb, 2, 2);
    const ComplexMatrix m04 = moment_transform(fb, 0, 4);
    const auto nq = static_cast<Eigen::Index>(g.nq());
    const auto np = static_cast<Eigen::Index>(g.np());
    for (Eigen::Index di = 0; di < total.rows(); ++di) {
      for (Eigen::Index dj = 0; dj < total.cols(); ++dj) {
        // s = x - x1; mu - 1 = A - 2 s_q q2 - 2 s_p p2 + (q2^2 + p2^2).
        const double sq = -static_cast<double>(di - (nq - 1)) * g.dq();
        const double sp = -static_cast<double>(dj - (np - 1)) * g.dp();
        const double a = sq * sq + sp * sp - 1.0;
        const cd r = m20(di, dj) + m02(di, dj);
        const cd squared = a * a * m00(di, dj) + 4.0 * sq * sq * m20(di, dj) +
                           4.0 * sp * sp * m02(di, dj) +
                           (m40(di, dj) + 2.0 * m22(di, dj) + m04(di, dj)) -
                           4.0 * a * sq * m10(di, dj) - 4.0 * a * sp * m01(di, dj) +
                           2.0 * a * r + 8.0 * sq * sp * m11(di, dj) -
                           4.0 * sq * (m30(di, dj) + m12(di, dj)) -
                           4.0 * sp * (m21(di, dj) + m03(di, dj));
        total(di, dj) += deformation * squared;
      }
    }
  }
  OffsetTable t;
  t.rows = static_cast<std::size_t>(total.rows());
  t.cols = static_cast<std::size_t>(total.cols());
  t.re.resize(t.rows * t.cols);
  t.im.resize(t.rows * t.cols);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      t.re[r * t.cols + c] = total(r, c).real();
      t.im[r * t.cols + c] = total(r, c).imag();
    }
  }
  return t;
}

inline SymbolField kernel_route_star(const SymbolField& fa, const SymbolField& fb,
                                     const StarConfig& cfg) {
  if (!decays_at_boundary(fa) || !decays_at_boundary(fb)) {
    throw ContractViolation("kernel-quadrature route needs inputs that decay at the grid boundary");
  }
  const double deformation = kernel_deformation_coefficient(cfg.kernel);
  const auto& g = cfg.grid;
  const std::size_t nq = g.nq(), np = g.np();
  const OffsetTable f = inner_transform(fb, deformation);

  // e^{2i q_a p_j} and e^{-2i q_i p_b}.
  std::vector<double> out_re(nq * np, 0.0), out_im(nq * np, 0.0);
  std::vector<double> c_re(np), c_im(np), r_re(np), r_im(np);
  std::vector<double> e4_re(nq * np), e4_im(nq * np);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t b = 0; b < np; ++b) {
      const cd e = std::polar(1.0, -2.0 * g.q(i) * g.p(b));
      e4_re[i * np + b] = e.real();
      e4_im[i * np + b] = e.imag();
    }
  }
  for (std::size_t a = 0; a < nq; ++a) {
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < np; ++j) {
        const cd c = fa.at(i, j) * g.weight(i, j) * std::polar(1.0, 2.0 * g.q(a) * g.p(j));
        c_re[j] = c.real();
        c_im[j] = c.imag();
      }
      const std::size_t di = i + (nq - 1) - a;
      const double* f_re = &f.re[di * f.cols];
      const double* f_im = &f.im[di * f.cols];
      for (std::size_t b = 0; b < np; ++b) {
        // F(di, j - b) sits at column j - b + (np - 1).
        const double* fr = f_re + (np - 1) - b;
        const double* fi = f_im + (np - 1) - b;
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < np; ++j) {
          sr += c_re[j] * fr[j] - c_im[j] * fi[j];
          si += c_re[j] * fi[j] + c_im[j] * fr[j];
        }
        r_re[b] = sr;
        r_im[b] = si;
      }
      for (std::size_t b = 0; b < np; ++b) {
        const double er = e4_re[i * np + b], ei = e4_im[i * np + b];
        out_re[a * np + b] += er * r_re[b] - ei * r_im[b];
        out_im[a * np + b] += er * r_im[b] + ei * r_re[b];
      }
    }
  }
  SymbolField out(g);
  const double norm = 1.0 / (kPi * kPi);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = norm * cd(out_re[k], out_im[k]);
  out.classify();
  return out;
}

struct OperatorPair {
  FockOperator a, b;
  std::vector<std::string> warnings;
};

inline OperatorPair quantize_pair(const SymbolField& fa, const SymbolField& fb, std::size_t dim) {
  Quantized qa = operator_of(fa, dim);
  Quantized qb = operator_of(fb, dim);
  OperatorPair out{std::move(qa.op), std::move(qb.op), {}};
  merge_warnings(out.warnings, qa.warnings, "left operand: ");
  merge_warnings(out.warnings, qb.warnings, "right operand: ");
  return out;
}

// a f(N) b, skipping the insertion when f is the identity.
inline FockOperator inserted_product(const FockOperator& a, const FockOperator& b,
                                     const StarKernel& kernel) {
  if (kernel.is_identity()) return a * b;
  const auto fv = kernel.f.complex_values(a.dim());
  ComplexVector f(a.dim());
  for (std::size_t n = 0; n < a.dim(); ++n) f(n) = fv[n];
  return FockOperator(a.matrix() * f.asDiagonal() * b.matrix());
}

}  // namespace detail

inline SymbolField star(const SymbolField& fa, const SymbolField& fb, const StarConfig& cfg) {
  detail::require_same_grid(fa, fb, cfg);
  if (cfg.route == StarRoute::kernel_quadrature) return detail::kernel_route_star(fa, fb, cfg);

  auto ops = detail::quantize_pair(fa, fb, cfg.dim);
  SymbolField out = symbol_of(detail::inserted_product(ops.a, ops.b, cfg.kernel), cfg.grid,
                              cfg.schedule);
  detail::merge_warnings(out.warnings, ops.warnings, "");
  return out;
}

/// star(fa, fb) - star(fb, fa), no normalization applied.
inline SymbolField moyal_bracket(const SymbolField& fa, const SymbolField& fb,
                                 const StarConfig& cfg) {
  detail::require_same_grid(fa, fb, cfg);
  SymbolField out;
  if (cfg.route == StarRoute::kernel_quadrature) {
    const SymbolField ab = star(fa, fb, cfg);
    const SymbolField ba = star(fb, fa, cfg);
    out = SymbolField(cfg.grid);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = ab.values[k] - ba.values[k];
  } else {
    auto ops = detail::quantize_pair(fa, fb, cfg.dim);
    const FockOperator c = detail::inserted_product(ops.a, ops.b, cfg.kernel) -
                           detail::inserted_product(ops.b, ops.a, cfg.kernel);
    out = symbol_of(c, cfg.grid, cfg.schedule);
    detail::merge_warnings(out.warnings, ops.warnings, "");
  }
  out.classify();
  return out;
}

/// Operator-level bracket symbol: symbol_of(a f b - b f a). Used for operators
/// that have no decaying symbol (quadratures, polynomials).
inline SymbolField operator_bracket_symbol(const FockOperator& a, const FockOperator& b,
                                           const StarConfig& cfg) {
  const FockOperator c = detail::inserted_product(a, b, cfg.kernel) -
                         detail::inserted_product(b, a, cfg.kernel);
  return symbol_of(c, cfg.grid, cfg.schedule);
}

/// max |{{a,b},c} + {{b,c},a} + {{c,a},b}| over the grid.
inline double jacobi_defect(const SymbolField& fa, const SymbolField& fb, const SymbolField& fc,
                            const StarConfig& cfg) {
  detail::require_same_grid(fa, fb, cfg);
  detail::require_same_grid(fa, fc, cfg);
  if (cfg.route == StarRoute::kernel_quadrature) {
    const SymbolField t1 = moyal_bracket(moyal_bracket(fa, fb, cfg), fc, cfg);
    const SymbolField t2 = moyal_bracket(moyal_bracket(fb, fc, cfg), fa, cfg);
    const SymbolField t3 = moyal_bracket(moyal_bracket(fc, fa, cfg), fb, cfg);
    double m = 0.0;
    for (std::size_t k = 0; k < t1.values.size(); ++k) {
      m = std::max(m, std::abs(t1.values[k] + t2.values[k] + t3.values[k]));
    }
    return m;
  }
  const FockOperator a = operator_of(fa, cfg.dim).op;
  const FockOperator b = operator_of(fb, cfg.dim).op;
  const FockOperator c = operator_of(fc, cfg.dim).op;
  auto bracket = [&](const FockOperator& x, const FockOperator& y) {
    return detail::inserted_product(x, y, cfg.kernel) - detail::inserted_product(y, x, cfg.kernel);
  };
  const FockOperator j = bracket(bracket(a, b), c) + bracket(bracket(b, c), a) +
                         bracket(bracket(c, a), b);
  return symbol_of(j, cfg.grid, cfg.schedule).max_abs();
}

}  // namespace fmoyal
