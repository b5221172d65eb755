#pragma once

// f-oscillators: nonlinearity functions f(n), deformed ladder operators
// A = a f(N), their commutator spectrum, and classical amplitude evolution.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/kproduct.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

class NonlinearityFunction {
 public:
  enum class Kind { identity, q_exact, q_quadratic, table };

  NonlinearityFunction() = default;

  static NonlinearityFunction identity() { return {}; }

  /// f(n) = sqrt(sinh(lambda n) / (lambda n)), f(0) = 1.
  static NonlinearityFunction q_exact(double lambda) {
    return NonlinearityFunction(Kind::q_exact, checked_lambda(lambda), {});
  }

  /// f(n) = 1 + (lambda^2 / 12) n^2.
  static NonlinearityFunction q_quadratic(double lambda) {
    return NonlinearityFunction(Kind::q_quadratic, checked_lambda(lambda), {});
  }

  static NonlinearityFunction table(std::vector<double> values) {
    for (double v : values) {
      if (!std::isfinite(v)) throw ValidationError("nonlinearity table has non-finite values");
    }
    return NonlinearityFunction(Kind::table, 0.0, std::move(values));
  }

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  const std::vector<double>& table_values() const { return table_; }

  double operator()(std::size_t n) const {
    const double nd = static_cast<double>(n);
    switch (kind_) {
      case Kind::identity:
        return 1.0;
      case Kind::q_quadratic:
        return 1.0 + lambda_ * lambda_ / 12.0 * nd * nd;
      case Kind::q_exact: {
        const double y = std::abs(lambda_) * nd;
        if (y == 0.0) return 1.0;
        if (y < 700.0) return std::sqrt(std::sinh(y) / y);
        // sinh overflows; log sinh y = y - log 2 up to e^{-2y}.
        return std::exp(0.5 * (y - std::log(2.0) - std::log(y)));
      }
      case Kind::table:
        if (n >= table_.size()) {
          throw ShapeError("nonlinearity table has " + std::to_string(table_.size()) +
                           " entries, level " + std::to_string(n) + " requested");
        }
        return table_[n];
    }
    return 1.0;
  }

  /// f(0), ..., f(dim-1).
  std::vector<double> values(std::size_t dim) const {
    if (kind_ == Kind::table && table_.size() < dim) {
      throw ShapeError("nonlinearity table shorter than dimension " + std::to_string(dim));
    }
    std::vector<double> out(dim);
    for (std::size_t n = 0; n < dim; ++n) out[n] = (*this)(n);
    return out;
  }

  std::vector<cd> complex_values(std::size_t dim) const {
    const auto v = values(dim);
    return {v.begin(), v.end()};
  }

  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::identity: return "identity";
      case Kind::q_exact: return "q_exact";
      case Kind::q_quadratic: return "q_quadratic";
      case Kind::table: return "table";
    }
    return "identity";
  }

 private:
  NonlinearityFunction(Kind kind, double lambda, std::vector<double> table)
      : kind_(kind), lambda_(lambda), table_(std::move(table)) {}

  static double checked_lambda(double lambda) {
    if (!std::isfinite(lambda)) throw ValidationError("lambda must be finite");
    return lambda;
  }

  Kind kind_ = Kind::identity;
  double lambda_ = 0.0;
  std::vector<double> table_;
};

/// A = a diag(f(0), ..., f(dim-1)).
inline FockOperator deformed_annihilator(const NonlinearityFunction& f, std::size_t dim) {
  detail::require_dim(dim);
  const auto fv = f.values(dim);
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n)) * fv[n];
  return FockOperator(std::move(m));
}

/// A^dagger = diag(f) a^dagger.
inline FockOperator deformed_creator(const NonlinearityFunction& f, std::size_t dim) {
  return deformed_annihilator(f, dim).adjoint();
}

/// Diagonal of [A, A^dagger] on the interior levels n < dim - 2, after
/// checking that the interior block is diagonal.
inline std::vector<double> commutator_spectrum(const NonlinearityFunction& f, std::size_t dim,
                                               double tolerance = 1e-12) {
  if (dim < 3) throw InvalidDimension("commutator spectrum needs dim >= 3");
  const FockOperator a = deformed_annihilator(f, dim);
  const ComplexMatrix c = (a * a.adjoint() - a.adjoint() * a).matrix();
  const std::size_t interior = dim - 2;
  std::vector<double> spectrum(interior);
  for (std::size_t m = 0; m < interior; ++m) {
    for (std::size_t n = 0; n < interior; ++n) {
      if (m == n) continue;
      if (std::abs(c(m, n)) > tolerance) {
        throw PrecisionError("[A, A^dagger] has off-diagonal entry " +
                             std::to_string(std::abs(c(m, n))) + " at (" + std::to_string(m) +
                             "," + std::to_string(n) + ")");
      }
    }
    spectrum[m] = c(m, m).real();
  }
  return spectrum;
}

/// Classical amplitude with energy-dependent frequency chi(|a|^2).
struct AmplitudeState {
  cd a0;
  std::function<double(double)> chi;
};

/// a(t) = a0 exp(-i chi(|a0|^2) t).
inline cd evolve_amplitude(const AmplitudeState& state, double t) {
  const double r = std::abs(state.a0);
  const double omega = state.chi(r * r);
  return std::polar(r, std::arg(state.a0) - omega * t);
}

/// K = diag(f(n)), so that k_multiply(A, B) = A f(N) B.
inline KContext k_context_from_f(const NonlinearityFunction& f, std::size_t dim) {
  detail::require_dim(dim);
  const auto fv = f.values(dim);
  ComplexMatrix k = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < dim; ++n) k(n, n) = fv[n];
  return KContext(std::move(k));
}

}  // namespace fmoyal
