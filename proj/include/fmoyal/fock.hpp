#pragma once

// Truncated Fock-space algebra for a single bosonic mode.
//
// Operators are dense complex matrices in the number basis |0>,...,|N-1>.
// Displacement operators are filled from their closed-form Laguerre matrix
// elements, never by exponentiating the truncated generator, so every entry
// is exact up to rounding. Products of truncated operators are only trusted
// away from the top levels; see leakage_buffer().

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fmoyal/summation.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

namespace detail {

inline void require_dim(std::size_t dim) {
  if (dim < 2) {
    throw InvalidDimension("truncation dimension must be at least 2, got " +
                           std::to_string(dim));
  }
}

}  // namespace detail

class FockOperator {
 public:
  explicit FockOperator(ComplexMatrix entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols()) {
      throw ShapeError("operator matrix must be square, got " +
                       std::to_string(m_.rows()) + "x" +
                       std::to_string(m_.cols()));
    }
    detail::require_dim(static_cast<std::size_t>(m_.rows()));
    if (!m_.allFinite()) throw PrecisionError("operator has non-finite entries");
  }

  static FockOperator identity(std::size_t dim) {
    detail::require_dim(dim);
    return FockOperator(ComplexMatrix::Identity(dim, dim));
  }

  static FockOperator zero(std::size_t dim) {
    detail::require_dim(dim);
    return FockOperator(ComplexMatrix::Zero(dim, dim));
  }

  static FockOperator diagonal(std::span<const cd> values) {
    ComplexMatrix m = ComplexMatrix::Zero(values.size(), values.size());
    for (std::size_t n = 0; n < values.size(); ++n) m(n, n) = values[n];
    return FockOperator(std::move(m));
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  cd operator()(std::size_t m, std::size_t n) const { return m_(m, n); }
  const ComplexMatrix& matrix() const { return m_; }

  FockOperator adjoint() const { return FockOperator(m_.adjoint()); }

  // Largest |entry|.
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  bool is_hermitian(double tol) const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }

  FockOperator& operator+=(const FockOperator& other) {
    check_same_dim(other);
    m_ += other.m_;
    return *this;
  }
  FockOperator& operator-=(const FockOperator& other) {
    check_same_dim(other);
    m_ -= other.m_;
    return *this;
  }
  FockOperator& operator*=(cd s) {
    m_ *= s;
    return *this;
  }

  friend FockOperator operator+(FockOperator a, const FockOperator& b) { return a += b; }
  friend FockOperator operator-(FockOperator a, const FockOperator& b) { return a -= b; }
  friend FockOperator operator*(FockOperator a, cd s) { return a *= s; }
  friend FockOperator operator*(cd s, FockOperator a) { return a *= s; }
  friend FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    a.check_same_dim(b);
    return FockOperator(a.m_ * b.m_);
  }

 private:
  void check_same_dim(const FockOperator& other) const {
    if (other.dim() != dim()) {
      throw ShapeError("dimension mismatch: " + std::to_string(dim()) + " vs " +
                       std::to_string(other.dim()));
    }
  }

  ComplexMatrix m_;
};

inline FockOperator multiply(const FockOperator& a, const FockOperator& b) { return a * b; }
inline FockOperator adjoint(const FockOperator& a) { return a.adjoint(); }

/// a|n> = sqrt(n)|n-1>.
inline FockOperator annihilator(std::size_t dim) {
  detail::require_dim(dim);
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return FockOperator(std::move(m));
}

inline FockOperator creator(std::size_t dim) { return annihilator(dim).adjoint(); }

inline FockOperator number_operator(std::size_t dim) {
  detail::require_dim(dim);
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
  return FockOperator(std::move(m));
}

/// exp(i pi a^dagger a) = diag((-1)^n).
inline FockOperator parity_operator(std::size_t dim) {
  detail::require_dim(dim);
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < dim; ++n) m(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return FockOperator(std::move(m));
}

/// Multiplies column n by (-1)^n, i.e. returns a * parity without a matrix product.
inline FockOperator times_parity(const FockOperator& a) {
  ComplexMatrix m = a.matrix();
  for (Eigen::Index n = 1; n < m.cols(); n += 2) m.col(n) = -m.col(n);
  return FockOperator(std::move(m));
}

/// Displacement operator T(alpha) = exp(alpha a^dagger - conj(alpha) a).
///
/// For m >= n, <m|T|n> = sqrt(n!/m!) alpha^(m-n) e^{-|alpha|^2/2} L_n^(m-n)(|alpha|^2),
/// and <n|T|m> = (-1)^(m-n) conj(<m|T|n>) up to the phase convention. Each
/// band k = m - n is generated by the three-term Laguerre recurrence applied
/// to the normalized sequence sqrt(n!/(n+k)!) L_n^(k), whose magnitude is that
/// of the matrix element itself. The starting value
/// x^{k/2} e^{-x/2} / sqrt(k!) is carried as a logarithm.
inline FockOperator displacement(cd alpha, std::size_t dim) {
  detail::require_dim(dim);
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw InputError("displacement amplitude must be finite");
  }
  const double x = std::norm(alpha);
  if (x == 0.0) return FockOperator::identity(dim);

  const double theta = std::arg(alpha);
  const double log_x = std::log(x);
  std::vector<double> root(2 * dim + 1);
  for (std::size_t i = 0; i < root.size(); ++i) root[i] = std::sqrt(static_cast<double>(i));

  constexpr double kRescale = 1e150;
  const double log_rescale = std::log(kRescale);

  ComplexMatrix m(dim, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double kd = static_cast<double>(k);
    const cd lower_phase = std::polar(1.0, kd * theta);
    const cd upper_phase = (k % 2 == 0 ? 1.0 : -1.0) * std::conj(lower_phase);

    double log_scale = 0.5 * kd * log_x - 0.5 * x - 0.5 * std::lgamma(kd + 1.0);
    double scale = std::exp(log_scale);
    double prev = 0.0;
    double cur = 1.0;
    const std::size_t len = dim - k;
    for (std::size_t n = 0; n < len; ++n) {
      if (n > 0) {
        const double nd = static_cast<double>(n - 1);
        const double next =
            ((2.0 * nd + 1.0 + kd - x) * cur - root[n - 1] * root[n - 1 + k] * prev) /
            (root[n] * root[n + k]);
        prev = cur;
        cur = next;
        if (std::abs(cur) > kRescale) {
          cur /= kRescale;
          prev /= kRescale;
          log_scale += log_rescale;
          scale = std::exp(log_scale);
        }
      }
      const double value = cur * scale;
      m(n + k, n) = value * lower_phase;
      if (k > 0) m(n, n + k) = value * upper_phase;
    }
  }
  if (!m.allFinite()) {
    throw PrecisionError("displacement matrix elements overflowed for |alpha|^2 = " +
                         std::to_string(x));
  }
  return FockOperator(std::move(m));
}

/// Number of top levels to discard before trusting products or unitarity of
/// T(alpha) in a dim-level truncation. The band of T(alpha) around level n has
/// width of order 2|alpha|sqrt(n), so the buffer grows with sqrt(dim).
inline std::size_t leakage_buffer(cd alpha, std::size_t dim) {
  const double r = std::abs(alpha);
  return static_cast<std::size_t>(
      std::ceil(2.0 * r * std::sqrt(static_cast<double>(dim)) + 4.0 * r * r + 8.0));
}

/// diag(a * b) in O(dim^2).
inline std::vector<cd> product_diagonal(const FockOperator& a, const FockOperator& b) {
  if (a.dim() != b.dim()) throw ShapeError("dimension mismatch in product diagonal");
  const auto& am = a.matrix();
  const auto& bm = b.matrix();
  std::vector<cd> d(a.dim());
  for (Eigen::Index n = 0; n < am.rows(); ++n) {
    d[n] = am.row(n).transpose().cwiseProduct(bm.col(n)).sum();
  }
  return d;
}

// --- states -------------------------------------------------------------

inline ComplexVector fock_state(std::size_t level, std::size_t dim) {
  detail::require_dim(dim);
  if (level >= dim) throw InvalidDimension("Fock level outside truncation");
  ComplexVector v = ComplexVector::Zero(dim);
  v(level) = 1.0;
  return v;
}

/// |beta> = T(beta)|0>, coefficients e^{-|beta|^2/2} beta^n / sqrt(n!).
inline ComplexVector coherent_state(cd beta, std::size_t dim) {
  detail::require_dim(dim);
  ComplexVector v(dim);
  const double x = std::norm(beta);
  for (std::size_t n = 0; n < dim; ++n) {
    const double nd = static_cast<double>(n);
    if (x == 0.0) {
      v(n) = n == 0 ? 1.0 : 0.0;
      continue;
    }
    const double log_mag = 0.5 * nd * std::log(x) - 0.5 * x - 0.5 * std::lgamma(nd + 1.0);
    v(n) = std::polar(std::exp(log_mag), nd * std::arg(beta));
  }
  return v;
}

inline FockOperator projector(const ComplexVector& psi) {
  return FockOperator(psi * psi.adjoint());
}

// --- damped traces ----------------------------------------------------------

/// Damping strengths and the polynomial order of the extrapolation to zero.
class DampingSchedule {
 public:
  DampingSchedule() : DampingSchedule({0.4, 0.2, 0.1, 0.05}, 2) {}

  DampingSchedule(std::vector<double> epsilons, std::size_t extrapolation_order)
      : eps_(std::move(epsilons)), order_(extrapolation_order) {
    if (eps_.empty()) throw ScheduleError("damping schedule needs at least one epsilon");
    for (std::size_t i = 0; i < eps_.size(); ++i) {
      if (!(eps_[i] > 0.0 && eps_[i] <= 2.0)) {
        throw ScheduleError("damping epsilon outside (0, 2]: " + std::to_string(eps_[i]));
      }
      if (i > 0 && !(eps_[i] < eps_[i - 1])) {
        throw ScheduleError("damping epsilons must be strictly decreasing");
      }
    }
    if (order_ >= 1 && eps_.size() < 2) {
      throw ScheduleError("extrapolation order >= 1 needs at least two epsilons");
    }
    if (order_ + 1 > eps_.size()) {
      throw ScheduleError("extrapolation order " + std::to_string(order_) + " needs " +
                          std::to_string(order_ + 1) + " epsilons, have " +
                          std::to_string(eps_.size()));
    }
  }

  const std::vector<double>& epsilons() const { return eps_; }
  std::size_t extrapolation_order() const { return order_; }
  double smallest() const { return eps_.back(); }

  friend bool operator==(const DampingSchedule&, const DampingSchedule&) = default;

 private:
  std::vector<double> eps_;
  std::size_t order_;
};

struct Extrapolation {
  cd value;
  double error_estimate = 0.0;
};

/// Neville extrapolation of samples v_i = t(eps_i) to eps = 0 with a
/// polynomial of the given order through the last order+1 samples. The error
/// estimate is the difference to the order-1 stage on the same last sample.
inline Extrapolation extrapolate_to_zero(std::span<const double> eps, std::span<const cd> values,
                                         std::size_t order) {
  const std::size_t n = eps.size();
  if (n == 0 || values.size() != n || order + 1 > n) {
    throw ScheduleError("inconsistent extrapolation request");
  }
  // tableau[i][j]: order-j estimate ending at sample i.
  std::vector<std::vector<cd>> tableau(n);
  for (std::size_t i = 0; i < n; ++i) {
    tableau[i].push_back(values[i]);
    for (std::size_t j = 1; j <= std::min(i, order); ++j) {
      const cd prev = tableau[i][j - 1];
      const cd diff = prev - tableau[i - 1][j - 1];
      tableau[i].push_back(prev + diff * (eps[i] / (eps[i - j] - eps[i])));
    }
  }
  Extrapolation out;
  out.value = tableau[n - 1][order];
  if (order >= 1) {
    out.error_estimate = std::abs(tableau[n - 1][order] - tableau[n - 1][order - 1]);
  } else if (n >= 2) {
    out.error_estimate = std::abs(values[n - 1] - values[n - 2]);
  }
  return out;
}

struct DampedTrace {
  cd value;
  double error_estimate = 0.0;
  /// t(eps_i) = sum_n e^{-eps_i n} d_n, one per schedule entry. Empty when
  /// the plain sum was used.
  std::vector<cd> stages;
  /// The diagonal decayed to rounding level inside the truncation, so the
  /// ordinary sum was returned (it equals the Abel limit).
  bool absolutely_convergent = false;
  /// Extrapolation error within tolerance. False for divergent inputs and for
  /// single-epsilon schedules (no error estimate available).
  bool converged = false;
  /// e^{-eps_min * dim} >= 1e-6: the truncation cuts the damped series short.
  bool truncation_warning = false;
};

struct DampedTraceOptions {
  double convergence_tolerance = 1e-2;  // relative to max(1, |value|)
  double tail_tolerance = 1e-9;         // relative tail mass for the plain-sum path
};

inline DampedTrace damped_trace_diagonal(std::span<const cd> diagonal,
                                         const DampingSchedule& schedule,
                                         const DampedTraceOptions& options = {}) {
  DampedTrace out;
  const std::size_t dim = diagonal.size();
  if (dim == 0) throw InvalidDimension("empty diagonal");

  const std::size_t buffer = std::min(dim, std::max<std::size_t>(4, dim / 4));
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t n = 0; n < dim; ++n) {
    const double a = std::abs(diagonal[n]);
    total += a;
    if (n >= dim - buffer) tail += a;
  }
  if (std::isfinite(total) && tail <= options.tail_tolerance * total) {
    out.value = pairwise_sum(diagonal);
    out.error_estimate = tail;
    out.absolutely_convergent = true;
    out.converged = true;
    return out;
  }

  const auto& eps = schedule.epsilons();
  std::vector<cd> terms(dim);
  for (double e : eps) {
    for (std::size_t n = 0; n < dim; ++n) {
      terms[n] = std::exp(-e * static_cast<double>(n)) * diagonal[n];
    }
    out.stages.push_back(pairwise_sum(terms));
  }
  out.truncation_warning = std::exp(-schedule.smallest() * static_cast<double>(dim)) >= 1e-6;

  const Extrapolation ex = extrapolate_to_zero(eps, out.stages, schedule.extrapolation_order());
  out.value = ex.value;
  out.error_estimate = ex.error_estimate;
  out.converged = eps.size() >= 2 && std::isfinite(std::abs(ex.value)) &&
                  ex.error_estimate <=
                      options.convergence_tolerance * std::max(1.0, std::abs(ex.value));
  return out;
}

inline DampedTrace damped_trace(const FockOperator& a, const DampingSchedule& schedule = {},
                                const DampedTraceOptions& options = {}) {
  const auto& m = a.matrix();
  std::vector<cd> d(a.dim());
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = m(n, n);
  return damped_trace_diagonal(d, schedule, options);
}

}  // namespace fmoyal
