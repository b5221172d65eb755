#pragma once

// K-deformed matrix product a .K b = a K b, its unit K^{-1}, and the
// transport a -> sqrt(K) a sqrt(K) that turns it into the ordinary product.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fmoyal/fock.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

inline constexpr double kInvertibleRelativeSv = 1e-12;
inline constexpr double kPositiveHermitianTol = 1e-10;
inline constexpr double kPositiveMinEigenvalue = 1e-12;

class KContext {
 public:
  explicit KContext(ComplexMatrix k) : k_(std::move(k)) {
    if (k_.rows() != k_.cols() || k_.rows() == 0) {
      throw ShapeError("K must be a non-empty square matrix");
    }
    if (!k_.allFinite()) throw ValidationError("K has non-finite entries");

    Eigen::JacobiSVD<ComplexMatrix> svd(k_);
    const auto& sv = svd.singularValues();
    invertible_ = sv(0) > 0.0 && sv(sv.size() - 1) > kInvertibleRelativeSv * sv(0);

    const double herm = (k_ - k_.adjoint()).cwiseAbs().maxCoeff();
    if (herm <= kPositiveHermitianTol) {
      const ComplexMatrix h = 0.5 * (k_ + k_.adjoint());
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h);
      min_eigenvalue_ = eig.eigenvalues().minCoeff();
      positive_ = *min_eigenvalue_ > kPositiveMinEigenvalue;
      if (positive_) {
        sqrt_k_ = eig.eigenvectors() *
                  eig.eigenvalues().cwiseSqrt().cast<cd>().asDiagonal() *
                  eig.eigenvectors().adjoint();
      }
    }
    if (invertible_) inverse_ = k_.inverse();
  }

  static KContext identity(std::size_t dim) {
    return KContext(ComplexMatrix::Identity(dim, dim));
  }

  const ComplexMatrix& k() const { return k_; }
  std::size_t dim() const { return static_cast<std::size_t>(k_.rows()); }
  bool invertible() const { return invertible_; }
  bool positive() const { return positive_; }
  /// Smallest eigenvalue when K is Hermitian, empty otherwise.
  std::optional<double> min_eigenvalue() const { return min_eigenvalue_; }

  /// The unit K^{-1} of the K-product.
  const ComplexMatrix& unit() const {
    if (!inverse_) throw ValidationError("K is not invertible; the K-product has no unit");
    return *inverse_;
  }

  /// Principal Hermitian square root.
  const ComplexMatrix& sqrt_k() const {
    if (!positive_) {
      const double ev = min_eigenvalue_.value_or(std::nan(""));
      throw PositivityError(
          min_eigenvalue_ ? "K is not positive: eigenvalue " + std::to_string(ev) +
                                " <= " + std::to_string(kPositiveMinEigenvalue)
                          : std::string("K is not Hermitian, no principal square root"),
          ev);
    }
    return *sqrt_k_;
  }

 private:
  ComplexMatrix k_;
  bool invertible_ = false;
  bool positive_ = false;
  std::optional<double> min_eigenvalue_;
  std::optional<ComplexMatrix> inverse_;
  std::optional<ComplexMatrix> sqrt_k_;
};

namespace detail {

inline void require_k_shape(const ComplexMatrix& a, const KContext& ctx, const char* what) {
  if (a.rows() != static_cast<Eigen::Index>(ctx.dim()) ||
      a.cols() != static_cast<Eigen::Index>(ctx.dim())) {
    throw ShapeError(std::string(what) + " must be " + std::to_string(ctx.dim()) + "x" +
                     std::to_string(ctx.dim()));
  }
}

}  // namespace detail

inline ComplexMatrix k_multiply(const ComplexMatrix& a, const ComplexMatrix& b,
                                const KContext& ctx) {
  detail::require_k_shape(a, ctx, "left factor");
  detail::require_k_shape(b, ctx, "right factor");
  return a * ctx.k() * b;
}

inline FockOperator k_multiply(const FockOperator& a, const FockOperator& b,
                               const KContext& ctx) {
  return FockOperator(k_multiply(a.matrix(), b.matrix(), ctx));
}

/// max |((a.b).c - a.(b.c))_{ij}|.
inline double k_associativity_defect(const ComplexMatrix& a, const ComplexMatrix& b,
                                     const ComplexMatrix& c, const KContext& ctx) {
  const ComplexMatrix left = k_multiply(k_multiply(a, b, ctx), c, ctx);
  const ComplexMatrix right = k_multiply(a, k_multiply(b, c, ctx), ctx);
  return (left - right).cwiseAbs().maxCoeff();
}

inline ComplexMatrix sqrt_k_transport(const ComplexMatrix& a, const KContext& ctx) {
  detail::require_k_shape(a, ctx, "operand");
  const ComplexMatrix& s = ctx.sqrt_k();
  return s * a * s;
}

// --- integral kernels on a line --------------------------------------------

/// Uniform grid on [x_min, x_max] with trapezoidal weights.
struct LineGrid {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n = 2;

  LineGrid() = default;
  LineGrid(double lo, double hi, std::size_t count) : x_min(lo), x_max(hi), n(count) {
    if (!(lo < hi) || count < 2) throw ValidationError("line grid needs lo < hi and n >= 2");
  }

  double h() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * h(); }
  double weight(std::size_t i) const { return (i == 0 || i + 1 == n) ? 0.5 * h() : h(); }

  friend bool operator==(const LineGrid&, const LineGrid&) = default;
};

/// Samples k(x_i, y_j) of a two-point kernel.
struct TwoPointKernel {
  LineGrid grid;
  ComplexMatrix values;

  static TwoPointKernel sample(const LineGrid& g, auto&& fn) {
    TwoPointKernel k{g, ComplexMatrix(g.n, g.n)};
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t j = 0; j < g.n; ++j) k.values(i, j) = fn(g.x(i), g.x(j));
    }
    return k;
  }
};

/// (a .K b)(x, x') = integral a(x,y) K(y,z) b(z,x') dy dz by trapezoidal
/// quadrature. With W = diag(weights) this is a W K W b, i.e. k_multiply with
/// the weights absorbed into K.
inline TwoPointKernel k_integral_product(const TwoPointKernel& a, const TwoPointKernel& k,
                                         const TwoPointKernel& b) {
  if (!(a.grid == k.grid) || !(k.grid == b.grid)) {
    throw ShapeError("k_integral_product needs all kernels on the same grid");
  }
  const auto n = static_cast<Eigen::Index>(a.grid.n);
  if (a.values.rows() != n || a.values.cols() != n || k.values.rows() != n ||
      k.values.cols() != n || b.values.rows() != n || b.values.cols() != n) {
    throw ShapeError("kernel samples do not match the grid size");
  }
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = a.grid.weight(static_cast<std::size_t>(i));
  const ComplexMatrix weighted = w.cast<cd>().asDiagonal() * k.values * w.cast<cd>().asDiagonal();
  return {a.grid, a.values * weighted * b.values};
}

}  // namespace fmoyal
