#pragma once

/// @file
/// Dense eigensolvers: cyclic Jacobi for symmetric matrices and the real QZ
/// algorithm for the generalized problem A x = lambda B x with a possibly
/// singular B.
///
/// The QZ implementation works in three stages:
///   1. hessenberg_triangular: Q^T A Z upper Hessenberg, Q^T B Z upper
///      triangular (Householder QR of B, then Givens sweeps).
///   2. Implicit double-shift iterations on the active block, with zero
///      chasing whenever a diagonal entry of the triangular factor becomes
///      negligible (this is where infinite eigenvalues deflate).
///   3. Standardization of 2x2 blocks with real eigenvalues, eigenvalue
///      extraction from the diagonal, and eigenvectors by back-substitution
///      on the Schur pencil followed by accumulation through Z.
///
/// Eigen is used for storage only; none of its decompositions are called.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arxgsd/core_types.hpp"

namespace arxgsd::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// ---------------------------------------------------------------------------
// Symmetric eigenproblem
// ---------------------------------------------------------------------------

struct SymmetricEigen {
  /// Ascending.
  Vector values;
  /// Orthonormal columns matching `values`.
  Matrix vectors;
};

/// Cyclic Jacobi rotations until the off-diagonal mass is below eps * ||M||_F.
/// Throws InputError when M is not square or not symmetric to 1e-10 relative.
[[nodiscard]] inline SymmetricEigen symmetric_eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("symmetric_eig: matrix must be square");
  const Index n = m.rows();
  if (!m.allFinite()) throw InputError("symmetric_eig: non-finite entries");
  const double norm = m.norm();
  if ((m - m.transpose()).norm() > 1e-10 * std::max(norm, std::numeric_limits<double>::min()))
    throw InputError("symmetric_eig: matrix is not symmetric");

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= kEps * norm * 1e-2 || off == 0.0) break;

    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index r = 0; r < n; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (Index r = 0; r < n; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) < a(y, y); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = a(src, src);
    out.vectors.col(i) = v.col(src);
  }
  return out;
}

/// M[i][j] = acvf[|i-j|].
[[nodiscard]] inline Matrix toeplitz_from_acvf(std::span<const double> acvf) {
  if (acvf.empty()) throw InputError("toeplitz_from_acvf: empty sequence");
  const auto n = static_cast<Index>(acvf.size());
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = acvf[static_cast<std::size_t>(std::abs(i - j))];
  return m;
}

// ---------------------------------------------------------------------------
// Generalized eigenproblem types
// ---------------------------------------------------------------------------

struct MatrixPencil {
  Matrix a;
  Matrix b;

  void validate() const {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
      throw InputError("MatrixPencil: A and B must be square with equal dimensions");
    if (!a.allFinite() || !b.allFinite()) throw InputError("MatrixPencil: non-finite entries");
  }
};

/// Q^T A Z = T (quasi upper triangular), Q^T B Z = S (upper triangular).
struct GeneralizedSchur {
  Matrix q;
  Matrix z;
  Matrix t;
  Matrix s;
};

/// lambda = alpha / beta; beta == 0 (within threshold) marks an infinite
/// eigenvalue.  `vector` has unit 2-norm with its largest entry real positive.
struct GeneralizedEigenpair {
  Complex alpha;
  double beta = 0.0;
  bool infinite = false;
  ComplexVector vector;

  [[nodiscard]] Complex lambda() const { return alpha / beta; }
  [[nodiscard]] bool is_real(double rel_tol = 0.0) const {
    return std::abs(alpha.imag()) <= rel_tol * std::abs(alpha);
  }
};

struct EigenSolution {
  /// Finite eigenpairs, descending by |lambda|.
  std::vector<GeneralizedEigenpair> finite;
  std::vector<GeneralizedEigenpair> infinite;

  [[nodiscard]] std::size_t finite_count() const { return finite.size(); }
  [[nodiscard]] std::size_t infinite_count() const { return infinite.size(); }
};

struct QzResult {
  GeneralizedSchur schur;
  EigenSolution eigen;
  std::size_t iterations = 0;
};

/// QZ iteration limit exceeded; carries the partially reduced form.
class QzConvergenceError : public NumericalError {
 public:
  QzConvergenceError(const std::string& what, GeneralizedSchur partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  [[nodiscard]] const GeneralizedSchur& partial() const { return partial_; }

 private:
  GeneralizedSchur partial_;
};

// ---------------------------------------------------------------------------
// Plane rotations and small reflectors
// ---------------------------------------------------------------------------

namespace detail {

struct Rotation {
  double c = 1.0;
  double s = 0.0;
};

/// [c s; -s c] [a; b] = [r; 0].
inline Rotation givens(double a, double b) {
  if (b == 0.0) return {1.0, 0.0};
  const double r = std::hypot(a, b);
  return {a / r, b / r};
}

/// Rows i, j:  (x, y) <- (c x + s y, -s x + c y) over columns [c0, c1].
inline void rotate_rows(Matrix& m, Index i, Index j, Rotation g, Index c0, Index c1) {
  for (Index k = c0; k <= c1; ++k) {
    const double x = m(i, k);
    const double y = m(j, k);
    m(i, k) = g.c * x + g.s * y;
    m(j, k) = -g.s * x + g.c * y;
  }
}

/// Columns i, j:  (x, y) <- (c x + s y, -s x + c y) over rows [r0, r1].
/// Accumulating Q (after rotate_rows) or Z (after rotate_cols) uses the same
/// call with the full row range.
inline void rotate_cols(Matrix& m, Index i, Index j, Rotation g, Index r0, Index r1) {
  for (Index k = r0; k <= r1; ++k) {
    const double x = m(k, i);
    const double y = m(k, j);
    m(k, i) = g.c * x + g.s * y;
    m(k, j) = -g.s * x + g.c * y;
  }
}

/// Rotation of columns (i, j) that zeros m(row, j).
inline Rotation kill_right_j(const Matrix& m, Index row, Index i, Index j) { return givens(m(row, i), m(row, j)); }
/// Rotation of columns (i, j) that zeros m(row, i).
inline Rotation kill_right_i(const Matrix& m, Index row, Index i, Index j) { return givens(m(row, j), -m(row, i)); }

/// P = I - tau v v^T with v[0] = 1 and P x = beta e_1, for x of length 3.
struct Reflector3 {
  double v1 = 0.0;
  double v2 = 0.0;
  double tau = 0.0;
};

inline Reflector3 householder3(double x0, double x1, double x2) {
  const double sigma = x1 * x1 + x2 * x2;
  if (sigma == 0.0) return {};
  const double norm = std::sqrt(x0 * x0 + sigma);
  const double beta = x0 <= 0.0 ? norm : -norm;
  const double denom = x0 - beta;
  return {x1 / denom, x2 / denom, (beta - x0) / beta};
}

/// Applies P from the left to rows k..k+2 over columns [c0, c1].
inline void reflect_rows(Matrix& m, Index k, const std::array<double, 3>& v, double tau, Index c0, Index c1) {
  if (tau == 0.0) return;
  for (Index c = c0; c <= c1; ++c) {
    const double w = tau * (v[0] * m(k, c) + v[1] * m(k + 1, c) + v[2] * m(k + 2, c));
    m(k, c) -= w * v[0];
    m(k + 1, c) -= w * v[1];
    m(k + 2, c) -= w * v[2];
  }
}

/// Applies P from the right to columns k..k+2 over rows [r0, r1].
inline void reflect_cols(Matrix& m, Index k, const std::array<double, 3>& v, double tau, Index r0, Index r1) {
  if (tau == 0.0) return;
  for (Index r = r0; r <= r1; ++r) {
    const double w = tau * (m(r, k) * v[0] + m(r, k + 1) * v[1] + m(r, k + 2) * v[2]);
    m(r, k) -= w * v[0];
    m(r, k + 1) -= w * v[1];
    m(r, k + 2) -= w * v[2];
  }
}

/// Roots of det(T - lambda S) for a 2x2 block with upper-triangular S.
inline std::pair<Complex, Complex> block_eigenvalues(double t00, double t01, double t10, double t11, double s00,
                                                     double s01, double s11) {
  const double qa = s00 * s11;
  const double qb = -(t00 * s11 + t11 * s00 - t10 * s01);
  const double qc = t00 * t11 - t01 * t10;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double q = -0.5 * (qb + (qb >= 0.0 ? root : -root));
    const double l1 = q / qa;
    const double l2 = q != 0.0 ? qc / q : 0.0;
    return {Complex(l1, 0.0), Complex(l2, 0.0)};
  }
  const double re = -qb / (2.0 * qa);
  const double im = std::sqrt(-disc) / (2.0 * std::abs(qa));
  return {Complex(re, im), Complex(re, -im)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hessenberg-triangular reduction
// ---------------------------------------------------------------------------

struct HessenbergTriangular {
  Matrix h;
  Matrix r;
  Matrix q;
  Matrix z;
};

[[nodiscard]] inline HessenbergTriangular hessenberg_triangular(const MatrixPencil& pencil) {
  pencil.validate();
  const Index n = pencil.a.rows();
  HessenbergTriangular out{pencil.a, pencil.b, Matrix::Identity(n, n), Matrix::Identity(n, n)};
  Matrix& h = out.h;
  Matrix& r = out.r;
  Matrix& q = out.q;
  Matrix& z = out.z;

  // Q^T B = R by Householder reflections.
  for (Index j = 0; j + 1 < n; ++j) {
    const Index len = n - j;
    Vector x = r.col(j).segment(j, len);
    const double tail_max = x.tail(len - 1).cwiseAbs().maxCoeff();
    if (tail_max == 0.0) continue;
    // Work on the column scaled to unit max so tiny entries do not underflow.
    const double scale = std::max(std::abs(x(0)), tail_max);
    x /= scale;
    const double alpha = x(0);
    const double sigma = x.tail(len - 1).squaredNorm();
    const double norm = std::sqrt(alpha * alpha + sigma);
    const double beta = alpha <= 0.0 ? norm : -norm;
    Vector v = x / (alpha - beta);
    v(0) = 1.0;
    const double tau = (beta - alpha) / beta;
    for (Index c = j; c < n; ++c) {
      const double w = tau * v.dot(r.col(c).segment(j, len));
      r.col(c).segment(j, len) -= w * v;
    }
    for (Index c = 0; c < n; ++c) {
      const double w = tau * v.dot(h.col(c).segment(j, len));
      h.col(c).segment(j, len) -= w * v;
    }
    for (Index row = 0; row < n; ++row) {
      const double w = tau * q.row(row).segment(j, len).dot(v.transpose());
      q.row(row).segment(j, len) -= w * v.transpose();
    }
    r(j, j) = beta * scale;
    for (Index i = j + 1; i < n; ++i) r(i, j) = 0.0;
  }

  // Givens sweeps: zero H below the subdiagonal, column by column from the
  // bottom, restoring R's triangularity after each left rotation.
  for (Index j = 0; j + 2 < n; ++j) {
    for (Index i = n - 1; i >= j + 2; --i) {
      const detail::Rotation gl = detail::givens(h(i - 1, j), h(i, j));
      detail::rotate_rows(h, i - 1, i, gl, j, n - 1);
      detail::rotate_rows(r, i - 1, i, gl, i - 1, n - 1);
      detail::rotate_cols(q, i - 1, i, gl, 0, n - 1);
      h(i, j) = 0.0;

      const detail::Rotation gr = detail::kill_right_i(r, i, i - 1, i);
      detail::rotate_cols(r, i - 1, i, gr, 0, i);
      detail::rotate_cols(h, i - 1, i, gr, 0, n - 1);
      detail::rotate_cols(z, i - 1, i, gr, 0, n - 1);
      r(i, i - 1) = 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// QZ iteration
// ---------------------------------------------------------------------------

namespace detail {

class QzIteration {
 public:
  QzIteration(const MatrixPencil& pencil, std::size_t max_iterations) : max_iterations_(max_iterations) {
    HessenbergTriangular ht = hessenberg_triangular(pencil);
    t_ = std::move(ht.h);
    s_ = std::move(ht.r);
    q_ = std::move(ht.q);
    z_ = std::move(ht.z);
    n_ = t_.rows();
    atol_ = kEps * pencil.a.norm();
    btol_ = static_cast<double>(n_) * kEps * pencil.b.norm();
  }

  void run() {
    Index l = n_ - 1;
    std::size_t local = 0;
    while (l > 0) {
      const Index f = active_start(l);
      if (f == l) {
        --l;
        local = 0;
        continue;
      }
      const Index zero = small_diagonal(f, l);
      if (zero >= 0) {
        push_down_zero(zero, f, l);
        continue;
      }
      if (f == l - 1) {
        split_two_by_two(f);
        l -= 2;
        local = 0;
        continue;
      }
      if (iterations_ >= max_iterations_) {
        throw QzConvergenceError("qz_solve: no convergence after " + std::to_string(iterations_) + " iterations",
                                 schur());
      }
      ++local;
      ++iterations_;
      double_shift_step(f, l, local % 10 == 0);
    }
  }

  [[nodiscard]] GeneralizedSchur schur() const { return {q_, z_, t_, s_}; }
  [[nodiscard]] std::size_t iterations() const { return iterations_; }

 private:
  /// Smallest f such that T(k, k-1) is non-negligible for all f < k <= l.
  Index active_start(Index l) {
    Index k = l;
    while (k > 0) {
      const double sub = std::abs(t_(k, k - 1));
      const double scale = std::abs(t_(k, k)) + std::abs(t_(k - 1, k - 1));
      if (sub <= atol_ || sub <= kEps * scale) {
        t_(k, k - 1) = 0.0;
        break;
      }
      --k;
    }
    return k;
  }

  Index small_diagonal(Index f, Index l) {
    for (Index k = l; k >= f; --k) {
      if (std::abs(s_(k, k)) <= btol_) {
        s_(k, k) = 0.0;
        return k;
      }
    }
    return -1;
  }

  /// Chases the zero at S(z, z) to S(l, l), then zeros T(l, l-1) so an
  /// infinite eigenvalue deflates at the bottom of the block.
  void push_down_zero(Index z, Index f, Index l) {
    const Index last = n_ - 1;
    for (Index zz = z; zz < l; ++zz) {
      const Rotation gl = givens(s_(zz, zz + 1), s_(zz + 1, zz + 1));
      rotate_rows(s_, zz, zz + 1, gl, zz, last);
      rotate_rows(t_, zz, zz + 1, gl, zz > f ? zz - 1 : zz, last);
      rotate_cols(q_, zz, zz + 1, gl, 0, last);
      s_(zz + 1, zz + 1) = 0.0;
      if (zz > f) {
        const Rotation gr = kill_right_i(t_, zz + 1, zz - 1, zz);
        rotate_cols(t_, zz - 1, zz, gr, 0, zz + 1);
        rotate_cols(s_, zz - 1, zz, gr, 0, zz);
        rotate_cols(z_, zz - 1, zz, gr, 0, last);
        t_(zz + 1, zz - 1) = 0.0;
      }
    }
    const Rotation gr = kill_right_i(t_, l, l - 1, l);
    rotate_cols(t_, l - 1, l, gr, 0, l);
    rotate_cols(s_, l - 1, l, gr, 0, l);
    rotate_cols(z_, l - 1, l, gr, 0, last);
    t_(l, l - 1) = 0.0;
    s_(l, l - 1) = 0.0;
  }

  /// Triangularizes a 2x2 block with real eigenvalues; complex pairs stay.
  void split_two_by_two(Index i) {
    const Index last = n_ - 1;
    const auto [l1, l2] = block_eigenvalues(t_(i, i), t_(i, i + 1), t_(i + 1, i), t_(i + 1, i + 1), s_(i, i),
                                            s_(i, i + 1), s_(i + 1, i + 1));
    if (l1.imag() != 0.0) return;
    const double lambda = std::abs(l1.real()) <= std::abs(l2.real()) ? l1.real() : l2.real();
    // Null vector of T_b - lambda S_b, scaled to avoid cancellation for large lambda.
    double n00, n01, n10, n11;
    if (std::abs(lambda) > 1.0) {
      const double inv = 1.0 / lambda;
      n00 = t_(i, i) * inv - s_(i, i);
      n01 = t_(i, i + 1) * inv - s_(i, i + 1);
      n10 = t_(i + 1, i) * inv;
      n11 = t_(i + 1, i + 1) * inv - s_(i + 1, i + 1);
    } else {
      n00 = t_(i, i) - lambda * s_(i, i);
      n01 = t_(i, i + 1) - lambda * s_(i, i + 1);
      n10 = t_(i + 1, i);
      n11 = t_(i + 1, i + 1) - lambda * s_(i + 1, i + 1);
    }
    double zx, zy;
    if (std::hypot(n00, n01) >= std::hypot(n10, n11)) {
      zx = -n01;
      zy = n00;
    } else {
      zx = -n11;
      zy = n10;
    }
    if (zx != 0.0 || zy != 0.0) {
      const double norm = std::hypot(zx, zy);
      const Rotation gr{zx / norm, zy / norm};
      rotate_cols(t_, i, i + 1, gr, 0, i + 1);
      rotate_cols(s_, i, i + 1, gr, 0, i + 1);
      rotate_cols(z_, i, i + 1, gr, 0, last);
    }
    const Rotation gl = givens(s_(i, i), s_(i + 1, i));
    rotate_rows(t_, i, i + 1, gl, i, last);
    rotate_rows(s_, i, i + 1, gl, i, last);
    rotate_cols(q_, i, i + 1, gl, 0, last);
    t_(i + 1, i) = 0.0;
    s_(i + 1, i) = 0.0;
  }

  /// One implicit Francis double-shift QZ sweep on the active block [f, l].
  void double_shift_step(Index f, Index l, bool exceptional) {
    const Index last = n_ - 1;

    // Trailing 2x2 of M = T S^{-1}: T[l-1..l, l-2..l] times the inverse of
    // the trailing 3x3 of S (upper triangular).
    const Index b0 = l - 2;
    const double r00 = s_(b0, b0), r01 = s_(b0, b0 + 1), r02 = s_(b0, b0 + 2);
    const double r11 = s_(b0 + 1, b0 + 1), r12 = s_(b0 + 1, b0 + 2), r22 = s_(b0 + 2, b0 + 2);
    const double i00 = 1.0 / r00, i11 = 1.0 / r11, i22 = 1.0 / r22;
    const double i01 = -r01 * i00 * i11;
    const double i12 = -r12 * i11 * i22;
    const double i02 = (r01 * r12 - r02 * r11) * i00 * i11 * i22;
    const double h10 = t_(l - 1, b0), h11 = t_(l - 1, b0 + 1), h12 = t_(l - 1, b0 + 2);
    const double h21 = t_(l, b0 + 1), h22 = t_(l, b0 + 2);
    const double m11 = h10 * i01 + h11 * i11;
    const double m12 = h10 * i02 + h11 * i12 + h12 * i22;
    const double m21 = h21 * i11;
    const double m22 = h21 * i12 + h22 * i22;

    double trace = m11 + m22;
    double det = m11 * m22 - m12 * m21;
    if (exceptional) {
      const double sub = std::abs(t_(l, l - 1) / s_(l - 1, l - 1)) + std::abs(t_(l - 1, l - 2) / s_(l - 2, l - 2));
      trace = 1.5 * sub;
      det = sub * sub;
    }

    // First column of (M - s1 I)(M - s2 I) restricted to the active block.
    const double a11 = t_(f, f) / s_(f, f);
    const double a21 = t_(f + 1, f) / s_(f, f);
    const double a12 = (t_(f, f + 1) - a11 * s_(f, f + 1)) / s_(f + 1, f + 1);
    const double a22 = (t_(f + 1, f + 1) - a21 * s_(f, f + 1)) / s_(f + 1, f + 1);
    const double a32 = t_(f + 2, f + 1) / s_(f + 1, f + 1);
    double x = a11 * a11 + a12 * a21 - trace * a11 + det;
    double y = a21 * (a11 + a22 - trace);
    double z = a21 * a32;

    for (Index k = f; k <= l - 2; ++k) {
      if (k > f) {
        x = t_(k, k - 1);
        y = t_(k + 1, k - 1);
        z = t_(k + 2, k - 1);
      }
      const Reflector3 left = householder3(x, y, z);
      const std::array<double, 3> lv{1.0, left.v1, left.v2};
      reflect_rows(t_, k, lv, left.tau, k > f ? k - 1 : f, last);
      reflect_rows(s_, k, lv, left.tau, k, last);
      reflect_cols(q_, k, lv, left.tau, 0, last);
      if (k > f) {
        t_(k + 1, k - 1) = 0.0;
        t_(k + 2, k - 1) = 0.0;
      }

      // Restore S: zero S(k+2, k) and S(k+2, k+1) with a reflector built on
      // the reversed row, then S(k+1, k) with a rotation.
      const Reflector3 right = householder3(s_(k + 2, k + 2), s_(k + 2, k + 1), s_(k + 2, k));
      const std::array<double, 3> rv{right.v2, right.v1, 1.0};
      const Index trow = std::min(k + 3, l);
      reflect_cols(s_, k, rv, right.tau, 0, k + 2);
      reflect_cols(t_, k, rv, right.tau, 0, trow);
      reflect_cols(z_, k, rv, right.tau, 0, last);
      s_(k + 2, k) = 0.0;
      s_(k + 2, k + 1) = 0.0;

      const Rotation gr = kill_right_i(s_, k + 1, k, k + 1);
      rotate_cols(s_, k, k + 1, gr, 0, k + 1);
      rotate_cols(t_, k, k + 1, gr, 0, trow);
      rotate_cols(z_, k, k + 1, gr, 0, last);
      s_(k + 1, k) = 0.0;
    }

    // Final 2-vector step on rows/columns (l-1, l).
    const Rotation gl = givens(t_(l - 1, l - 2), t_(l, l - 2));
    rotate_rows(t_, l - 1, l, gl, l - 2, last);
    rotate_rows(s_, l - 1, l, gl, l - 1, last);
    rotate_cols(q_, l - 1, l, gl, 0, last);
    t_(l, l - 2) = 0.0;

    const Rotation gr = kill_right_i(s_, l, l - 1, l);
    rotate_cols(s_, l - 1, l, gr, 0, l);
    rotate_cols(t_, l - 1, l, gr, 0, l);
    rotate_cols(z_, l - 1, l, gr, 0, last);
    s_(l, l - 1) = 0.0;
  }

  Matrix t_, s_, q_, z_;
  Index n_ = 0;
  double atol_ = 0.0;
  double btol_ = 0.0;
  std::size_t max_iterations_;
  std::size_t iterations_ = 0;
};

/// Right eigenvector of the Schur pencil for (alpha, beta) at diagonal block
/// `k` (`size` 1 or 2; `second` selects the conjugate of a 2x2 pair).
inline ComplexVector schur_eigenvector(const Matrix& t, const Matrix& s, Index k, Index size, Complex alpha,
                                       double beta, double scale) {
  const Index n = t.rows();
  const auto m = [&](Index i, Index j) { return Complex(beta * t(i, j), 0.0) - alpha * s(i, j); };
  const double small = std::max(kEps * scale, std::numeric_limits<double>::min());

  ComplexVector x = ComplexVector::Zero(n);
  Index end = k;
  if (size == 1) {
    x(k) = 1.0;
  } else {
    end = k + 1;
    const Complex m00 = m(k, k), m01 = m(k, k + 1), m10 = m(k + 1, k), m11 = m(k + 1, k + 1);
    if (std::abs(m10) + std::abs(m11) >= std::abs(m00) + std::abs(m01)) {
      x(k) = m11;
      x(k + 1) = -m10;
    } else {
      x(k) = -m01;
      x(k + 1) = m00;
    }
  }

  const auto rhs = [&](Index row) {
    Complex acc = 0.0;
    for (Index c = row + 1; c <= end; ++c) acc -= m(row, c) * x(c);
    return acc;
  };

  Index j = k - 1;
  while (j >= 0) {
    if (j >= 1 && t(j, j - 1) != 0.0) {
      // x(j) is still zero, so rhs(j - 1) only sums the solved entries.
      const Complex b0 = rhs(j - 1);
      const Complex b1 = rhs(j);
      const Complex p00 = m(j - 1, j - 1), p01 = m(j - 1, j), p10 = m(j, j - 1), p11 = m(j, j);
      Complex det = p00 * p11 - p01 * p10;
      if (std::abs(det) < small * small) det = small * small;
      x(j - 1) = (b0 * p11 - p01 * b1) / det;
      x(j) = (p00 * b1 - p10 * b0) / det;
      j -= 2;
    } else {
      Complex d = m(j, j);
      if (std::abs(d) < small) d = small;
      x(j) = rhs(j) / d;
      j -= 1;
    }
  }
  return x;
}

}  // namespace detail

/// Generalized Schur decomposition and eigenpairs of (A, B).  Finite
/// eigenvalues are returned descending by |lambda|; eigenvalues with
/// |beta| <= n eps ||B||_F are classified infinite and listed separately.
/// `max_iterations` == 0 selects 30 n.
[[nodiscard]] inline QzResult qz_solve(const MatrixPencil& pencil, std::size_t max_iterations = 0) {
  pencil.validate();
  const Index n = pencil.a.rows();
  if (max_iterations == 0) max_iterations = 30 * static_cast<std::size_t>(std::max<Index>(n, 1));

  detail::QzIteration qz(pencil, max_iterations);
  qz.run();

  QzResult out;
  out.schur = qz.schur();
  out.iterations = qz.iterations();
  const Matrix& t = out.schur.t;
  const Matrix& s = out.schur.s;
  const double norm_a = pencil.a.norm();
  const double norm_b = pencil.b.norm();
  const double inf_tol = static_cast<double>(n) * kEps * norm_b;

  std::vector<GeneralizedEigenpair> pairs;
  for (Index i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      const auto [l1, l2] = detail::block_eigenvalues(t(i, i), t(i, i + 1), t(i + 1, i), t(i + 1, i + 1), s(i, i),
                                                      s(i, i + 1), s(i + 1, i + 1));
      const double beta = std::sqrt(std::abs(s(i, i) * s(i + 1, i + 1)));
      for (int which = 0; which < 2; ++which) {
        GeneralizedEigenpair p;
        p.beta = beta;
        p.alpha = (which == 0 ? l1 : l2) * beta;
        p.infinite = false;
        const double scale = std::abs(beta) * norm_a + std::abs(p.alpha) * norm_b;
        p.vector = detail::schur_eigenvector(t, s, i, 2, p.alpha, p.beta, scale);
        pairs.push_back(std::move(p));
      }
      i += 2;
    } else {
      GeneralizedEigenpair p;
      p.alpha = t(i, i);
      p.beta = s(i, i);
      if (p.beta < 0.0) {
        p.alpha = -p.alpha;
        p.beta = -p.beta;
      }
      p.infinite = std::abs(p.beta) <= inf_tol;
      const double scale = std::abs(p.beta) * norm_a + std::abs(p.alpha) * norm_b;
      p.vector = detail::schur_eigenvector(t, s, i, 1, p.alpha, p.beta, scale);
      pairs.push_back(std::move(p));
      i += 1;
    }
  }

  for (GeneralizedEigenpair& p : pairs) {
    ComplexVector v = out.schur.z * p.vector;
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    const double norm = v.norm();
    if (norm > 0.0) {
      const Complex phase = v(arg) / std::abs(v(arg));
      v /= phase * norm;
      v(arg) = Complex(v(arg).real(), 0.0);
    }
    p.vector = std::move(v);
    if (p.infinite)
      out.eigen.infinite.push_back(std::move(p));
    else
      out.eigen.finite.push_back(std::move(p));
  }

  std::stable_sort(out.eigen.finite.begin(), out.eigen.finite.end(),
                   [](const GeneralizedEigenpair& x, const GeneralizedEigenpair& y) {
                     const double ax = std::abs(x.lambda()), ay = std::abs(y.lambda());
                     if (ax != ay) return ax > ay;
                     if (x.lambda().real() != y.lambda().real()) return x.lambda().real() > y.lambda().real();
                     return x.lambda().imag() > y.lambda().imag();
                   });
  return out;
}

}  // namespace arxgsd::linalg
