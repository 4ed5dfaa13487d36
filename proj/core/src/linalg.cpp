#include "esdelay/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "esdelay/errors.hpp"

namespace esdelay {

mat mat::identity(std::size_t n) {
  mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

mat mat::transpose() const {
  mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

mat mat::abs() const {
  mat t(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(i, j) = std::fabs((*this)(i, j));
  return t;
}

vec mat::apply(const vec& x) const {
  if (x.size() != cols_) fail(errc::dimension_mismatch, "matrix-vector size");
  vec y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

vec mat::apply_transpose(const vec& x) const {
  if (x.size() != rows_) fail(errc::dimension_mismatch, "matrix-vector size");
  vec y(cols_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

mat mat::mul(const mat& other) const {
  if (cols_ != other.rows()) fail(errc::dimension_mismatch, "matrix product size");
  mat r(rows_, other.cols());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < other.cols(); ++j) r(i, j) += aik * other(k, j);
    }
  return r;
}

double mat::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::fabs(v));
  return m;
}

double mat::frobenius() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

bool is_symmetric(const mat& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

namespace {

double offdiag_frobenius(const mat& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

eig_result jacobi_eigen(const mat& input) {
  if (input.rows() != input.cols()) fail(errc::dimension_mismatch, "eigen of non-square matrix");
  if (!is_symmetric(input, 1e-12)) fail(errc::not_symmetric, "jacobi_eigen requires a symmetric matrix");
  const std::size_t n = input.rows();
  mat a = input;
  mat v = mat::identity(n);
  const double stop = 1e-14 * std::max(input.frobenius(), 1e-300);

  eig_result out;
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (offdiag_frobenius(a) < stop) break;
    out.sweeps = sweep + 1;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // stable symmetric Schur rotation
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double vpj = v(p, j), vqj = v(q, j);
          v(p, j) = c * vpj - s * vqj;
          v(q, j) = s * vpj + c * vqj;
        }
      }
    }
  }

  // rows of v now hold eigenvectors: v * input * v^T ~ diag
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::fabs(a(i, i)) > std::fabs(a(j, j));
  });

  out.values.resize(n);
  out.vectors = mat(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    out.values[r] = a(src, src);
    std::size_t imax = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (std::fabs(v(src, j)) > std::fabs(v(src, imax))) imax = j;
    const double sgn = v(src, imax) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) out.vectors(r, j) = sgn * v(src, j);
  }
  return out;
}

double sym_spectral_norm(const mat& a) {
  const eig_result e = jacobi_eigen(a);
  double m = 0.0;
  for (double lam : e.values) m = std::max(m, std::fabs(lam));
  return m;
}

vec solve_linear(mat a, vec b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) fail(errc::dimension_mismatch, "solve_linear size");
  const double scale = std::max(a.max_abs(), 1e-300);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    if (std::fabs(a(piv, col)) < 1e-12 * scale)
      fail(errc::singular_abs_matrix, "pivot below 1e-12 of matrix scale");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  vec x(n, 0.0);
  for (std::size_t ir = n; ir-- > 0;) {
    double s = b[ir];
    for (std::size_t j = ir + 1; j < n; ++j) s -= a(ir, j) * x[j];
    x[ir] = s / a(ir, ir);
  }
  return x;
}

double norm2(const vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double max_abs(const vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace esdelay
