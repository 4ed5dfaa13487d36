#ifndef ESDELAY_LINALG_HPP
#define ESDELAY_LINALG_HPP

#include <cstddef>
#include <vector>

namespace esdelay {

using vec = std::vector<double>;

// Dense row-major matrix, sized for small control problems (n ~ 1..16).
class mat {
 public:
  mat() = default;
  mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  static mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  mat transpose() const;
  mat abs() const;
  vec apply(const vec& x) const;           // A x
  vec apply_transpose(const vec& x) const; // A^T x
  mat mul(const mat& other) const;

  double max_abs() const;
  double frobenius() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

bool is_symmetric(const mat& a, double rel_tol);

struct eig_result {
  vec values;  // eigenvalues
  mat vectors; // row i is the eigenvector of values[i]
  int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix. Stops when the off-diagonal
// Frobenius mass drops below 1e-14 * ||A||_F. Eigenvalues come back sorted by
// descending magnitude; each eigenvector's sign is fixed so its
// largest-magnitude entry is positive.
eig_result jacobi_eigen(const mat& a);

// Induced 2-norm of a symmetric matrix (largest |eigenvalue|).
double sym_spectral_norm(const mat& a);

// Gaussian elimination with partial pivoting; throws SingularAbsMatrix when a
// pivot falls below 1e-12 times the matrix scale.
vec solve_linear(mat a, vec b);

double norm2(const vec& x);
double max_abs(const vec& x);

}  // namespace esdelay

#endif
