#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "esdelay/errors.hpp"
#include "esdelay/linalg.hpp"
#include "test_support.hpp"

using namespace esdelay;
using esdelay::testing::random_spd;
using esdelay::testing::random_symmetric;

namespace {

double det(mat a) {
  // LU with partial pivoting, test-local
  const std::size_t n = a.rows();
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a(r, c)) > std::fabs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      d = -d;
    }
    d *= a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return d;
}

double charpoly(const mat& a, double lambda) {
  mat shifted = a;
  for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) -= lambda;
  return det(shifted);
}

// independent eigenvalue oracle: scan det(A - lambda I) for sign changes and
// bisect each bracket
vec charpoly_eigenvalues(const mat& a) {
  double radius = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row += std::fabs(a(i, j));
    radius = std::max(radius, row);
  }
  const int grid = 20000;
  vec roots;
  double prev_l = -radius - 1.0, prev_v = charpoly(a, prev_l);
  for (int g = 1; g <= grid; ++g) {
    const double l = -radius - 1.0 + (2.0 * radius + 2.0) * double(g) / grid;
    const double v = charpoly(a, l);
    if ((prev_v < 0.0) != (v < 0.0)) {
      double lo = prev_l, hi = l;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((charpoly(a, mid) < 0.0) == (charpoly(a, lo) < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_l = l;
    prev_v = v;
  }
  return roots;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("jacobi reproduces the worked 2x2 decomposition") {
  const mat h = esdelay::testing::mat2(-2, -2, -2, -4);
  const eig_result e = jacobi_eigen(h);
  CHECK(e.values[0] == doctest::Approx(-5.2361).epsilon(1e-4));
  CHECK(e.values[1] == doctest::Approx(-0.7639).epsilon(1e-4));
  // published rotation, compared entrywise in absolute value
  CHECK(std::fabs(e.vectors(0, 0)) == doctest::Approx(0.5257).epsilon(2e-4));
  CHECK(std::fabs(e.vectors(0, 1)) == doctest::Approx(0.8507).epsilon(2e-4));
  CHECK(std::fabs(e.vectors(1, 0)) == doctest::Approx(0.8507).epsilon(2e-4));
  CHECK(std::fabs(e.vectors(1, 1)) == doctest::Approx(0.5257).epsilon(2e-4));
}

TEST_CASE("already-diagonal input keeps the identity rotation") {
  mat h(2, 2);
  h(0, 0) = h(1, 1) = 2.0;
  const eig_result e = jacobi_eigen(h);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(e.vectors(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
}

TEST_CASE("random SPD 4x4 matches the characteristic-polynomial oracle") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const mat a = random_spd(rng, 4);
    eig_result e = jacobi_eigen(a);
    vec expected = charpoly_eigenvalues(a);
    REQUIRE(expected.size() == 4);
    vec got = e.values;
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-8));

    // orthogonality and diagonalization residuals
    const mat utu = e.vectors.mul(e.vectors.transpose());
    const mat d = e.vectors.mul(a).mul(e.vectors.transpose());
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::fabs(utu(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
        if (i != j) CHECK(std::fabs(d(i, j)) < 1e-10);
      }
  }
}

TEST_CASE("decomposition residuals stay below 1e-10 on random symmetric input") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const mat a = random_symmetric(rng, 2 + trial % 5, 3.0);
    const eig_result e = jacobi_eigen(a);
    const mat utu = e.vectors.mul(e.vectors.transpose());
    const mat d = e.vectors.mul(a).mul(e.vectors.transpose());
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(std::fabs(utu(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
        if (i != j) CHECK(std::fabs(d(i, j)) < 1e-10);
      }
  }
}

TEST_CASE("asymmetric input is rejected") {
  mat a(2, 2);
  a(0, 1) = 1.0;
  CHECK_THROWS_AS(jacobi_eigen(a), es_error);
}

TEST_CASE("linear solve round-trips and flags singular systems") {
  std::mt19937 rng(3);
  const mat a = random_spd(rng, 3);
  const vec x{1.0, -2.0, 0.5};
  const vec b = a.apply(x);
  const vec got = solve_linear(a, b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(x[i]).epsilon(1e-10));

  mat s(2, 2);
  s(0, 0) = s(0, 1) = s(1, 0) = s(1, 1) = 1.0;
  try {
    solve_linear(s, {1.0, 2.0});
    FAIL("expected SingularAbsMatrix");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::singular_abs_matrix);
  }
}

}  // TEST_SUITE
