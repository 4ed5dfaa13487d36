#include <cmath>
#include <random>

#include "doctest.h"
#include "esdelay/errors.hpp"
#include "esdelay/experiments.hpp"
#include "esdelay/model.hpp"
#include "test_support.hpp"

using namespace esdelay;
using esdelay::testing::mat1;
using esdelay::testing::mat2;

namespace {

validated_problem worked_2d_problem() { return example_problem("example3_3"); }

quadratic_map_spec scalar_map(double h, double kappa = 0.0) {
  quadratic_map_spec m;
  m.n = 1;
  m.q_star_max = 0.5;
  m.h_bar = mat1(h);
  m.kappa = kappa;
  return m;
}

delay_profile scalar_delays(double d_in, double d_out, double mu = 0.0) {
  return delay_profile{d_out, mu, {d_in}, {1}, {}};
}

tuning_config scalar_tuning(double k, double eps = 0.1) {
  return tuning_config{{k}, {0.3}, {0.5}, {1.0}, 0.0, 0.0, 1, eps};
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("worked 2d problem validates with the published decay rates") {
  const validated_problem p = worked_2d_problem();
  CHECK(p.delta[0] == doctest::Approx(1.047e-3).epsilon(2e-3));
  CHECK(p.delta[1] == doctest::Approx(1.031e-3).epsilon(2e-3));
  CHECK(p.d_bar(0) == doctest::Approx(1.5));
  CHECK(p.d_bar(1) == doctest::Approx(2.5));
}

TEST_CASE("scalar gain inside the 1/e margin validates") {
  const validated_problem p = validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0),
                                               scalar_tuning(-0.003), variant::continuous);
  CHECK(p.delta[0] == doctest::Approx(0.006));
}

TEST_CASE("gain violating the 1/e bound is rejected with the bound in the message") {
  try {
    validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0), scalar_tuning(-0.1),
                     variant::continuous);
    FAIL("expected GainInfeasible");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::gain_infeasible);
    CHECK(std::string(e.what()).find("channel 1") != std::string::npos);
    CHECK(std::string(e.what()).find("0.18") != std::string::npos);  // 1/(e*2)
  }
}

TEST_CASE("wrong gain sign is NotHurwitz") {
  try {
    validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0), scalar_tuning(0.003),
                     variant::continuous);
    FAIL("expected NotHurwitz");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::not_hurwitz);
  }
}

TEST_CASE("inverted confinement radii are rejected") {
  tuning_config t = scalar_tuning(-0.003);
  t.sigma_bar = {0.5};
  try {
    validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0), t, variant::continuous);
    FAIL("expected BoxInverted");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::box_inverted);
  }
}

TEST_CASE("non-commensurable nominal delays are rejected") {
  quadratic_map_spec m;
  m.n = 2;
  m.h_bar = mat2(2, 0, 0, 2);
  delay_profile d{1.0, 0.0, {0.5, 1.0}, {1, 1}, {}};  // Dbar = (1.5, 2), m=(1,1)
  tuning_config t{{-0.003, -0.003}, {0.3, 0.3}, {0.5, 0.5}, {1.0, 1.0}, 0.0, 0.0, 1, 0.25};
  try {
    validate_problem(m, d, t, variant::continuous);
    FAIL("expected NonCommensurateDelays");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::non_commensurate_delays);
  }
}

TEST_CASE("dimension mismatches are caught") {
  quadratic_map_spec m;
  m.n = 2;
  m.h_bar = mat2(2, 0, 0, 2);
  delay_profile d{1.0, 0.0, {0.5, 1.0}, {3, 4}, {}};
  tuning_config t{{-0.003}, {0.3, 0.3}, {0.5, 0.5}, {1.0, 1.0}, 0.0, 0.0, 1, 0.25};
  CHECK_THROWS_AS(validate_problem(m, d, t, variant::continuous), es_error);
}

TEST_CASE("single-variable variants need h_m and h_M") {
  try {
    validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0), scalar_tuning(-0.003),
                     variant::single_var_continuous);
    FAIL("expected a missing-field error");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
  }
}

TEST_CASE("sampled variants require zero output delay") {
  CHECK_THROWS_AS(validate_problem(scalar_map(2.0), scalar_delays(1.0, 1.0),
                                   scalar_tuning(-0.003), variant::sampled),
                  es_error);
}

TEST_CASE("frame transforms preserve zero, norm, and round-trip") {
  const validated_problem p = worked_2d_problem();
  const vec zero{0.0, 0.0};
  const vec z = to_diag_frame(zero, p.diag);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  const vec init{0.3633, -0.3633};
  CHECK(norm2(to_diag_frame(init, p.diag)) == doctest::Approx(norm2(init)).epsilon(1e-12));

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const vec x{u(rng), u(rng)};
    const vec back = from_diag_frame(to_diag_frame(x, p.diag), p.diag);
    CHECK(std::fabs(back[0] - x[0]) < 1e-12);
    CHECK(std::fabs(back[1] - x[1]) < 1e-12);
    CHECK(norm2(to_diag_frame(x, p.diag)) == doctest::Approx(norm2(x)).epsilon(1e-12));
  }
}

TEST_CASE("backmap reproduces the published box transport") {
  const validated_problem p = worked_2d_problem();
  const vec b = backmap_box({0.023, 0.16}, p.diag);
  CHECK(b[0] == doctest::Approx(0.1482).epsilon(1e-3));
  CHECK(b[1] == doctest::Approx(0.1037).epsilon(1e-3));

  const vec s0 = solve_initial_box({0.5, 0.5}, p.diag);
  CHECK(s0[0] == doctest::Approx(0.3633).epsilon(1e-3));
  CHECK(s0[1] == doctest::Approx(0.3633).epsilon(1e-3));
}

TEST_CASE("identity rotation backmaps to itself") {
  diagonalization d{mat::identity(3), {1.0, 1.0, 1.0}};
  const vec omega{0.1, 0.2, 0.3};
  const vec b = backmap_box(omega, d);
  for (std::size_t i = 0; i < 3; ++i) CHECK(b[i] == omega[i]);
}

TEST_CASE("backmap composed with the inverse box solve is the identity") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const diagonalization d = spectral_decompose(esdelay::testing::random_spd(rng, 3));
    const vec sbar{u(rng), u(rng), u(rng)};
    const vec s0 = solve_initial_box(sbar, d);
    const mat absb = d.u.abs();
    const vec back = absb.apply(s0);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(back[i] == doctest::Approx(sbar[i]).epsilon(1e-10));
  }
}

TEST_CASE("singular |b| matrix is reported for the inverse direction") {
  const double r = 1.0 / std::sqrt(2.0);
  mat u(2, 2);
  u(0, 0) = r;
  u(0, 1) = r;
  u(1, 0) = -r;
  u(1, 1) = r;
  diagonalization d{u, {1.0, 1.0}};
  try {
    solve_initial_box({0.5, 0.5}, d);
    FAIL("expected SingularAbsMatrix");
  } catch (const es_error& e) {
    CHECK(e.code() == errc::singular_abs_matrix);
  }
}

TEST_CASE("spectral_decompose rejects indefinite Hessians") {
  CHECK_THROWS_AS(spectral_decompose(mat2(1, 0, 0, -1)), es_error);
  CHECK_THROWS_AS(spectral_decompose(mat2(1, 0, 0, 0)), es_error);
}

}  // TEST_SUITE
