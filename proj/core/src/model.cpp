#include "esdelay/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "esdelay/errors.hpp"

namespace esdelay {

namespace {
constexpr double kInvE = 0.36787944117144233;  // 1/e
}

const char* variant_name(variant v) {
  switch (v) {
    case variant::continuous: return "continuous";
    case variant::sampled: return "sampled";
    case variant::single_var_continuous: return "single_var_continuous";
    case variant::single_var_sampled: return "single_var_sampled";
  }
  return "?";
}

variant variant_from_name(const std::string& name) {
  if (name == "continuous") return variant::continuous;
  if (name == "sampled") return variant::sampled;
  if (name == "single_var_continuous") return variant::single_var_continuous;
  if (name == "single_var_sampled") return variant::single_var_sampled;
  fail(errc::bad_input, "unknown variant '" + name + "'");
}

bool is_sampled(variant v) {
  return v == variant::sampled || v == variant::single_var_sampled;
}

bool is_single_var(variant v) {
  return v == variant::single_var_continuous || v == variant::single_var_sampled;
}

diagonalization spectral_decompose(const mat& h_bar) {
  if (h_bar.rows() != h_bar.cols()) fail(errc::dimension_mismatch, "Hessian must be square");
  if (!is_symmetric(h_bar, 1e-12)) fail(errc::not_symmetric, "Hessian not symmetric to 1e-12 relative");
  eig_result e = jacobi_eigen(h_bar);
  const double lam_max = std::fabs(e.values.front());
  bool pos = false, neg = false;
  for (double lam : e.values) {
    if (std::fabs(lam) <= 1e-12 * std::max(lam_max, 1e-300))
      fail(errc::indefinite, "Hessian has a (numerically) zero eigenvalue");
    (lam > 0.0 ? pos : neg) = true;
  }
  if (pos && neg) fail(errc::indefinite, "Hessian has mixed-sign eigenvalues");
  return diagonalization{std::move(e.vectors), std::move(e.values)};
}

vec to_diag_frame(const vec& x, const diagonalization& d) {
  if (x.size() != d.u.rows()) fail(errc::dimension_mismatch, "to_diag_frame size");
  return d.u.apply(x);
}

vec from_diag_frame(const vec& x, const diagonalization& d) {
  if (x.size() != d.u.rows()) fail(errc::dimension_mismatch, "from_diag_frame size");
  return d.u.apply_transpose(x);
}

vec backmap_box(const vec& per_axis_bounds, const diagonalization& d) {
  if (per_axis_bounds.size() != d.u.rows()) fail(errc::dimension_mismatch, "backmap_box size");
  return d.u.abs().apply_transpose(per_axis_bounds);
}

vec solve_initial_box(const vec& sigma0_bar, const diagonalization& d) {
  if (sigma0_bar.size() != d.u.rows()) fail(errc::dimension_mismatch, "solve_initial_box size");
  return solve_linear(d.u.abs(), sigma0_bar);
}

double validated_problem::d_bar(std::size_t i) const {
  return is_sampled(v) ? delays.d_in[i] : delays.d_in[i] + delays.d_out;
}

double validated_problem::d_bar_max() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n(); ++i) m = std::max(m, d_bar(i));
  return m;
}

double validated_problem::d_im(std::size_t i, double eps) const {
  if (is_sampled(v)) return d_bar(i) + eps / std::pow(2.0, double(n()));
  return d_bar(i) + mu() * eps;
}

double validated_problem::d_m(double eps) const {
  double m = 0.0;
  for (std::size_t i = 0; i < n(); ++i) m = std::max(m, d_im(i, eps));
  return m;
}

bool validated_problem::single_input_delay() const {
  for (std::size_t i = 1; i < n(); ++i)
    if (std::fabs(delays.d_in[i] - delays.d_in[0]) > 1e-12 * std::max(1.0, delays.d_in[0]))
      return false;
  return true;
}

bool validated_problem::requires_grid() const {
  return n() > 1 && !single_input_delay();
}

double validated_problem::grid_eps(long q) const {
  if (q < 1) fail(errc::bad_input, "grid index q must be a positive integer");
  return d_bar(0) / (double(q) * double(delays.m[0]));
}

bool validated_problem::on_grid(double eps, double rel_tol) const {
  if (eps <= 0.0) return false;
  const double q = d_bar(0) / (eps * double(delays.m[0]));
  return std::fabs(q - std::round(q)) <= rel_tol * std::max(1.0, q);
}

namespace {

void check_sizes(const quadratic_map_spec& map, const delay_profile& delays,
                 const tuning_config& tuning) {
  const std::size_t n = map.n;
  if (n == 0) fail(errc::dimension_mismatch, "n must be positive");
  if (map.h_bar.rows() != n || map.h_bar.cols() != n)
    fail(errc::dimension_mismatch, "h_bar must be n x n");
  if (map.delta_h && (map.delta_h->rows() != n || map.delta_h->cols() != n))
    fail(errc::dimension_mismatch, "delta_h must be n x n");
  if (map.theta_star && map.theta_star->size() != n)
    fail(errc::dimension_mismatch, "theta_star length");
  if (map.theta_star_box && map.theta_star_box->size() != n)
    fail(errc::dimension_mismatch, "theta_star_box length");
  if (delays.d_in.size() != n) fail(errc::dimension_mismatch, "d_in length");
  if (delays.m.size() != n) fail(errc::dimension_mismatch, "m length");
  auto want = [n](const vec& v, const char* name) {
    if (v.size() != n) fail(errc::dimension_mismatch, std::string(name) + " length");
  };
  want(tuning.k, "k");
  want(tuning.a, "a");
  want(tuning.sigma0_bar, "sigma0_bar");
  want(tuning.sigma_bar, "sigma_bar");
}

}  // namespace

validated_problem validate_problem(const quadratic_map_spec& map,
                                   const delay_profile& delays,
                                   const tuning_config& tuning, variant v) {
  check_sizes(map, delays, tuning);
  const std::size_t n = map.n;

  if (is_single_var(v)) {
    if (n != 1) fail(errc::dimension_mismatch, "single-variable variant requires n = 1");
    if (!map.h_m || !map.h_max)
      fail(errc::dimension_mismatch, "single-variable variant requires h_m and h_M");
    if (!(*map.h_m > 0.0) || !(*map.h_max >= *map.h_m))
      fail(errc::bad_input, "need 0 < h_m <= h_M");
  }
  if (is_sampled(v)) {
    if (delays.d_out != 0.0) fail(errc::bad_input, "sampled variants have no output delay (d_out = 0)");
    if (delays.mu != 0.0 || tuning.mu != 0.0)
      fail(errc::bad_input, "sampled variants have no delay jitter (mu = 0)");
  } else if (!(delays.d_out > 0.0)) {
    fail(errc::bad_input, "continuous variants require d_out > 0");
  }

  if (map.kappa < 0.0 || tuning.kappa < 0.0) fail(errc::bad_input, "kappa must be >= 0");
  if (std::fabs(map.kappa - tuning.kappa) > 1e-12 * std::max(1.0, map.kappa))
    fail(errc::bad_input, "map.kappa and tuning.kappa disagree");
  if (delays.mu < 0.0 || tuning.mu < 0.0) fail(errc::bad_input, "mu must be >= 0");
  if (std::fabs(delays.mu - tuning.mu) > 1e-12 * std::max(1.0, delays.mu))
    fail(errc::bad_input, "delays.mu and tuning.mu disagree");
  if (!(tuning.epsilon > 0.0)) fail(errc::bad_input, "epsilon must be positive");
  if (tuning.q < 1) fail(errc::bad_input, "q must be a positive integer");
  if (map.q_star_max < 0.0) fail(errc::bad_input, "q_star_max must be >= 0");
  if (map.q_star && std::fabs(*map.q_star) > map.q_star_max + 1e-12)
    fail(errc::bad_input, "|q_star| exceeds q_star_max");

  for (std::size_t i = 0; i < n; ++i) {
    if (!(delays.d_in[i] > 0.0)) fail(errc::bad_input, "input delays must be positive");
    if (delays.m[i] < 1) fail(errc::bad_input, "commensurability multipliers must be positive integers");
    if (tuning.a[i] == 0.0) fail(errc::bad_input, "dither amplitudes must be nonzero");
    if (!(tuning.sigma0_bar[i] > 0.0) || !(tuning.sigma_bar[i] > tuning.sigma0_bar[i])) {
      std::ostringstream os;
      os << "need sigma_bar > sigma0_bar > 0 on channel " << (i + 1);
      fail(errc::box_inverted, os.str());
    }
  }

  validated_problem p;
  p.v = v;
  p.map = map;
  p.delays = delays;
  p.tuning = tuning;
  p.diag = spectral_decompose(map.h_bar);

  if (map.delta_h) {
    if (!is_symmetric(*map.delta_h, 1e-12)) fail(errc::not_symmetric, "delta_h not symmetric");
    const double nrm = sym_spectral_norm(*map.delta_h);
    if (nrm > map.kappa + 1e-12 * std::max(1.0, map.kappa))
      fail(errc::bad_input, "||delta_h|| exceeds kappa");
  }
  if (map.theta_star && map.theta_star_box) {
    for (std::size_t i = 0; i < n; ++i) {
      const interval& box = (*map.theta_star_box)[i];
      if ((*map.theta_star)[i] < box.lo - 1e-12 || (*map.theta_star)[i] > box.hi + 1e-12)
        fail(errc::bad_input, "theta_star outside theta_star_box");
    }
  }
  if (is_single_var(v) && map.h_m) {
    const double nominal = std::fabs(map.h_bar(0, 0));
    if (nominal < *map.h_m - 1e-12 || nominal > *map.h_max + 1e-12)
      fail(errc::bad_input, "|h_bar| outside [h_m, h_M]");
  }

  // A1: m_i * Dbar_j = m_j * Dbar_i within 1e-9 relative
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double lhs = double(delays.m[i]) * p.d_bar(j);
      const double rhs = double(delays.m[j]) * p.d_bar(i);
      if (std::fabs(lhs - rhs) > 1e-9 * std::max(std::fabs(lhs), std::fabs(rhs))) {
        std::ostringstream os;
        os << "m_" << (i + 1) << " Dbar_" << (j + 1) << " != m_" << (j + 1) << " Dbar_"
           << (i + 1) << " (" << lhs << " vs " << rhs << ")";
        fail(errc::non_commensurate_delays, os.str());
      }
    }
  }

  p.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double kh = tuning.k[i] * p.diag.h_bar_diag[i];
    if (kh >= 0.0) {
      std::ostringstream os;
      os << "k_" << (i + 1) << " h_bar_" << (i + 1) << " = " << kh << " must be negative";
      fail(errc::not_hurwitz, os.str());
    }
    p.delta[i] = std::fabs(kh);
    // gain bound from the fundamental-solution positivity condition
    const double rate = is_single_var(v) ? std::fabs(tuning.k[i]) * *map.h_max : p.delta[i];
    const double lim = kInvE / p.d_bar(i);
    if (rate >= lim) {
      std::ostringstream os;
      os << "channel " << (i + 1) << ": |k h| = " << rate << " >= 1/(e Dbar) = " << lim;
      fail(errc::gain_infeasible, os.str());
    }
  }
  return p;
}

}  // namespace esdelay
