#ifndef ESDELAY_MODEL_HPP
#define ESDELAY_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "esdelay/linalg.hpp"

namespace esdelay {

enum class variant {
  continuous,            // n-dim gradient ES, sine dithers, input + output delays
  sampled,               // n-dim sampled-data ES, square dithers, input delays only
  single_var_continuous, // scalar map, sine dither with phase-advanced probe
  single_var_sampled,    // scalar map, square dither, zero-order hold
};

const char* variant_name(variant v);
variant variant_from_name(const std::string& name);
bool is_sampled(variant v);
bool is_single_var(variant v);

struct interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// The uncertain quadratic map. h_bar is the known nominal Hessian; kappa
// bounds the spectral norm of the (optional, simulation-only) delta_h.
// Single-variable variants carry the interval curvature bounds h_m <= |h| <= h_M
// explicitly instead of deriving them from kappa.
struct quadratic_map_spec {
  std::size_t n = 0;
  std::optional<double> q_star;       // true extremum value (simulation only)
  double q_star_max = 0.0;            // Q*_M
  std::optional<vec> theta_star;      // true extremum point (simulation only)
  std::optional<std::vector<interval>> theta_star_box;
  mat h_bar;
  std::optional<mat> delta_h;         // true Hessian perturbation (simulation only)
  double kappa = 0.0;
  std::optional<double> h_m;          // single-variable lower curvature bound
  std::optional<double> h_max;        // single-variable upper curvature bound
};

struct delay_profile {
  double d_out = 0.0;                     // nominal output delay D (0 for sampled)
  double mu = 0.0;                        // rho = mu * epsilon
  vec d_in;                               // input delays D_i^in (sampled: D_i)
  std::vector<long> m;                    // commensurability multipliers m_i
  std::function<double(double)> delta_d;  // optional realization of the output-delay jitter
};

struct tuning_config {
  vec k;
  vec a;
  vec sigma0_bar;  // initial-error radii in the diagonalized frame
  vec sigma_bar;   // confinement radii
  double mu = 0.0;
  double kappa = 0.0;
  long q = 1;      // frequency multiplier of the commensurate grid
  double epsilon = 0.0;
};

struct diagonalization {
  mat u;           // orthogonal, rows are eigenvectors: u * h_bar * u^T = diag
  vec h_bar_diag;  // h_bar_1 .. h_bar_n, sorted by descending magnitude
  const mat& b() const { return u; }  // entries b_ij used for back-mapping
};

// Orthogonal diagonalization of the nominal Hessian with a deterministic
// ordering and sign convention.
diagonalization spectral_decompose(const mat& h_bar);

vec to_diag_frame(const vec& x, const diagonalization& d);
vec from_diag_frame(const vec& x, const diagonalization& d);

// Per-axis bound transport between frames: B_i = sum_j |b_ji| * bound_j.
vec backmap_box(const vec& per_axis_bounds, const diagonalization& d);
// Inverse problem: find sigma0 with sum_i |b_ji| sigma0_i = sigma0_bar_j.
vec solve_initial_box(const vec& sigma0_bar, const diagonalization& d);

struct validated_problem {
  variant v = variant::continuous;
  quadratic_map_spec map;
  delay_profile delays;
  tuning_config tuning;
  diagonalization diag;
  vec delta;  // decay rates |k_i h_bar_i|

  std::size_t n() const { return map.n; }
  double kappa() const { return map.kappa; }
  double mu() const { return is_sampled(v) ? 0.0 : delays.mu; }
  double q_star_max() const { return map.q_star_max; }

  // nominal total delay per channel: D_i^in + D (continuous) or D_i (sampled)
  double d_bar(std::size_t i) const;
  double d_bar_max() const;
  // delay bound D_iM(eps); sampled variants use D_i + eps/2^n
  double d_im(std::size_t i, double eps) const;
  double d_m(double eps) const;

  bool single_input_delay() const;  // all input delays equal
  bool requires_grid() const;       // distinct delays force the commensurate grid
  double grid_eps(long q) const;    // eps(q) = D_bar_1 / (q m_1)
  bool on_grid(double eps, double rel_tol = 1e-9) const;

  double h_m() const { return map.h_m.value_or(0.0); }
  double h_max() const { return map.h_max.value_or(0.0); }
};

// Checks assumptions A1-A5 prerequisites, attaches the diagonalization and
// freezes the bundle. Reports the violating channel for gain problems.
validated_problem validate_problem(const quadratic_map_spec& map,
                                   const delay_profile& delays,
                                   const tuning_config& tuning,
                                   variant v);

}  // namespace esdelay

#endif
