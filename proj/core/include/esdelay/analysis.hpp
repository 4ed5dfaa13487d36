#ifndef ESDELAY_ANALYSIS_HPP
#define ESDELAY_ANALYSIS_HPP

#include <optional>
#include <string>
#include <vector>

#include "esdelay/model.hpp"

namespace esdelay {

// Closed-form constants of the disturbance bounds. Which group is populated
// depends on the variant.
struct bound_constants {
  variant v = variant::continuous;
  double delta1 = 0.0;      // n-dim
  double delta2 = 0.0;      // n-dim continuous
  double deltabar1 = 0.0;   // n-dim continuous
  double deltabar2 = 0.0;   // n-dim continuous
  double deltatilde1 = 0.0; // n-dim sampled
  double deltatilde2 = 0.0; // n-dim sampled
  double delta_1d = 0.0;    // single-variable
};

// W_i(eps, mu, kappa) split into the eps-linear part and the (mu, kappa)
// offset, so the feasibility bisection can reason about the affine form.
struct disturbance_term {
  double eps_coeff = 0.0;
  double offset = 0.0;
  double value(double eps) const { return eps_coeff * eps + offset; }
};

struct condition_values {
  vec phi1;
  vec phi2;
  bool feasible() const;
};

struct eps_star_result {
  double eps_star = 0.0;
  std::size_t binding_channel = 0;  // channel whose Phi2 pins the bound
  std::optional<long> grid_q;       // set when snapped to the commensurate grid
};

struct ultimate_box_result {
  vec omega;       // Omega_i (continuous) or Theta_i (sampled)
  vec backmapped;  // B_i = sum_j |b_ji| omega_j
};

struct refinement_result {
  std::vector<vec> trail;   // B-bar iterates, one vector per pass
  vec final_ub;             // reported ultimate bound per channel
  vec backmapped;           // |b|^T applied to final_ub
  vec sigma_bar_root;       // confinement radii solving Phi2 = 0 at the last pass
  vec sigma0_final;         // shrunken initial radii at termination
  bool gamma_stopped = false;
};

// Piecewise transient bound of one channel: two flat segments and an
// exponential tail toward the ultimate level.
struct envelope_channel {
  double t_seg2 = 0.0;   // start of the second segment
  double t_seg3 = 0.0;   // start of the exponential segment
  double level1 = 0.0;
  double level2 = 0.0;
  double coeff = 0.0;    // tail: coeff * exp(-rate*(t - t_ref)) + floor_level
  double rate = 0.0;
  double t_ref = 0.0;
  double floor_level = 0.0;
  double eval(double t) const;
};

struct transient_envelope_result {
  double t_start = 0.0;  // control start D_M; before it the error is frozen
  std::vector<envelope_channel> channels;
  double eval(std::size_t i, double t) const;
};

struct analysis_report {
  variant v = variant::continuous;
  double epsilon = 0.0;
  bound_constants constants;
  std::vector<disturbance_term> w;
  vec phi1, phi2;
  std::optional<double> eps_star;
  std::optional<std::string> eps_star_failure;  // set when the search is infeasible
  vec delta_rates;
  vec ultimate;            // Omega/Theta at `epsilon` with the user's sigma_bar
  vec ultimate_backmapped;
  std::optional<refinement_result> refinement;
  vec finite_times;        // for delta_omega = 0.1 * refined UB
  vec delta_omegas;
  transient_envelope_result envelope;
};

bound_constants compute_bound_constants(const validated_problem& p);
std::vector<disturbance_term> disturbance_bound(const validated_problem& p, double eps);
condition_values stability_conditions(const validated_problem& p, double eps);

// Largest eps with Phi1 <= 0 and Phi2 < 0 on every channel, by bisection on
// [1e-6, 10 max Dbar] (relative tolerance 1e-4, 60 iterations max). A
// 16-point downward sweep re-verifies monotone feasibility afterwards.
eps_star_result find_eps_star(const validated_problem& p, bool snap_to_grid = false);

ultimate_box_result ultimate_box(const validated_problem& p, double eps);

// Iterative tightening of the ultimate bound: at fixed eps, solve
// Phi2_i = 0 for the smallest confinement radii, evaluate the attracting box,
// shrink the initial radii to it (plus beta) and repeat until the improvement
// drops below gamma.
refinement_result refine_ultimate_bound(const validated_problem& p, double eps,
                                        double beta, double gamma);

transient_envelope_result transient_envelope(const validated_problem& p, double eps);

// Entry deadline from the exponential tail: after T_i the error stays within
// the attracting level + delta_omega_i.
vec finite_time(const validated_problem& p, double eps, const vec& delta_omega);

// Probe-induced bias level eps |k_i| Delta_1 / |a_i| (halved for square
// dithers); bounds |G_i| in the averaged-state diagnostics.
vec probe_bias_bound(const validated_problem& p, double eps);

// Runs the full pipeline at p.tuning.epsilon.
analysis_report analyze(const validated_problem& p, double refine_beta = 1e-3,
                        double refine_gamma = 1e-3);

std::string report_to_json(const analysis_report& r, const validated_problem& p);
std::string report_to_csv_row(const analysis_report& r, bool with_header);

}  // namespace esdelay

#endif
