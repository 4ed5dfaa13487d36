#ifndef ESDELAY_SIM_HPP
#define ESDELAY_SIM_HPP

#include <functional>
#include <string>

#include "esdelay/dither.hpp"
#include "esdelay/model.hpp"

namespace esdelay {

struct sim_config {
  double epsilon = 0.0;
  double horizon = 0.0;
  double step = 0.0;  // integrator / record step, default epsilon/400
  vec init_theta_hat;
  std::function<double(double)> delta_d;  // default rho * sin(t)
  std::size_t record_stride = 1;
};

// Called once per integrator step (continuous) or record point (sampled).
using sim_observer =
    std::function<void(double t, const vec& vartheta_tilde, const vec& theta_tilde)>;

struct sim_trace {
  std::size_t n = 0;
  double control_start = 0.0;
  vec times;
  std::vector<vec> theta_hat;        // [channel][record]
  std::vector<vec> theta_tilde;      // [channel][record]
  std::vector<vec> vartheta_hat;     // [channel][record]
  std::vector<vec> vartheta_tilde;   // [channel][record]
  vec y;                             // measured output at record times
  std::vector<vec> delays_applied;   // realized D_i(t) at record times
  vec sampling_instants;             // sampled variants only

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  std::string to_csv() const;
};

sim_trace simulate_continuous_es(const validated_problem& p, const sim_config& cfg,
                                 const sim_observer& observer = {});
sim_trace simulate_sampled_es(const validated_problem& p, const sim_config& cfg,
                              const sim_observer& observer = {});
// dispatches on p.v
sim_trace simulate(const validated_problem& p, const sim_config& cfg,
                   const sim_observer& observer = {});

struct fundamental_solution_sample {
  double a = 0.0;
  double s = 0.0;
  double step = 0.0;
  vec t;
  vec x;  // X(t, s); zero before s, X(s,s) = 1
};

// Method-of-steps integration of xdot(t) = -a x(t - g(t)) with unit start and
// zero pre-history.
fundamental_solution_sample fundamental_solution(double a,
                                                 const std::function<double(double)>& delay_fn,
                                                 double s, double horizon, double step);

struct certification {
  bool certified = false;
  std::string reason;
  double min_x = 0.0;
  double max_violation = 0.0;  // worst overshoot above the two-piece bound
};

// Checks 0 < X <= 1 on [s, s+L] and X <= exp(-a (t-s-L)) afterwards; only
// applicable when a*L <= 1/e. Positivity uses a -1e-12 round-off floor.
certification certify_fundamental_bounds(const fundamental_solution_sample& fs, double L,
                                         double grid_tol = 1e-6);

struct diagnostics_series {
  vec t;
  std::vector<vec> g;  // [channel][index], zero before D_M + eps
  std::vector<vec> z;  // vartheta_tilde - g
  vec g_bound;         // eps |k_i| Delta_1 / |a_i| per channel
  double max_g_ratio = 0.0;  // max |G_i| / bound over the series
};

// Averaged-state diagnostics recovered from a recorded trace by windowed
// quadrature; the trace must resolve the averaging window with >= 200 samples.
diagnostics_series averaged_state_diagnostics(const sim_trace& trace,
                                              const validated_problem& p, double eps);

}  // namespace esdelay

#endif
