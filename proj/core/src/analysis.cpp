#include "esdelay/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "esdelay/dither.hpp"
#include "esdelay/errors.hpp"
#include "json.hpp"

namespace esdelay {

namespace {

constexpr double kInvE = 0.36787944117144233;
constexpr double kPi = 3.14159265358979323846;

// Everything below evaluates the printed bound formulas. sigma_bar (and the
// initial radii sigma0_bar) enter as explicit arguments because the
// ultimate-bound refinement re-evaluates them at shrinking radii.
struct fctx {
  const validated_problem* p = nullptr;
  std::size_t n = 0;
  vec habs, kabs, aabs, delta;
  double kappa = 0.0, mu = 0.0, qsm = 0.0;
  bool sampled = false, onedim = false;
  double h_m = 0.0, h_max = 0.0;
  double cn = 0.0;  // (2^(n-1)+1)/2^n

  static fctx make(const validated_problem& p) {
    fctx c;
    c.p = &p;
    c.n = p.n();
    c.habs.resize(c.n);
    c.kabs.resize(c.n);
    c.aabs.resize(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
      c.habs[i] = std::fabs(p.diag.h_bar_diag[i]);
      c.kabs[i] = std::fabs(p.tuning.k[i]);
      c.aabs[i] = std::fabs(p.tuning.a[i]);
    }
    c.delta = p.delta;
    c.kappa = p.kappa();
    c.mu = p.mu();
    c.qsm = p.q_star_max();
    c.sampled = is_sampled(p.v);
    c.onedim = is_single_var(p.v);
    c.h_m = p.h_m();
    c.h_max = p.h_max();
    const double two_n = std::pow(2.0, double(c.n));
    c.cn = (two_n / 2.0 + 1.0) / two_n;
    return c;
  }

  double s_sigma(const vec& sb) const {
    double s = 0.0;
    for (double v : sb) s += v * v;
    return std::sqrt(s);
  }
  double s_a() const {
    double s = 0.0;
    for (double v : aabs) s += v * v;
    return std::sqrt(s);
  }
  double s_k_over_a() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (kabs[j] / aabs[j]) * (kabs[j] / aabs[j]);
    return std::sqrt(s);
  }
  double s_ja() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += double(j + 1) * double(j + 1) * aabs[j] * aabs[j];
    return std::sqrt(s);
  }

  double delta1_nd(const vec& sb) const {
    double s = qsm;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = sb[j] + aabs[j];
      s += 0.5 * habs[j] * t * t;
    }
    const double u = s_sigma(sb) + s_a();
    return s + 0.5 * kappa * u * u;
  }

  double delta2_nd(const vec& sb) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double jj = double(j + 1);
      s += jj * habs[j] * aabs[j] * (aabs[j] + kPi * mu * jj * aabs[j] + sb[j]);
    }
    const double sja = s_ja();
    return 4.0 * kPi * s +
           4.0 * kPi * kappa * sja * (s_a() + kPi * mu * sja + s_sigma(sb));
  }

  // shared inner sums of the double-integral bounds
  double sum_hk_sigma_over_a(const vec& sb) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += habs[j] * kabs[j] * sb[j] / aabs[j];
    return s;
  }
  double sum_hk() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += habs[j] * kabs[j];
    return s;
  }

  std::pair<double, double> deltabar_nd(const vec& sb) const {
    const double d1 = delta1_nd(sb);
    const double cross = kappa * s_sigma(sb) * s_k_over_a();
    const double pref = 2.0 * (1.0 + 4.0 * mu) * d1;
    return {pref * (sum_hk_sigma_over_a(sb) + cross), pref * (sum_hk() + cross)};
  }

  std::pair<double, double> deltatilde_nd(const vec& sb) const {
    const double d1 = delta1_nd(sb);
    const double cross = kappa * s_sigma(sb) * s_k_over_a();
    const double pref = cn * d1;
    return {pref * (sum_hk_sigma_over_a(sb) + cross), pref * (sum_hk() + cross)};
  }

  double delta_1d(const vec& sb) const {
    const double t = sb[0] + aabs[0];
    return (2.0 * kabs[0] / aabs[0]) * (qsm + 0.5 * h_max * t * t);
  }

  disturbance_term w_term(std::size_t i, const vec& sb) const {
    disturbance_term w;
    if (onedim) {
      const double d = delta_1d(sb);
      if (!sampled) {
        w.eps_coeff = (aabs[0] + (2.0 + 8.0 * mu) * (sb[0] + aabs[0])) * d / (2.0 * aabs[0]);
        w.offset = 4.0 * kPi * mu * (aabs[0] + mu * kPi * aabs[0] + sb[0]);
      } else {
        w.eps_coeff = (d / 4.0) * (3.0 + 2.0 * sb[0] / aabs[0]);
        w.offset = 0.0;
      }
      return w;
    }
    const double d1 = delta1_nd(sb);
    if (!sampled) {
      const auto [db1, db2] = deltabar_nd(sb);
      w.eps_coeff = (kabs[i] / aabs[i]) * (delta[i] * d1 + db1 + db2);
      w.offset = (mu * kabs[i] / aabs[i]) * delta2_nd(sb) + kappa * kabs[i] * s_sigma(sb);
    } else {
      const auto [dt1, dt2] = deltatilde_nd(sb);
      w.eps_coeff = (kabs[i] / aabs[i]) * (0.5 * delta[i] * d1 + dt1 + dt2);
      w.offset = kappa * kabs[i] * s_sigma(sb);
    }
    return w;
  }

  // exponential-rate * effective-delay product appearing in Phi and the bounds
  double rate(std::size_t i) const { return onedim ? kabs[0] * h_max : delta[i]; }
  double attraction_rate(std::size_t i) const { return onedim ? kabs[0] * h_m : delta[i]; }

  double d_eff(std::size_t i, double eps) const {
    if (onedim && sampled) return p->d_bar(0) + 0.5 * eps;
    return p->d_im(i, eps);  // D_i^in + D + mu*eps, or D_i + eps/2^n
  }

  // the O(eps) probe-induced bias term: eps |k_i| Delta_1 / |a_i| (halved for
  // square dithers)
  double lin(std::size_t i, double eps, const vec& sb) const {
    if (onedim) return 0.5 * eps * delta_1d(sb) * (sampled ? 0.5 : 1.0);
    return eps * kabs[i] * delta1_nd(sb) / aabs[i] * (sampled ? 0.5 : 1.0);
  }

  double phi1(std::size_t i, double eps) const {
    return rate(i) * d_eff(i, eps) - kInvE;
  }

  double w_div(std::size_t i, const disturbance_term& w, double eps) const {
    return onedim ? w.value(eps) : w.value(eps) / delta[i];
  }

  double phi2(std::size_t i, double eps, const vec& s0, const vec& sb) const {
    const disturbance_term w = w_term(i, sb);
    const double e = std::exp(rate(i) * d_eff(i, eps));
    const double l = lin(i, eps, sb);
    return e * (s0[i] + 3.0 * l + w_div(i, w, eps)) + l - sb[i];
  }

  double omega(std::size_t i, double eps, const vec& sb) const {
    const disturbance_term w = w_term(i, sb);
    const double e = std::exp(rate(i) * d_eff(i, eps));
    return e * w_div(i, w, eps) + lin(i, eps, sb);
  }

  double control_start(double eps) const {
    return sampled ? p->d_bar_max() : p->d_m(eps);
  }
};

bool feasible_at(const fctx& c, double eps, const vec& s0, const vec& sb) {
  for (std::size_t i = 0; i < c.n; ++i) {
    if (c.phi1(i, eps) > 0.0) return false;
    if (c.phi2(i, eps, s0, sb) >= 0.0) return false;
  }
  return true;
}

}  // namespace

bool condition_values::feasible() const {
  for (double v : phi1)
    if (v > 0.0) return false;
  for (double v : phi2)
    if (v >= 0.0) return false;
  return true;
}

double envelope_channel::eval(double t) const {
  if (t <= t_seg2) return level1;
  if (t <= t_seg3) return level2;
  return coeff * std::exp(-rate * (t - t_ref)) + floor_level;
}

double transient_envelope_result::eval(std::size_t i, double t) const {
  return channels[i].eval(t);
}

bound_constants compute_bound_constants(const validated_problem& p) {
  const fctx c = fctx::make(p);
  const vec& sb = p.tuning.sigma_bar;
  bound_constants out;
  out.v = p.v;
  if (c.onedim) {
    out.delta_1d = c.delta_1d(sb);
    return out;
  }
  out.delta1 = c.delta1_nd(sb);
  if (!c.sampled) {
    out.delta2 = c.delta2_nd(sb);
    std::tie(out.deltabar1, out.deltabar2) = c.deltabar_nd(sb);
  } else {
    std::tie(out.deltatilde1, out.deltatilde2) = c.deltatilde_nd(sb);
  }
  return out;
}

std::vector<disturbance_term> disturbance_bound(const validated_problem& p, double eps) {
  if (!(eps > 0.0)) fail(errc::bad_input, "eps must be positive");
  const fctx c = fctx::make(p);
  std::vector<disturbance_term> w(c.n);
  for (std::size_t i = 0; i < c.n; ++i) w[i] = c.w_term(i, p.tuning.sigma_bar);
  return w;
}

condition_values stability_conditions(const validated_problem& p, double eps) {
  if (!(eps > 0.0)) fail(errc::bad_input, "eps must be positive");
  const fctx c = fctx::make(p);
  condition_values cv;
  cv.phi1.resize(c.n);
  cv.phi2.resize(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    cv.phi1[i] = c.phi1(i, eps);
    cv.phi2[i] = c.phi2(i, eps, p.tuning.sigma0_bar, p.tuning.sigma_bar);
  }
  return cv;
}

eps_star_result find_eps_star(const validated_problem& p, bool snap_to_grid) {
  const fctx c = fctx::make(p);
  const vec& s0 = p.tuning.sigma0_bar;
  const vec& sb = p.tuning.sigma_bar;

  // eps -> 0 limit: the (mu, kappa) offsets survive, so feasibility there is
  // a genuine precondition, not a tautology.
  for (std::size_t i = 0; i < c.n; ++i) {
    const double lim = c.phi2(i, 0.0, s0, sb);
    if (lim >= 0.0) {
      std::ostringstream os;
      os << "channel " << (i + 1) << ": Phi2 limit at eps->0 is " << lim
         << " >= 0 (sigma0_bar, gains, or kappa/mu too large)";
      fail(errc::infeasible_at_zero, os.str());
    }
    if (c.phi1(i, 0.0) > 0.0) {
      std::ostringstream os;
      os << "channel " << (i + 1) << ": Phi1 at eps->0 already positive";
      fail(errc::infeasible_at_zero, os.str());
    }
  }

  double lo = 0.0;
  double hi = 10.0 * p.d_bar_max();
  eps_star_result res;
  auto refine_bracket = [&](double a, double b) {
    lo = a;
    hi = b;
    for (int it = 0; it < 60 && (hi - lo) > 1e-5 * std::max(lo, 1e-9); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (feasible_at(c, mid, s0, sb))
        lo = mid;
      else
        hi = mid;
    }
  };

  if (feasible_at(c, hi, s0, sb)) {
    lo = hi;  // feasible over the whole search bracket
  } else {
    const double start_lo = feasible_at(c, 1e-6, s0, sb) ? 1e-6 : 0.0;
    refine_bracket(start_lo, hi);
  }

  // guard sweep: the conditions are monotone in eps by construction, but a
  // regression here would silently inflate eps*
  for (int round = 0; round < 5; ++round) {
    bool clean = true;
    for (int j = 1; j <= 16; ++j) {
      const double e = lo * double(j) / 16.0;
      if (e > 0.0 && !feasible_at(c, e, s0, sb)) {
        refine_bracket(0.0, e);
        clean = false;
        break;
      }
    }
    if (clean) break;
  }

  res.eps_star = lo;
  std::size_t worst = 0;
  double worst_phi = -1e300;
  const double probe = std::min(hi, lo * 1.0001);
  for (std::size_t i = 0; i < c.n; ++i) {
    const double v = c.phi2(i, probe, s0, sb);
    if (v > worst_phi) {
      worst_phi = v;
      worst = i;
    }
  }
  res.binding_channel = worst;

  if (snap_to_grid) {
    const epsilon_grid grid = commensurate_epsilon_grid(p);
    long q = 0;
    res.eps_star = grid.largest_below(res.eps_star, &q);
    res.grid_q = q;
  }
  return res;
}

ultimate_box_result ultimate_box(const validated_problem& p, double eps) {
  const fctx c = fctx::make(p);
  if (!feasible_at(c, eps, p.tuning.sigma0_bar, p.tuning.sigma_bar))
    fail(errc::infeasible, "stability conditions do not hold at this eps");
  ultimate_box_result r;
  r.omega.resize(c.n);
  for (std::size_t i = 0; i < c.n; ++i) r.omega[i] = c.omega(i, eps, p.tuning.sigma_bar);
  r.backmapped = backmap_box(r.omega, p.diag);
  return r;
}

namespace {

// Smallest root of Phi2_i = 0 in sigma_bar_i, holding the other radii fixed.
// Phi2 is positive at the left edge, dips negative while the -sigma term
// dominates, and grows again once the quadratic terms take over.
double smallest_sigma_root(const fctx& c, std::size_t i, double eps, const vec& s0,
                           vec sb, double lo, double hi) {
  auto g = [&](double s) {
    sb[i] = s;
    return c.phi2(i, eps, s0, sb);
  };
  const int kScan = 600;
  double prev_x = lo, prev_v = g(lo);
  if (prev_v < 0.0) return lo;  // already past the first crossing
  const double ratio = std::pow(hi / lo, 1.0 / kScan);
  double x = lo;
  for (int s = 1; s <= kScan; ++s) {
    x = (s == kScan) ? hi : x * ratio;
    const double v = g(x);
    if (v < 0.0) {
      double a = prev_x, b = x;
      for (int it = 0; it < 200 && (b - a) > 1e-14 * b; ++it) {
        const double m = 0.5 * (a + b);
        (g(m) >= 0.0 ? a : b) = m;
      }
      return b;  // certainly on the feasible side
    }
    prev_x = x;
    prev_v = v;
  }
  (void)prev_v;
  std::ostringstream os;
  os << "Phi2_" << (i + 1) << " = 0 has no root for sigma_bar in (" << lo << ", " << hi
     << ") at eps = " << eps;
  fail(errc::no_root, os.str());
}

// Least simultaneous solution of Phi2_i(sigma_bar) = 0: Gauss-Seidel from
// below; each Phi2_i is increasing in the other radii, so the sweeps are
// monotone and converge to the least fixed point when one exists.
vec solve_phi2_roots(const fctx& c, double eps, const vec& s0, double hi_cap) {
  vec sb(c.n);
  for (std::size_t i = 0; i < c.n; ++i) sb[i] = s0[i] * (1.0 + 1e-12);
  for (int sweep = 0; sweep < 500; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) {
      const double root =
          smallest_sigma_root(c, i, eps, s0, sb, s0[i] * (1.0 + 1e-12), hi_cap);
      change = std::max(change, std::fabs(root - sb[i]) / std::max(root, 1e-300));
      sb[i] = root;
    }
    if (change < 1e-11) return sb;
  }
  fail(errc::stalled, "sigma_bar fixed-point sweeps did not converge");
}

}  // namespace

refinement_result refine_ultimate_bound(const validated_problem& p, double eps,
                                        double beta, double gamma) {
  const fctx c = fctx::make(p);
  if (!(beta > 0.0) || !(gamma > 0.0)) fail(errc::bad_input, "beta and gamma must be positive");
  for (double s : p.tuning.sigma0_bar)
    if (!(beta < s)) fail(errc::bad_input, "beta must be below every sigma0_bar");
  if (!feasible_at(c, eps, p.tuning.sigma0_bar, p.tuning.sigma_bar))
    fail(errc::infeasible, "refinement requires a feasible starting configuration");

  const double hi_cap =
      1e3 * std::max(1.0, *std::max_element(p.tuning.sigma0_bar.begin(),
                                            p.tuning.sigma0_bar.end()));
  refinement_result out;
  vec s0 = p.tuning.sigma0_bar;
  std::vector<vec> roots_per_pass;
  std::vector<vec> s0_per_pass;
  for (int pass = 0; pass < 100; ++pass) {
    s0_per_pass.push_back(s0);
    roots_per_pass.push_back(solve_phi2_roots(c, eps, s0, hi_cap));
    vec b(c.n);
    for (std::size_t i = 0; i < c.n; ++i) b[i] = c.omega(i, eps, roots_per_pass.back());
    out.trail.push_back(b);

    if (out.trail.size() >= 2) {
      const vec& prev = out.trail[out.trail.size() - 2];
      bool settled = true;
      for (std::size_t i = 0; i < c.n; ++i)
        if (prev[i] - b[i] >= gamma) settled = false;
      if (settled) {
        // the sub-gamma pass adds nothing at this granularity
        out.trail.pop_back();
        roots_per_pass.pop_back();
        s0_per_pass.pop_back();
        out.gamma_stopped = true;
        break;
      }
    }

    bool any_reset = false;
    for (std::size_t i = 0; i < c.n; ++i) {
      if (b[i] < s0[i] - beta) {
        s0[i] = b[i] + beta;
        any_reset = true;
      }
    }
    if (!any_reset) break;
    if (pass == 99) fail(errc::stalled, "refinement hit the 100-iteration cap");
  }

  out.final_ub = out.trail.back();
  out.backmapped = backmap_box(out.final_ub, p.diag);
  out.sigma_bar_root = roots_per_pass.back();
  out.sigma0_final = s0_per_pass.back();
  return out;
}

transient_envelope_result transient_envelope(const validated_problem& p, double eps) {
  const fctx c = fctx::make(p);
  const vec& s0 = p.tuning.sigma0_bar;
  const vec& sb = p.tuning.sigma_bar;
  if (!feasible_at(c, eps, s0, sb))
    fail(errc::infeasible, "envelope requires feasibility at this eps");

  transient_envelope_result env;
  env.t_start = c.control_start(eps);
  env.channels.resize(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    envelope_channel& ch = env.channels[i];
    const double l = c.lin(i, eps, sb);
    const disturbance_term w = c.w_term(i, sb);
    const double wd = c.w_div(i, w, eps);
    const double rd = c.rate(i) * c.d_eff(i, eps);
    const double om = c.omega(i, eps, sb);

    ch.t_seg2 = env.t_start + eps;
    ch.level1 = s0[i] + 2.0 * l;
    ch.level2 = (1.0 + rd) * (s0[i] + 3.0 * l) + rd * wd + l;
    ch.rate = c.attraction_rate(i);
    ch.floor_level = om;
    if (!c.onedim) {
      ch.t_seg3 = env.t_start + c.d_eff(i, eps) + eps;
      ch.t_ref = env.t_start + 2.0 * c.d_eff(i, eps) + eps;
      ch.coeff = s0[i] + 3.0 * l;
    } else if (!c.sampled) {
      ch.t_seg3 = 2.0 * env.t_start + eps;  // 2 D_M + eps
      ch.t_ref = ch.t_seg3;
      ch.coeff = std::exp(rd) * (s0[i] + 3.0 * l);
    } else {
      ch.t_seg3 = 2.0 * p.d_bar(0) + 1.5 * eps;  // 2D + 3 eps/2
      ch.t_ref = ch.t_seg3;
      ch.coeff = std::exp(rd) * (s0[i] + 3.0 * l);
    }
  }
  return env;
}

vec finite_time(const validated_problem& p, double eps, const vec& delta_omega) {
  const fctx c = fctx::make(p);
  if (delta_omega.size() != c.n) fail(errc::dimension_mismatch, "delta_omega length");
  const vec& s0 = p.tuning.sigma0_bar;
  const vec& sb = p.tuning.sigma_bar;
  vec t(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    if (!(delta_omega[i] > 0.0)) fail(errc::bad_input, "delta_omega must be positive");
    const double xi = s0[i] + 3.0 * c.lin(i, eps, sb);
    double base, logarg;
    if (!c.onedim) {
      base = c.control_start(eps) + 2.0 * c.d_eff(i, eps) + eps;
      logarg = xi / delta_omega[i];
    } else {
      const double rd = c.rate(i) * c.d_eff(i, eps);
      base = c.sampled ? 2.0 * p.d_bar(0) + 1.5 * eps : 2.0 * c.control_start(eps) + eps;
      logarg = std::exp(rd) * xi / delta_omega[i];
    }
    t[i] = base + std::max(0.0, std::log(logarg)) / c.attraction_rate(i);
  }
  return t;
}

vec probe_bias_bound(const validated_problem& p, double eps) {
  const fctx c = fctx::make(p);
  vec b(c.n);
  for (std::size_t i = 0; i < c.n; ++i) b[i] = c.lin(i, eps, p.tuning.sigma_bar);
  return b;
}

analysis_report analyze(const validated_problem& p, double refine_beta,
                        double refine_gamma) {
  const fctx c = fctx::make(p);
  analysis_report r;
  r.v = p.v;
  r.epsilon = p.tuning.epsilon;
  r.constants = compute_bound_constants(p);
  r.w = disturbance_bound(p, r.epsilon);
  const condition_values cv = stability_conditions(p, r.epsilon);
  r.phi1 = cv.phi1;
  r.phi2 = cv.phi2;

  r.delta_rates.resize(c.n);
  for (std::size_t i = 0; i < c.n; ++i) r.delta_rates[i] = c.attraction_rate(i);

  try {
    r.eps_star = find_eps_star(p).eps_star;
  } catch (const es_error& e) {
    r.eps_star_failure = e.what();
  }

  if (cv.feasible()) {
    const ultimate_box_result ub = ultimate_box(p, r.epsilon);
    r.ultimate = ub.omega;
    r.ultimate_backmapped = ub.backmapped;
    r.refinement = refine_ultimate_bound(p, r.epsilon, refine_beta, refine_gamma);
    r.envelope = transient_envelope(p, r.epsilon);
    r.delta_omegas.resize(c.n);
    for (std::size_t i = 0; i < c.n; ++i)
      r.delta_omegas[i] = 0.1 * r.refinement->final_ub[i];
    r.finite_times = finite_time(p, r.epsilon, r.delta_omegas);
  }
  return r;
}

namespace {

nlohmann::ordered_json mat_to_json(const mat& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::string report_to_json(const analysis_report& r, const validated_problem& p) {
  using json = nlohmann::ordered_json;
  json j;
  j["variant"] = variant_name(r.v);
  j["epsilon"] = r.epsilon;

  json prob;
  prob["n"] = p.n();
  prob["h_bar"] = mat_to_json(p.map.h_bar);
  prob["q_star_max"] = p.map.q_star_max;
  prob["kappa"] = p.kappa();
  prob["mu"] = p.mu();
  if (p.map.h_m) prob["h_m"] = *p.map.h_m;
  if (p.map.h_max) prob["h_M"] = *p.map.h_max;
  prob["d_out"] = p.delays.d_out;
  prob["d_in"] = p.delays.d_in;
  prob["m"] = p.delays.m;
  prob["k"] = p.tuning.k;
  prob["a"] = p.tuning.a;
  prob["sigma0_bar"] = p.tuning.sigma0_bar;
  prob["sigma_bar"] = p.tuning.sigma_bar;
  prob["u"] = mat_to_json(p.diag.u);
  prob["h_bar_diag"] = p.diag.h_bar_diag;
  j["problem"] = prob;

  json cons;
  switch (r.v) {
    case variant::continuous:
      cons["delta1"] = r.constants.delta1;
      cons["delta2"] = r.constants.delta2;
      cons["deltabar1"] = r.constants.deltabar1;
      cons["deltabar2"] = r.constants.deltabar2;
      break;
    case variant::sampled:
      cons["delta1"] = r.constants.delta1;
      cons["deltatilde1"] = r.constants.deltatilde1;
      cons["deltatilde2"] = r.constants.deltatilde2;
      break;
    default:
      cons["delta"] = r.constants.delta_1d;
  }
  j["constants"] = cons;

  json w = json::array();
  for (const auto& t : r.w)
    w.push_back({{"eps_coeff", t.eps_coeff},
                 {"offset", t.offset},
                 {"value", t.value(r.epsilon)}});
  j["w"] = w;
  j["phi1"] = r.phi1;
  j["phi2"] = r.phi2;
  if (r.eps_star)
    j["eps_star"] = *r.eps_star;
  else
    j["eps_star"] = nullptr;
  if (r.eps_star_failure) j["eps_star_failure"] = *r.eps_star_failure;
  j["delta_rates"] = r.delta_rates;
  j["ultimate"] = r.ultimate;
  j["ultimate_backmapped"] = r.ultimate_backmapped;
  if (r.refinement) {
    json ref;
    ref["trail"] = r.refinement->trail;
    ref["final_ub"] = r.refinement->final_ub;
    ref["backmapped"] = r.refinement->backmapped;
    ref["sigma_bar_root"] = r.refinement->sigma_bar_root;
    ref["sigma0_final"] = r.refinement->sigma0_final;
    ref["gamma_stopped"] = r.refinement->gamma_stopped;
    j["refinement"] = ref;
  }
  if (!r.finite_times.empty()) {
    j["delta_omegas"] = r.delta_omegas;
    j["finite_times"] = r.finite_times;
    json env = json::array();
    for (const auto& ch : r.envelope.channels)
      env.push_back({{"t_start", r.envelope.t_start},
                     {"t_seg2", ch.t_seg2},
                     {"t_seg3", ch.t_seg3},
                     {"level1", ch.level1},
                     {"level2", ch.level2},
                     {"coeff", ch.coeff},
                     {"rate", ch.rate},
                     {"t_ref", ch.t_ref},
                     {"floor", ch.floor_level}});
    j["envelope"] = env;
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv_row(const analysis_report& r, bool with_header) {
  std::ostringstream os;
  const std::size_t n = r.delta_rates.size();
  if (with_header) {
    os << "variant,epsilon,eps_star";
    for (std::size_t i = 0; i < n; ++i) os << ",delta_" << (i + 1);
    for (std::size_t i = 0; i < n; ++i) os << ",omega_" << (i + 1);
    for (std::size_t i = 0; i < n; ++i) os << ",refined_" << (i + 1);
    for (std::size_t i = 0; i < n; ++i) os << ",backmapped_" << (i + 1);
    os << "\n";
  }
  os << variant_name(r.v) << "," << format_double(r.epsilon) << ",";
  os << (r.eps_star ? format_double(*r.eps_star) : std::string("inf"));
  auto emit = [&](const vec& v) {
    for (std::size_t i = 0; i < n; ++i)
      os << "," << (i < v.size() ? format_double(v[i]) : std::string(""));
  };
  emit(r.delta_rates);
  emit(r.ultimate);
  emit(r.refinement ? r.refinement->final_ub : vec{});
  emit(r.refinement ? r.refinement->backmapped : vec{});
  os << "\n";
  return os.str();
}

}  // namespace esdelay
