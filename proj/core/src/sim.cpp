#include "esdelay/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <sstream>

#include "esdelay/analysis.hpp"
#include "esdelay/errors.hpp"

namespace esdelay {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

struct ground_truth {
  double q_star = 0.0;
  vec vartheta_star;   // U theta*
  mat h_diag_frame;    // U (h_bar + delta_h) U^T

  static ground_truth make(const validated_problem& p) {
    if (!p.map.q_star || !p.map.theta_star)
      fail(errc::bad_input, "simulation requires ground-truth q_star and theta_star");
    ground_truth g;
    g.q_star = *p.map.q_star;
    g.vartheta_star = to_diag_frame(*p.map.theta_star, p.diag);
    mat h_true = p.map.h_bar;
    if (p.map.delta_h)
      for (std::size_t i = 0; i < h_true.rows(); ++i)
        for (std::size_t j = 0; j < h_true.cols(); ++j)
          h_true(i, j) += (*p.map.delta_h)(i, j);
    g.h_diag_frame = p.diag.u.mul(h_true).mul(p.diag.u.transpose());
    return g;
  }

  // Q evaluated in the diagonalized frame: Q* + 1/2 (v - v*)^T H (v - v*)
  double eval(const vec& vartheta) const {
    const std::size_t n = vartheta.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double di = vartheta[i] - vartheta_star[i];
      for (std::size_t j = 0; j < n; ++j)
        s += di * h_diag_frame(i, j) * (vartheta[j] - vartheta_star[j]);
    }
    return q_star + 0.5 * s;
  }
};

// Uniform-grid ring buffer of past states, with constant pre-history before
// the control start.
class history_ring {
 public:
  history_ring(std::size_t n, double t0, double h, std::size_t capacity, const vec& x0)
      : n_(n), t0_(t0), h_(h), cap_(capacity), data_(capacity * n), x0_(x0) {}

  void push(const vec& x) {
    const std::size_t slot = (newest_ + 1) % cap_;
    std::copy(x.begin(), x.end(), data_.begin() + slot * n_);
    newest_ = long(slot);
    ++count_;
  }

  // state component i at time s (linear interpolation)
  void read(double s, vec& out) const {
    if (s <= t0_ + 1e-15) {
      out = x0_;
      return;
    }
    const double pos = (s - t0_) / h_;
    long k = long(std::floor(pos));
    double w = pos - double(k);
    const long newest_index = count_ - 1;  // grid index of the newest sample
    if (k >= newest_index) {
      k = newest_index - 1;
      w = 1.0;
    }
    if (k < 0) {
      out = x0_;
      return;
    }
    if (newest_index - k >= long(cap_))
      fail(errc::history_underflow, "delayed read beyond ring capacity");
    const double* lo = slot_ptr(k);
    const double* hi = slot_ptr(k + 1);
    for (std::size_t i = 0; i < n_; ++i) out[i] = (1.0 - w) * lo[i] + w * hi[i];
  }

 private:
  const double* slot_ptr(long grid_index) const {
    const long slot = ((newest_ - (count_ - 1 - grid_index)) % long(cap_) + long(cap_)) % long(cap_);
    return data_.data() + std::size_t(slot) * n_;
  }

  std::size_t n_;
  double t0_, h_;
  std::size_t cap_;
  std::vector<double> data_;
  vec x0_;
  long newest_ = -1;
  long count_ = 0;
};

struct recorder {
  sim_trace trace;
  std::size_t stride = 1;
  std::size_t step_count = 0;

  void init(const validated_problem& p, double control_start, std::size_t stride_in) {
    trace.n = p.n();
    trace.control_start = control_start;
    trace.theta_hat.assign(trace.n, {});
    trace.theta_tilde.assign(trace.n, {});
    trace.vartheta_hat.assign(trace.n, {});
    trace.vartheta_tilde.assign(trace.n, {});
    trace.delays_applied.assign(trace.n, {});
    stride = stride_in ? stride_in : 1;
  }

  void push(double t, const vec& vh, const vec& vth, const vec& th, const vec& tth,
            double y, const vec& delays) {
    trace.times.push_back(t);
    for (std::size_t i = 0; i < trace.n; ++i) {
      trace.vartheta_hat[i].push_back(vh[i]);
      trace.vartheta_tilde[i].push_back(vth[i]);
      trace.theta_hat[i].push_back(th[i]);
      trace.theta_tilde[i].push_back(tth[i]);
      trace.delays_applied[i].push_back(delays[i]);
    }
    trace.y.push_back(y);
  }
};

}  // namespace

std::string sim_trace::to_csv() const {
  std::ostringstream os;
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",theta_hat_" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) os << ",theta_tilde_" << (i + 1);
  os << ",y";
  for (std::size_t i = 0; i < n; ++i) os << ",D_" << (i + 1);
  os << "\n";
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << fmt(times[r]);
    for (std::size_t i = 0; i < n; ++i) os << "," << fmt(theta_hat[i][r]);
    for (std::size_t i = 0; i < n; ++i) os << "," << fmt(theta_tilde[i][r]);
    os << "," << fmt(y[r]);
    for (std::size_t i = 0; i < n; ++i) os << "," << fmt(delays_applied[i][r]);
    os << "\n";
  }
  return os.str();
}

sim_trace simulate_continuous_es(const validated_problem& p, const sim_config& cfg,
                                 const sim_observer& observer) {
  if (is_sampled(p.v)) fail(errc::bad_input, "variant is sampled; use simulate_sampled_es");
  const std::size_t n = p.n();
  if (cfg.init_theta_hat.size() != n) fail(errc::dimension_mismatch, "init_theta_hat length");
  const double eps = cfg.epsilon;
  if (!(eps > 0.0)) fail(errc::bad_input, "epsilon must be positive");
  if (p.requires_grid() && !p.on_grid(eps))
    fail(errc::grid_mismatch, "distinct input delays require eps on the commensurate grid");

  const double h = cfg.step > 0.0 ? cfg.step : eps / 400.0;
  if (h > eps / 100.0 * (1.0 + 1e-12))
    fail(errc::step_too_coarse, "step must not exceed eps/100");

  const double rho = p.mu() * eps;
  const double d_m = p.d_bar_max() + rho;
  if (!(cfg.horizon > d_m + 2.0 * p.d_m(eps) + eps))
    fail(errc::bad_input, "horizon must exceed D_M + 2 max D_iM + eps");

  std::function<double(double)> dd = cfg.delta_d;
  if (!dd) dd = [rho](double t) { return rho * std::sin(t); };
  auto jitter = [&](double t) {
    const double v = dd(t);
    if (std::fabs(v) > rho + 1e-12) fail(errc::bad_input, "|delta_d(t)| exceeded rho = mu*eps");
    return v;
  };

  const ground_truth gt = ground_truth::make(p);
  const dither_bank bank = make_dither_bank(p, eps);
  const vec vh0 = to_diag_frame(cfg.init_theta_hat, p.diag);
  const double min_lag = *std::min_element(p.delays.d_in.begin(), p.delays.d_in.end()) +
                         p.delays.d_out - rho;
  if (min_lag <= 2.0 * h) fail(errc::step_too_coarse, "step too large for the smallest delay");

  const std::size_t cap = std::size_t((d_m + eps) / h) + 16;
  history_ring ring(n, d_m, h, cap, vh0);
  ring.push(vh0);

  recorder rec;
  rec.init(p, d_m, cfg.record_stride);

  vec x = vh0, vth(n), th(n), tth(n), dly(n), probe(n), plant(n);
  vec f_start(n), f_mid(n), f_end(n);

  auto plant_output = [&](double read_t) {
    ring.read(read_t, plant);
    for (std::size_t j = 0; j < n; ++j) plant[j] += bank.probe(j, read_t);
    return gt.eval(plant);
  };

  auto rhs = [&](double t, vec& out) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = t - p.delays.d_in[i];
      const double read_t = r - p.delays.d_out - jitter(r);
      if (read_t < -1e-9) fail(errc::history_underflow, "plant read before t = 0");
      out[i] = p.tuning.k[i] * bank.demodulate(i, t) * plant_output(std::max(read_t, 0.0));
    }
  };

  auto emit_record = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      vth[i] = x[i] - gt.vartheta_star[i];
      dly[i] = p.delays.d_in[i] + p.delays.d_out + jitter(t);
    }
    th = from_diag_frame(x, p.diag);
    tth = th;
    for (std::size_t i = 0; i < n; ++i) tth[i] -= (*p.map.theta_star)[i];
    const double read_t = std::max(t - p.delays.d_out - jitter(t), 0.0);
    rec.push(t, x, vth, th, tth, plant_output(read_t), dly);
  };

  // pre-control records on the same uniform grid, walking back from D_M
  {
    const double span = h * double(rec.stride);
    const long jmax = long(std::floor(d_m / span));
    for (long j = jmax; j >= 1; --j) emit_record(d_m - double(j) * span);
  }

  const long steps = long(std::ceil((cfg.horizon - d_m) / h - 1e-9));
  rhs(d_m, f_start);
  for (long k = 0; k <= steps; ++k) {
    const double t = d_m + double(k) * h;
    for (std::size_t i = 0; i < n; ++i) {
      vth[i] = x[i] - gt.vartheta_star[i];
    }
    th = from_diag_frame(x, p.diag);
    tth = th;
    for (std::size_t i = 0; i < n; ++i) tth[i] -= (*p.map.theta_star)[i];
    if (observer) observer(t, vth, tth);
    if (k % long(rec.stride) == 0) emit_record(t);
    if (k == steps) break;

    // the right-hand side depends on delayed state only, so the classical
    // RK4 step collapses to a Simpson update
    rhs(t + 0.5 * h, f_mid);
    rhs(t + h, f_end);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += h / 6.0 * (f_start[i] + 4.0 * f_mid[i] + f_end[i]);
    ring.push(x);
    f_start = f_end;
  }
  return rec.trace;
}

sim_trace simulate_sampled_es(const validated_problem& p, const sim_config& cfg,
                              const sim_observer& observer) {
  if (!is_sampled(p.v)) fail(errc::bad_input, "variant is continuous; use simulate_continuous_es");
  const std::size_t n = p.n();
  if (cfg.init_theta_hat.size() != n) fail(errc::dimension_mismatch, "init_theta_hat length");
  const double eps = cfg.epsilon;
  if (!(eps > 0.0)) fail(errc::bad_input, "epsilon must be positive");

  const double cells = eps / std::pow(2.0, double(n));
  double h = cfg.step > 0.0 ? cfg.step : eps / 400.0;
  {
    const double ratio = cells / h;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
      fail(errc::step_not_divisor, "record step must divide eps/2^n");
    h = cells / std::round(ratio);
  }

  const double d_m = p.d_bar_max();
  if (!(cfg.horizon > d_m + 2.0 * p.d_m(eps) + eps))
    fail(errc::bad_input, "horizon must exceed D_M + 2 max D_iM + eps");

  // waiting indices q_i = 2^n (m - m_i) q; they need the commensurate grid,
  // except in the single-delay case where every q_i is zero
  const double q_real = p.d_bar(0) / (eps * double(p.delays.m[0]));
  const bool on_grid = std::fabs(q_real - std::round(q_real)) <= 1e-9 * std::max(1.0, q_real);
  if (!on_grid && p.requires_grid())
    fail(errc::grid_mismatch, "eps must equal D_j/(q m_j) for integer q");
  const long q = on_grid ? long(std::round(q_real)) : 0;
  const long m_max = *std::max_element(p.delays.m.begin(), p.delays.m.end());
  std::vector<std::uint64_t> q_i(n, 0);
  if (on_grid && !p.single_input_delay())
    for (std::size_t i = 0; i < n; ++i)
      q_i[i] = std::uint64_t((1l << n) * (m_max - p.delays.m[i]) * q);

  const ground_truth gt = ground_truth::make(p);
  const dither_bank bank = make_dither_bank(p, eps);
  const vec vh0 = to_diag_frame(cfg.init_theta_hat, p.diag);

  recorder rec;
  rec.init(p, d_m, cfg.record_stride);

  vec x = vh0, vth(n), th(n), tth(n), dly(n), plant(n), deriv(n, 0.0);
  std::vector<double> current_sp(n, -1.0);  // sample time backing the active hold

  // y(s_p) cache: updates consume samples at lag D_i
  const std::size_t ywin = std::size_t(p.d_bar_max() / cells) + 8;
  std::vector<double> ycache(ywin, 0.0);

  auto sample_output = [&](std::uint64_t ps) {
    for (std::size_t j = 0; j < n; ++j)
      plant[j] = x[j] + p.tuning.a[j] * double(square_at_sample(j, ps, n));
    ycache[ps % ywin] = gt.eval(plant);
  };

  auto emit_record = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      vth[i] = x[i] - gt.vartheta_star[i];
      dly[i] = current_sp[i] >= 0.0 ? t - current_sp[i] : p.d_bar(i);
      plant[i] = x[i] + bank.probe(i, t);
    }
    const double y_now = gt.eval(plant);
    th = from_diag_frame(x, p.diag);
    tth = th;
    for (std::size_t i = 0; i < n; ++i) tth[i] -= (*p.map.theta_star)[i];
    rec.push(t, x, vth, th, tth, y_now, dly);
    if (observer) observer(t, vth, tth);
  };

  const double tol = 1e-9 * h;
  double tc = 0.0;
  std::uint64_t ps = 0;                       // next sampling index
  std::vector<std::uint64_t> pu(q_i);         // next update index per channel
  std::uint64_t jr = 0;                       // next record index
  const std::uint64_t stride = rec.stride;

  while (true) {
    double tn = cfg.horizon;
    const double t_smp = double(ps) * cells;
    tn = std::min(tn, t_smp);
    for (std::size_t i = 0; i < n; ++i)
      tn = std::min(tn, double(pu[i]) * cells + p.d_bar(i));
    const double t_rec = double(jr * stride) * h;
    tn = std::min(tn, t_rec);

    if (tn > tc) {
      for (std::size_t i = 0; i < n; ++i) x[i] += deriv[i] * (tn - tc);
      tc = tn;
    }
    if (tc >= cfg.horizon - tol) {
      if (std::fabs(t_rec - tc) <= tol) emit_record(tc);
      break;
    }
    if (std::fabs(t_smp - tc) <= tol) {
      sample_output(ps);
      rec.trace.sampling_instants.push_back(t_smp);
      ++ps;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t_upd = double(pu[i]) * cells + p.d_bar(i);
      if (std::fabs(t_upd - tc) <= tol) {
        const std::uint64_t sp = pu[i];
        if (sp + ywin <= ps || sp >= ps)
          fail(errc::history_underflow, "sample cache does not cover the update lag");
        const double m_sp = double(square_at_sample(i, sp, n)) / p.tuning.a[i];
        deriv[i] = p.tuning.k[i] * m_sp * ycache[sp % ywin];
        current_sp[i] = double(sp) * cells;
        ++pu[i];
      }
    }
    if (std::fabs(t_rec - tc) <= tol) {
      emit_record(tc);
      ++jr;
    }
  }
  return rec.trace;
}

sim_trace simulate(const validated_problem& p, const sim_config& cfg,
                   const sim_observer& observer) {
  return is_sampled(p.v) ? simulate_sampled_es(p, cfg, observer)
                         : simulate_continuous_es(p, cfg, observer);
}

fundamental_solution_sample fundamental_solution(double a,
                                                 const std::function<double(double)>& delay_fn,
                                                 double s, double horizon, double step) {
  if (!(step > 0.0) || !(horizon > 0.0)) fail(errc::bad_input, "need positive step and horizon");
  fundamental_solution_sample fs;
  fs.a = a;
  fs.s = s;
  fs.step = step;
  const long steps = long(std::ceil(horizon / step - 1e-9));
  fs.t.reserve(steps + 1);
  fs.x.reserve(steps + 1);
  fs.t.push_back(s);
  fs.x.push_back(1.0);

  auto read = [&](double tau, double t_cur, double x_cur, double t_stage, double x_stage) {
    if (tau < s - 1e-15) return 0.0;
    if (tau >= t_cur) {
      // vanishing-delay read inside the current step
      if (t_stage <= t_cur + 1e-300) return x_cur;
      const double w = std::clamp((tau - t_cur) / (t_stage - t_cur), 0.0, 1.0);
      return (1.0 - w) * x_cur + w * x_stage;
    }
    const double pos = (tau - s) / step;
    long k = long(std::floor(pos));
    if (k >= long(fs.x.size()) - 1) k = long(fs.x.size()) - 2;
    if (k < 0) return fs.x.front();
    const double w = pos - double(k);
    return (1.0 - w) * fs.x[std::size_t(k)] + w * fs.x[std::size_t(k) + 1];
  };

  auto rk4_piece = [&](double t0, double x0, double h) {
    auto f = [&](double tt, double xs) {
      return -a * read(tt - delay_fn(tt), t0, x0, tt, xs);
    };
    const double k1 = f(t0, x0);
    const double k2 = f(t0 + 0.5 * h, x0 + 0.5 * h * k1);
    const double k3 = f(t0 + 0.5 * h, x0 + 0.5 * h * k2);
    const double k4 = f(t0 + h, x0 + h * k3);
    return x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  for (long kstep = 0; kstep < steps; ++kstep) {
    const double t = s + double(kstep) * step;
    const double xc = fs.x.back();
    // The delayed argument crossing the start time s drags the unit jump of
    // X through the integrand; split the step at the crossing so the
    // quadrature never straddles it.
    const double phi0 = t - delay_fn(t) - s;
    const double phi1 = t + step - delay_fn(t + step) - s;
    double next;
    if (phi0 < -1e-12 && phi1 > -1e-12) {
      double lo = t, hi = t + step;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((mid - delay_fn(mid) - s) < 0.0 ? lo : hi) = mid;
      }
      const double t_split = std::clamp(0.5 * (lo + hi) - 1e-6 * step, t, t + step);
      const double x_mid = rk4_piece(t, xc, t_split - t);
      next = rk4_piece(t_split, x_mid, t + step - t_split);
    } else {
      next = rk4_piece(t, xc, step);
    }
    fs.x.push_back(next);
    fs.t.push_back(t + step);
  }
  return fs;
}

certification certify_fundamental_bounds(const fundamental_solution_sample& fs, double L,
                                         double grid_tol) {
  certification c;
  c.min_x = fs.x.empty() ? 0.0 : fs.x.front();
  if (!(fs.a > 0.0)) {
    c.reason = "coefficient a must be positive";
    return c;
  }
  if (fs.a * L > 0.36787944117144233 + 1e-12) {
    c.reason = "a*L exceeds 1/e; positivity bound not applicable";
    return c;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < fs.t.size(); ++i) {
    const double t = fs.t[i], x = fs.x[i];
    c.min_x = std::min(c.min_x, x);
    if (x <= -1e-12) {
      c.reason = "X(t,s) lost positivity";
      c.max_violation = -x;
      return c;
    }
    const double bound = t <= fs.s + L ? 1.0 : std::exp(-fs.a * (t - fs.s - L));
    worst = std::max(worst, x - bound);
  }
  c.max_violation = worst;
  if (worst > grid_tol) {
    c.reason = "X(t,s) exceeded the two-piece bound";
    return c;
  }
  c.certified = true;
  c.reason = "ok";
  return c;
}

diagnostics_series averaged_state_diagnostics(const sim_trace& trace,
                                              const validated_problem& p, double eps) {
  const std::size_t n = p.n();
  if (trace.times.size() < 8) fail(errc::trace_too_sparse, "trace too short");
  const double dt = trace.dt();
  const double kd = eps / dt;
  const long K = long(std::round(kd));
  if (K < 200) fail(errc::trace_too_sparse, "need >= 200 samples per averaging window");
  if (std::fabs(kd - double(K)) > 1e-6 * kd)
    fail(errc::trace_too_sparse, "record grid does not divide the averaging window");

  const ground_truth gt = ground_truth::make(p);
  const dither_bank bank = make_dither_bank(p, eps);
  const double t0 = trace.times.front();
  const double d_m = trace.control_start;

  diagnostics_series out;
  out.g.assign(n, {});
  out.z.assign(n, {});
  out.g_bound = probe_bias_bound(p, eps);

  auto tilde_at = [&](std::size_t ch, double t) {
    const double pos = (t - t0) / dt;
    long k = long(std::floor(pos));
    if (k < 0) return trace.vartheta_tilde[ch].front();
    if (k + 1 >= long(trace.times.size())) return trace.vartheta_tilde[ch].back();
    const double w = pos - double(k);
    return (1.0 - w) * trace.vartheta_tilde[ch][k] + w * trace.vartheta_tilde[ch][k + 1];
  };

  vec v(n);
  auto qbar = [&](std::size_t ch, std::size_t node) {
    const double tau = trace.times[node];
    const double d = trace.delays_applied[ch][node];
    for (std::size_t j = 0; j < n; ++j)
      v[j] = tilde_at(j, tau - d) + gt.vartheta_star[j] + bank.probe(j, tau);
    return gt.eval(v);
  };

  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    const double t = trace.times[r];
    if (t < eps - 1e-12) continue;
    out.t.push_back(t);
    for (std::size_t ch = 0; ch < n; ++ch) {
      double g = 0.0;
      if (t >= d_m + eps - 1e-12 && long(r) >= K) {
        // composite Simpson over the trailing window, trapezoid tail if odd
        double acc = 0.0;
        auto integrand = [&](long j) {
          const std::size_t node = std::size_t(long(r) - K + j);
          const double tau = trace.times[node];
          return (tau - t + eps) * p.tuning.k[ch] * bank.demodulate(ch, tau) *
                 qbar(ch, node);
        };
        long limit = K % 2 == 0 ? K : K - 1;
        acc += integrand(0) + integrand(limit);
        for (long j = 1; j < limit; ++j) acc += (j % 2 ? 4.0 : 2.0) * integrand(j);
        acc *= dt / 3.0;
        if (limit != K) acc += 0.5 * dt * (integrand(K - 1) + integrand(K));
        g = acc / eps;
      }
      out.g[ch].push_back(g);
      out.z[ch].push_back(trace.vartheta_tilde[ch][r] - g);
      if (out.g_bound[ch] > 0.0)
        out.max_g_ratio = std::max(out.max_g_ratio, std::fabs(g) / out.g_bound[ch]);
    }
  }
  return out;
}

}  // namespace esdelay
