#include "esdelay/dither.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "esdelay/errors.hpp"

namespace esdelay {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double square_wave(double x) {
  const double frac = x - std::floor(x);
  return frac < 0.5 ? 1.0 : -1.0;
}

int square_at_sample(std::size_t i, std::uint64_t p, std::size_t n) {
  const std::uint64_t cells = 1ull << n;                 // 2^n sampling cells per period
  const std::uint64_t r = (p << i) & (cells - 1);        // l_i * p mod 2^n
  return r < cells / 2 ? 1 : -1;
}

double dither_bank::omega(std::size_t i) const {
  return kTwoPi * double(i + 1) / epsilon;
}

long dither_bank::rate(std::size_t i) const { return 1l << i; }

double dither_bank::probe(std::size_t i, double t) const {
  const double ts = t + (phase_advance.empty() ? 0.0 : phase_advance[i]);
  if (kind == dither_kind::sine) return a[i] * std::sin(omega(i) * ts);
  return a[i] * square_wave(double(rate(i)) * ts / epsilon);
}

double dither_bank::demodulate(std::size_t i, double t) const {
  if (kind == dither_kind::sine) return (2.0 / a[i]) * std::sin(omega(i) * t);
  return (1.0 / a[i]) * square_wave(double(rate(i)) * t / epsilon);
}

dither_bank make_dither_bank(const validated_problem& p, double epsilon) {
  dither_bank b;
  b.kind = is_sampled(p.v) ? dither_kind::square : dither_kind::sine;
  b.n = p.n();
  b.a = p.tuning.a;
  b.epsilon = epsilon;
  b.phase_advance.assign(p.n(), 0.0);
  if (!is_sampled(p.v) && p.single_input_delay()) {
    // single input delay: probe channels advanced by D^in + D
    const double adv = p.delays.d_in[0] + p.delays.d_out;
    std::fill(b.phase_advance.begin(), b.phase_advance.end(), adv);
  }
  return b;
}

std::pair<double, double> eval_dither(const dither_bank& bank, std::size_t i, double t) {
  return {bank.probe(i, t), bank.demodulate(i, t)};
}

double epsilon_grid::operator()(long q) const {
  if (q < 1) fail(errc::bad_input, "grid index q must be positive");
  return base / double(q);
}

double epsilon_grid::largest_below(double cap, long* q_out) const {
  if (!(cap > 0.0)) fail(errc::no_grid_point_below, "cap must be positive");
  double qr = std::ceil(base / cap - 1e-12);
  if (qr < 1.0) qr = 1.0;
  if (qr > 1e9) fail(errc::no_grid_point_below, "grid index exceeds 1e9");
  long q = long(qr);
  while ((*this)(q) > cap * (1.0 + 1e-12)) ++q;
  if (q_out) *q_out = q;
  return (*this)(q);
}

epsilon_grid commensurate_epsilon_grid(const validated_problem& p) {
  epsilon_grid g;
  g.base = p.d_bar(0) / double(p.delays.m[0]);
  for (std::size_t j = 1; j < p.n(); ++j) {
    const double bj = p.d_bar(j) / double(p.delays.m[j]);
    if (std::fabs(bj - g.base) > 1e-9 * std::max(g.base, bj))
      fail(errc::non_commensurate_delays, "Dbar_j/m_j disagree across channels");
  }
  return g;
}

double window_average(const std::function<double(double)>& f, double t, double eps) {
  constexpr int kPanels = 1 << 10;
  const double h = eps / kPanels;
  double s = f(t - eps) + f(t);
  for (int i = 1; i < kPanels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(t - eps + i * h);
  return s * h / 3.0 / eps;
}

double square_product_window_average(const dither_bank& bank,
                                     const std::vector<std::size_t>& channels,
                                     double t) {
  const double eps = bank.epsilon;
  // switch points of channel i sit at multiples of eps/(2 l_i)
  std::set<double> cuts{t - eps, t};
  for (std::size_t i : channels) {
    const double cell = eps / (2.0 * double(bank.rate(i)));
    const double first = std::ceil((t - eps) / cell) * cell;
    for (double c = first; c < t; c += cell) cuts.insert(c);
  }
  double acc = 0.0;
  auto it = cuts.begin();
  double prev = *it++;
  for (; it != cuts.end(); ++it) {
    const double mid = 0.5 * (prev + *it);
    double v = 1.0;
    for (std::size_t i : channels) v *= square_wave(double(bank.rate(i)) * mid / eps);
    acc += v * (*it - prev);
    prev = *it;
  }
  return acc / eps;
}

}  // namespace esdelay
