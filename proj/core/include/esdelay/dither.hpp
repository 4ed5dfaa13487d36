#ifndef ESDELAY_DITHER_HPP
#define ESDELAY_DITHER_HPP

#include <cstdint>
#include <functional>
#include <utility>

#include "esdelay/model.hpp"

namespace esdelay {

enum class dither_kind { sine, square };

// Probe/demodulation signal pair. Sine channels run at w_i = 2*pi*i/eps,
// square channels at rate l_i = 2^(i-1). phase_advance shifts the probe S
// only (the demodulator M is never advanced).
struct dither_bank {
  dither_kind kind = dither_kind::sine;
  std::size_t n = 0;
  vec a;
  double epsilon = 0.0;
  vec phase_advance;  // per-channel time offset applied to S

  double omega(std::size_t i) const;  // sine frequency of channel i (0-based)
  long rate(std::size_t i) const;     // square-wave rate l_i = 2^i

  double probe(std::size_t i, double t) const;       // S_i(t)
  double demodulate(std::size_t i, double t) const;  // M_i(t)
};

dither_bank make_dither_bank(const validated_problem& p, double epsilon);

std::pair<double, double> eval_dither(const dither_bank& bank, std::size_t i, double t);

// Square wave of unit period: +1 on [p, p+1/2), -1 on [p+1/2, p+1).
// Right-continuous at the switch points.
double square_wave(double x);

// Square wave of channel i evaluated at the sampling instant s_p = p*eps/2^n,
// done in integer arithmetic so switch points land exactly.
int square_at_sample(std::size_t i, std::uint64_t p, std::size_t n);

struct epsilon_grid {
  double base = 0.0;  // eps(q) = base / q
  double operator()(long q) const;
  // largest grid member <= cap (throws NoGridPointBelow when q would overflow)
  double largest_below(double cap, long* q_out = nullptr) const;
};

// eps(q) = Dbar_j / (q m_j); all channels must agree.
epsilon_grid commensurate_epsilon_grid(const validated_problem& p);

// (1/eps) * integral of f over [t-eps, t], composite Simpson with 2^10 panels.
double window_average(const std::function<double(double)>& f, double t, double eps);

// Exact windowed average of a product of square-wave channels (breakpoint
// integration); `channels` lists 0-based indices, repeats allowed.
double square_product_window_average(const dither_bank& bank,
                                     const std::vector<std::size_t>& channels,
                                     double t);

}  // namespace esdelay

#endif
