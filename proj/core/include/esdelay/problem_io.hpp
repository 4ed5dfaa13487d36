#ifndef ESDELAY_PROBLEM_IO_HPP
#define ESDELAY_PROBLEM_IO_HPP

#include <optional>
#include <string>

#include "esdelay/model.hpp"
#include "esdelay/sim.hpp"

namespace esdelay {

struct sim_settings {
  double horizon = 0.0;
  long step_divisor = 400;  // step = epsilon / step_divisor
  vec init_theta_hat;
  std::size_t record_stride = 1;
  std::string delta_d_kind = "sin";  // "sin" (rho sin t) or "zero"
};

// One problem document: sections map/delays/tuning(/simulation) mirroring the
// domain types.
struct problem_bundle {
  variant v = variant::continuous;
  quadratic_map_spec map;
  delay_profile delays;
  tuning_config tuning;
  std::optional<sim_settings> sim;
};

problem_bundle parse_problem_json(const std::string& text);
problem_bundle load_problem_file(const std::string& path);
// canonical, byte-stable echo of the resolved problem
std::string problem_to_json(const problem_bundle& b);

validated_problem validate(const problem_bundle& b);
sim_config make_sim_config(const problem_bundle& b, const validated_problem& p);

// dotted-path override (e.g. "tuning.epsilon=0.25", "tuning.k.0=-0.003");
// the value is parsed as a JSON literal
std::string apply_override(const std::string& json_text, const std::string& assignment);

}  // namespace esdelay

#endif
