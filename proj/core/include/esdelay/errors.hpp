#ifndef ESDELAY_ERRORS_HPP
#define ESDELAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace esdelay {

enum class errc {
  dimension_mismatch,
  non_commensurate_delays,
  gain_infeasible,
  not_hurwitz,
  box_inverted,
  not_symmetric,
  indefinite,
  singular_abs_matrix,
  infeasible_at_zero,
  infeasible,
  no_grid_point_below,
  no_root,
  stalled,
  step_too_coarse,
  step_not_divisor,
  history_underflow,
  grid_mismatch,
  trace_too_sparse,
  unknown_table,
  unknown_example,
  bad_input,
};

// All library failures surface as es_error carrying a machine-checkable code;
// the what() string names the offending channel / bound where applicable.
class es_error : public std::runtime_error {
 public:
  es_error(errc code, const std::string& what_arg)
      : std::runtime_error(what_arg), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::non_commensurate_delays: return "NonCommensurateDelays";
    case errc::gain_infeasible: return "GainInfeasible";
    case errc::not_hurwitz: return "NotHurwitz";
    case errc::box_inverted: return "BoxInverted";
    case errc::not_symmetric: return "NotSymmetric";
    case errc::indefinite: return "Indefinite";
    case errc::singular_abs_matrix: return "SingularAbsMatrix";
    case errc::infeasible_at_zero: return "InfeasibleAtZero";
    case errc::infeasible: return "Infeasible";
    case errc::no_grid_point_below: return "NoGridPointBelow";
    case errc::no_root: return "NoRoot";
    case errc::stalled: return "Stalled";
    case errc::step_too_coarse: return "StepTooCoarse";
    case errc::step_not_divisor: return "StepNotDivisor";
    case errc::history_underflow: return "HistoryUnderflow";
    case errc::grid_mismatch: return "GridMismatch";
    case errc::trace_too_sparse: return "TraceTooSparse";
    case errc::unknown_table: return "UnknownTable";
    case errc::unknown_example: return "UnknownExample";
    case errc::bad_input: return "BadInput";
  }
  return "?";
}

[[noreturn]] inline void fail(errc code, const std::string& msg) {
  throw es_error(code, std::string(errc_name(code)) + ": " + msg);
}

}  // namespace esdelay

#endif
