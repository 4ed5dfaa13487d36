#ifndef ESDELAY_EXPERIMENTS_HPP
#define ESDELAY_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "esdelay/analysis.hpp"
#include "esdelay/sim.hpp"

namespace esdelay {

enum class cell_kind {
  eps_star,  // floored to the printed decimals, then +-tol absolute
  ub,        // +-10% relative
  rounded,   // must round to the printed value (pure-arithmetic cells)
  display,   // derived or context value, no pass/fail
};

struct cell_check {
  std::string name;
  double expected = 0.0;
  double computed = 0.0;
  cell_kind kind = cell_kind::display;
  int printed_decimals = 2;
  double tol = 0.0;  // eps_star: absolute; ub: relative
  bool pass = true;
  std::string note;
};

struct row_diff {
  std::string name;
  bool context = false;            // prior-work row, shown but not recomputed
  bool expect_infeasible = false;  // "-" rows
  bool infeasible = false;
  std::vector<cell_check> cells;
  bool pass = true;
};

struct table_diff {
  std::string id;
  std::vector<row_diff> rows;
  bool all_pass = true;
  std::string to_markdown() const;
  std::string to_csv() const;
};

table_diff reproduce_table(const std::string& id);

struct example_verification {
  double envelope_max_ratio = 0.0;  // max |vartheta_tilde_i(t)| / E_i(t), t >= D_M
  vec ub;                           // refined per-channel bound (diag frame)
  vec ub_backmapped;                // original frame
  vec entry_deadline;               // T_i for delta_omega = margin_excess * ub
  double ub_max_ratio = 0.0;        // max_{t >= T_i} |vartheta_tilde_i| / ub_i
  double ub_backmapped_max_ratio = 0.0;
  double margin = 1.2;              // tolerated overshoot of the bound
  bool pass = false;
};

struct example_run {
  std::string id;
  validated_problem problem;
  sim_trace trace;
  example_verification verification;
  std::string summary() const;
};

example_run run_example(const std::string& id);

// Builders for the published configurations (also reused by the test suites).
validated_problem example_problem(const std::string& id);
sim_config example_sim_config(const std::string& id, const validated_problem& p);

std::vector<std::string> known_tables();
std::vector<std::string> known_examples();

}  // namespace esdelay

#endif
