#include "esdelay/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <future>
#include <sstream>

#include "esdelay/errors.hpp"

namespace esdelay {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Refinement knobs for reproducing the published numbers. beta follows the
// paper's 1e-3; gamma runs one notch tighter: at gamma = 1e-3 the trail stops
// one pass short of the values printed for the sampled tables (the improvement
// between the last two relevant passes there sits between 1e-4 and 1e-3).
constexpr double kRefineBeta = 1e-3;
constexpr double kRefineGamma = 1e-4;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

mat mat1(double v) {
  mat m(1, 1);
  m(0, 0) = v;
  return m;
}

mat mat2(double a, double b, double c, double d) {
  mat m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

struct ground {
  double q_star;
  vec theta_star;
};

validated_problem build(variant v, const mat& h_bar, double q_star_max, double kappa,
                        double mu, const vec& d_in, double d_out,
                        const std::vector<long>& m, const vec& k, const vec& a,
                        const vec& s0, const vec& sb, double eps, long q,
                        std::optional<double> h_m = {}, std::optional<double> h_max = {},
                        std::optional<ground> gt = {}) {
  quadratic_map_spec map;
  map.n = h_bar.rows();
  map.q_star_max = q_star_max;
  map.h_bar = h_bar;
  map.kappa = kappa;
  map.h_m = h_m;
  map.h_max = h_max;
  if (gt) {
    map.q_star = gt->q_star;
    map.theta_star = gt->theta_star;
  }
  delay_profile delays;
  delays.d_out = d_out;
  delays.mu = mu;
  delays.d_in = d_in;
  delays.m = m;
  tuning_config tuning;
  tuning.k = k;
  tuning.a = a;
  tuning.sigma0_bar = s0;
  tuning.sigma_bar = sb;
  tuning.mu = mu;
  tuning.kappa = kappa;
  tuning.q = q;
  tuning.epsilon = eps;
  return validate_problem(map, delays, tuning, v);
}

// ---- published configurations -------------------------------------------

validated_problem t1_corollary2(double eps, std::optional<ground> gt = {}) {
  return build(variant::single_var_continuous, mat1(2.0), 0.5, 1.0, 0.01, {1.0}, 1.0,
               {1}, {-0.003}, {0.3}, {0.5}, {1.0}, eps, 1, 1.0, 3.0, gt);
}

validated_problem t1_theorem1(double eps) {
  return build(variant::continuous, mat1(2.0), 0.5, 0.47, 0.01, {1.0}, 1.0, {1},
               {-0.003}, {0.3}, {0.5}, {1.0}, eps, 1);
}

validated_problem t2_problem(double eps, std::optional<ground> gt = {}) {
  return build(variant::continuous, mat2(2, 0, 0, 2), 0.0, 0.0, 0.005, {0.5, 1.0}, 1.0,
               {3, 4}, {-0.003, -0.003}, {0.3, 0.3}, {0.5, 0.5}, {1.0, 1.0}, eps, 2, {},
               {}, gt);
}

validated_problem t3_problem(double kappa, double mu, double eps,
                             std::optional<ground> gt = {}) {
  return build(variant::continuous, mat2(-2, -2, -2, -4), 1.0, kappa, mu, {0.5, 1.5},
               1.0, {3, 5}, {0.2e-3, 1.35e-3}, {0.3, 0.3}, {0.5, 0.5}, {0.6, 1.0}, eps,
               2, {}, {}, gt);
}

validated_problem t4_corollary3(double q_star_max, double h_m, double h_max, double d,
                                double eps, std::optional<ground> gt = {}) {
  return build(variant::single_var_sampled, mat1(2.0), q_star_max,
               std::max(h_max - 2.0, 2.0 - h_m), 0.0, {d}, 0.0, {1}, {-0.013}, {0.1},
               {1.0}, {std::sqrt(2.0)}, eps, 1, h_m, h_max, gt);
}

validated_problem t4_theorem2(double q_star_max, double kappa, double d, double eps) {
  return build(variant::sampled, mat1(2.0), q_star_max, kappa, 0.0, {d}, 0.0, {1},
               {-0.013}, {0.1}, {1.0}, {std::sqrt(2.0)}, eps, 1);
}

validated_problem t5_problem(double eps, std::optional<ground> gt = {}) {
  return build(variant::sampled, mat2(2, 0, 0, 2), 0.0, 0.0, 0.0, {2.0, 2.0}, 0.0,
               {1, 1}, {-0.01, -0.01}, {0.2, 0.2}, {1.0, 1.0}, {2.0, 2.0}, eps, 20, {},
               {}, gt);
}

validated_problem t6_problem(double kappa, double eps, std::optional<ground> gt = {}) {
  return build(variant::sampled, mat2(-2, -2, -2, -4), 1.0, kappa, 0.0, {1.5, 2.5}, 0.0,
               {3, 5}, {0.6e-3, 0.4e-2}, {0.3, 0.3}, {0.5, 0.5}, {0.6, 1.0}, eps, 1, {},
               {}, gt);
}

// ---- cell machinery -------------------------------------------------------

double floor_to(double v, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::floor(v * s + 1e-9) / s;
}

void judge(cell_check& c) {
  switch (c.kind) {
    case cell_kind::eps_star: {
      // published values are truncated at the printed precision
      const double floored = floor_to(c.computed, c.printed_decimals);
      c.pass = std::fabs(floored - c.expected) <= c.tol + 1e-12 ||
               std::fabs(c.computed - c.expected) <= c.tol + 1e-12;
      break;
    }
    case cell_kind::ub:
      c.pass = std::fabs(c.computed - c.expected) <= c.tol * std::fabs(c.expected);
      break;
    case cell_kind::rounded:
      c.pass = std::fabs(c.computed - c.expected) <=
               0.5 * std::pow(10.0, -c.printed_decimals) + 1e-12;
      break;
    case cell_kind::display:
      c.pass = true;
      break;
  }
}

cell_check eps_cell(double expected, int pd, double tol = 0.01, std::string note = "") {
  cell_check c;
  c.name = "eps_star";
  c.expected = expected;
  c.kind = cell_kind::eps_star;
  c.printed_decimals = pd;
  c.tol = tol;
  c.note = std::move(note);
  return c;
}

cell_check ub_cell(std::string name, double expected, std::string note = "") {
  cell_check c;
  c.name = std::move(name);
  c.expected = expected;
  c.kind = cell_kind::ub;
  c.tol = 0.10;
  c.note = std::move(note);
  return c;
}

cell_check rounded_cell(std::string name, double expected, int pd, std::string note = "") {
  cell_check c;
  c.name = std::move(name);
  c.expected = expected;
  c.kind = cell_kind::rounded;
  c.printed_decimals = pd;
  c.note = std::move(note);
  return c;
}

cell_check display_cell(std::string name, double expected, std::string note = "") {
  cell_check c;
  c.name = std::move(name);
  c.expected = expected;
  c.computed = expected;
  c.kind = cell_kind::display;
  c.note = std::move(note);
  return c;
}

struct row_spec {
  std::string name;
  std::function<validated_problem()> make;
  double ub_eps = 0.0;
  bool expect_infeasible = false;
  bool context = false;
  std::vector<cell_check> cells;
  // names of cells that take the refined UB per channel, in channel order
  std::vector<std::string> ub_channel_cells;
  std::vector<std::string> backmap_cells;
  bool ub_is_norm = false;  // single UB cell = |(B1, B2)|
};

row_diff evaluate_row(const row_spec& spec) {
  row_diff out;
  out.name = spec.name;
  out.context = spec.context;
  out.expect_infeasible = spec.expect_infeasible;
  out.cells = spec.cells;
  if (spec.context) {
    for (auto& c : out.cells) judge(c);
    out.infeasible = spec.expect_infeasible;
    return out;
  }

  const validated_problem p = spec.make();
  double eps_star = 0.0;
  try {
    eps_star = find_eps_star(p).eps_star;
  } catch (const es_error& e) {
    if (e.code() != errc::infeasible_at_zero) throw;
    out.infeasible = true;
  }
  if (spec.expect_infeasible || out.infeasible) {
    out.pass = out.infeasible == spec.expect_infeasible;
    for (auto& c : out.cells) judge(c);
    return out;
  }

  vec refined, backmapped;
  if (!spec.ub_channel_cells.empty() || spec.ub_is_norm || !spec.backmap_cells.empty()) {
    const refinement_result r = refine_ultimate_bound(p, spec.ub_eps, kRefineBeta, kRefineGamma);
    refined = r.final_ub;
    backmapped = r.backmapped;
  }

  for (auto& c : out.cells) {
    if (c.name == "eps_star") c.computed = eps_star;
    if (c.name == "omega_star") c.computed = kTwoPi / eps_star;
    for (std::size_t i = 0; i < p.n(); ++i) {
      if (c.name == "delta_" + std::to_string(i + 1))
        c.computed = is_single_var(p.v) ? std::fabs(p.tuning.k[0]) * p.h_m() : p.delta[i];
    }
    for (std::size_t i = 0; i < spec.ub_channel_cells.size(); ++i)
      if (c.name == spec.ub_channel_cells[i]) c.computed = refined[i];
    for (std::size_t i = 0; i < spec.backmap_cells.size(); ++i)
      if (c.name == spec.backmap_cells[i]) c.computed = backmapped[i];
    if (spec.ub_is_norm && c.name == "ub") c.computed = norm2(refined);
    if (c.name.rfind("sigma0_", 0) == 0) {
      const vec s0 = solve_initial_box(p.tuning.sigma0_bar, p.diag);
      const std::size_t i = std::size_t(c.name.back() - '1');
      c.computed = s0[i];
    }
    judge(c);
    if (!c.pass) out.pass = false;
  }
  return out;
}

table_diff run_rows(const std::string& id, std::vector<row_spec> specs) {
  table_diff t;
  t.id = id;
  std::vector<std::future<row_diff>> futs;
  futs.reserve(specs.size());
  for (const auto& s : specs)
    futs.push_back(std::async(std::launch::async, [&s] { return evaluate_row(s); }));
  for (auto& f : futs) {
    t.rows.push_back(f.get());
    if (!t.rows.back().pass) t.all_pass = false;
  }
  return t;
}

}  // namespace

std::vector<std::string> known_tables() {
  return {"table1", "table2", "table3", "table4", "table5", "table6"};
}

std::vector<std::string> known_examples() {
  return {"example3_1", "example3_2", "example3_3", "example4_1", "example4_2",
          "example4_3"};
}

table_diff reproduce_table(const std::string& id) {
  std::vector<row_spec> rows;
  if (id == "table1") {
    row_spec c2{"corollary_2", [] { return t1_corollary2(0.74); }, 0.74};
    c2.cells = {eps_cell(0.74, 2), display_cell("omega_star", 8.49),
                rounded_cell("delta_1", 0.003, 3), display_cell("kappa", 1.0),
                ub_cell("ub_1", 0.115)};
    c2.ub_channel_cells = {"ub_1"};
    row_spec t1{"theorem_1", [] { return t1_theorem1(0.1); }, 0.1};
    t1.cells = {eps_cell(0.1, 1), display_cell("omega_star", 62.83),
                rounded_cell("delta_1", 0.006, 3), display_cell("kappa", 0.47),
                ub_cell("ub_1", 0.358)};
    t1.ub_channel_cells = {"ub_1"};
    rows = {c2, t1};
  } else if (id == "table2") {
    row_spec r{"theorem_1", [] { return t2_problem(0.25); }, 0.25};
    r.cells = {eps_cell(0.30, 2), display_cell("omega_star", 20.94),
               rounded_cell("delta_1", 0.006, 3), rounded_cell("delta_2", 0.006, 3),
               ub_cell("ub_1", 0.124), ub_cell("ub_2", 0.124)};
    r.ub_channel_cells = {"ub_1", "ub_2"};
    rows = {r};
  } else if (id == "table3") {
    row_spec known{"known_h", [] { return t3_problem(0.0, 0.003, 0.25); }, 0.25};
    known.cells = {eps_cell(0.49, 2),
                   display_cell("omega_star", 12.82),
                   rounded_cell("delta_1", 0.001, 3),
                   rounded_cell("delta_2", 0.001, 3),
                   ub_cell("ub_1", 0.023),
                   ub_cell("ub_2", 0.16),
                   ub_cell("B_1", 0.1482),
                   ub_cell("B_2", 0.1037),
                   rounded_cell("sigma0_1", 0.3633, 4),
                   rounded_cell("sigma0_2", 0.3633, 4)};
    known.ub_channel_cells = {"ub_1", "ub_2"};
    known.backmap_cells = {"B_1", "B_2"};
    row_spec unc{"uncertain_h", [] { return t3_problem(0.2, 0.001, 0.125); }, 0.125};
    unc.cells = {eps_cell(0.016, 3, 0.002,
                          "printed eps* contradicts the same row's 'eps = 1/8 < eps*'; "
                          "the feasibility supremum computes to ~0.16"),
                 display_cell("omega_star", 392.70),
                 rounded_cell("delta_1", 0.001, 3),
                 rounded_cell("delta_2", 0.001, 3),
                 ub_cell("ub_1", 0.019),
                 ub_cell("ub_2", 0.13)};
    unc.ub_channel_cells = {"ub_1", "ub_2"};
    rows = {known, unc};
  } else if (id == "table4") {
    auto make_c3 = [](double qsm, double hm, double hM, double d, double eps) {
      return [=] { return t4_corollary3(qsm, hm, hM, d, eps); };
    };
    auto make_t2 = [](double qsm, double kap, double d, double eps) {
      return [=] { return t4_theorem2(qsm, kap, d, eps); };
    };
    row_spec c3k{"corollary_3_known", make_c3(0, 2, 2, 1.0, 0.071), 0.071};
    c3k.cells = {eps_cell(0.071, 3), display_cell("omega_star", 88.49),
                 rounded_cell("delta_1", 0.026, 3), display_cell("D", 1.0),
                 ub_cell("ub_1", 2.7e-4)};
    c3k.ub_channel_cells = {"ub_1"};
    row_spec t2k{"theorem_2_known", make_t2(0, 0, 1.0, 0.071), 0.071};
    t2k.cells = {eps_cell(0.071, 3), display_cell("omega_star", 88.49),
                 rounded_cell("delta_1", 0.026, 3), display_cell("D", 1.0),
                 ub_cell("ub_1", 2.7e-4)};
    t2k.ub_channel_cells = {"ub_1"};
    row_spec zk{"zfo21cdc_known", {}, 0, false, true};
    zk.cells = {display_cell("delta_1", 0.02), display_cell("D", 0.01),
                display_cell("eps_star", 0.045), display_cell("omega_star", 139.63),
                display_cell("ub_1", 0.04)};
    row_spec c3m{"corollary_3_mid", make_c3(0.1, 1.9, 2.1, 1.0, 0.065), 0.065};
    c3m.cells = {eps_cell(0.065, 3), display_cell("omega_star", 96.66),
                 rounded_cell("delta_1", 0.0247, 4), display_cell("D", 1.0),
                 ub_cell("ub_1", 2.0e-3)};
    c3m.ub_channel_cells = {"ub_1"};
    row_spec t2m{"theorem_2_mid", make_t2(0.1, 0.1, 0.5, 0.052), 0.052};
    t2m.cells = {eps_cell(0.052, 3), display_cell("omega_star", 120.83),
                 rounded_cell("delta_1", 0.026, 3), display_cell("D", 0.5),
                 ub_cell("ub_1", 1.9e-3)};
    t2m.ub_channel_cells = {"ub_1"};
    row_spec zm{"zfo21cdc_mid", {}, 0, false, true};
    zm.cells = {display_cell("delta_1", 0.02), display_cell("D", 0.01),
                display_cell("eps_star", 0.036), display_cell("omega_star", 174.53),
                display_cell("ub_1", 0.22)};
    row_spec c3w{"corollary_3_wide", make_c3(1.0, 1.0, 3.0, 1.0, 0.035), 0.035};
    c3w.cells = {eps_cell(0.035, 3), display_cell("omega_star", 179.52),
                 rounded_cell("delta_1", 0.013, 3), display_cell("D", 1.0),
                 ub_cell("ub_1", 1.1e-2)};
    c3w.ub_channel_cells = {"ub_1"};
    row_spec t2w{"theorem_2_wide", make_t2(1.0, 1.0, 1.0, 0.035), 0.035};
    t2w.expect_infeasible = true;
    row_spec zw{"zfo21cdc_wide", {}, 0, false, true};
    zw.expect_infeasible = true;
    rows = {c3k, t2k, zk, c3m, t2m, zm, c3w, t2w, zw};
  } else if (id == "table5") {
    row_spec r{"theorem_2", [] { return t5_problem(0.1); }, 0.1};
    r.cells = {eps_cell(0.1, 1), display_cell("omega_star", 62.83),
               rounded_cell("delta_1", 0.02, 2), rounded_cell("delta_2", 0.02, 2),
               display_cell("D", 2.0), ub_cell("ub", 1.6e-3)};
    r.ub_is_norm = true;
    row_spec z{"zfo22tac", {}, 0, false, true};
    z.cells = {display_cell("delta", 0.01), display_cell("D", 0.01),
               display_cell("eps_star", 0.09), display_cell("omega_star", 69.81),
               display_cell("ub", 0.18)};
    rows = {r, z};
  } else if (id == "table6") {
    const std::string delta_note =
        "printed delta is inconsistent with the published gains by a factor of 10: "
        "|k1 h1| = 0.6e-3 * 5.2361 = 3.1e-3";
    row_spec known{"known_h", [] { return t6_problem(0.0, 0.5); }, 0.5};
    known.cells = {eps_cell(0.79, 2, 0.01,
                            "the feasibility supremum computes to ~1.21; the printed "
                            "0.79 is feasible but not the largest value"),
                   display_cell("omega_star", 7.95),
                   rounded_cell("delta_1", 0.031, 3, delta_note),
                   rounded_cell("delta_2", 0.031, 3, delta_note),
                   ub_cell("ub_1", 4.1e-3,
                           "printed value matches an unconverged second refinement "
                           "pass (within 3%); the converged trail ends ~15% lower"),
                   ub_cell("ub_2", 2.8e-2,
                           "printed value matches an unconverged second refinement "
                           "pass (within 3%); the converged trail ends ~15% lower"),
                   ub_cell("B_1", 2.6e-2, "back-mapped from the ub cells above"),
                   ub_cell("B_2", 1.82e-2, "back-mapped from the ub cells above")};
    known.ub_channel_cells = {"ub_1", "ub_2"};
    known.backmap_cells = {"B_1", "B_2"};
    row_spec unc{"uncertain_h", [] { return t6_problem(0.2, 0.25); }, 0.25};
    unc.cells = {eps_cell(0.36, 2), display_cell("omega_star", 17.45),
                 rounded_cell("delta_1", 0.031, 3, delta_note),
                 rounded_cell("delta_2", 0.031, 3, delta_note), ub_cell("ub_1", 5.0e-3),
                 ub_cell("ub_2", 3.4e-2)};
    unc.ub_channel_cells = {"ub_1", "ub_2"};
    rows = {known, unc};
  } else {
    fail(errc::unknown_table, "no table named '" + id + "'");
  }
  return run_rows(id, std::move(rows));
}

std::string table_diff::to_markdown() const {
  std::ostringstream os;
  os << "# " << id << " reproduction\n\n";
  os << "| row | cell | expected | computed | status | note |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    if (r.expect_infeasible) {
      os << "| " << r.name << " | feasibility | - | "
         << (r.infeasible ? "infeasible" : "feasible") << " | "
         << (r.pass ? "pass" : "FAIL") << " | "
         << (r.context ? "prior-work row, shown for context" : "") << " |\n";
      continue;
    }
    for (const auto& c : r.cells) {
      os << "| " << r.name << " | " << c.name << " | " << fmt(c.expected) << " | "
         << (r.context ? std::string("-") : fmt(c.computed)) << " | "
         << (c.kind == cell_kind::display ? (r.context ? "context" : "info")
                                          : (c.pass ? "pass" : "FAIL"))
         << " | " << c.note << " |\n";
    }
  }
  os << "\noverall: " << (all_pass ? "all rows pass" : "FAILURES present") << "\n";
  return os.str();
}

std::string table_diff::to_csv() const {
  std::ostringstream os;
  os << "table,row,cell,expected,computed,pass\n";
  for (const auto& r : rows) {
    if (r.expect_infeasible) {
      os << id << "," << r.name << ",infeasible,1," << (r.infeasible ? 1 : 0) << ","
         << (r.pass ? 1 : 0) << "\n";
      continue;
    }
    for (const auto& c : r.cells)
      os << id << "," << r.name << "," << c.name << "," << fmt(c.expected) << ","
         << fmt(c.computed) << "," << (c.pass ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---- example runs ---------------------------------------------------------

namespace {

struct example_def {
  validated_problem problem;
  vec init;
  double margin;
};

example_def example_def_for(const std::string& id) {
  if (id == "example3_1")
    return {t1_corollary2(0.74, ground{0.0, {0.0}}), {0.5}, 1.1};
  if (id == "example3_2")
    return {t2_problem(0.25, ground{0.0, {0.0, 0.0}}), {0.5, -0.5}, 1.1};
  if (id == "example3_3")
    return {t3_problem(0.0, 0.003, 0.25, ground{1.0, {0.0, 1.0}}), {0.3, 0.7}, 1.1};
  if (id == "example4_1")
    return {t4_corollary3(0.0, 2.0, 2.0, 1.0, 0.071, ground{0.0, {0.0}}), {1.0}, 1.2};
  if (id == "example4_2")
    return {t5_problem(0.1, ground{0.0, {0.0, 0.0}}), {0.5, -0.5}, 1.2};
  if (id == "example4_3")
    return {t6_problem(0.0, 0.5, ground{1.0, {0.0, 1.0}}), {0.3, 0.7}, 1.2};
  fail(errc::unknown_example, "no example named '" + id + "'");
}

}  // namespace

validated_problem example_problem(const std::string& id) {
  return example_def_for(id).problem;
}

sim_config example_sim_config(const std::string& id, const validated_problem& p) {
  const example_def def = example_def_for(id);
  const double eps = p.tuning.epsilon;
  sim_config cfg;
  cfg.epsilon = eps;
  cfg.step = eps / 400.0;
  cfg.init_theta_hat = def.init;

  const refinement_result ref = refine_ultimate_bound(p, eps, kRefineBeta, kRefineGamma);
  vec d_omega(p.n());
  for (std::size_t i = 0; i < p.n(); ++i)
    d_omega[i] = (def.margin - 1.0) * ref.final_ub[i];
  const vec t_entry = finite_time(p, eps, d_omega);
  cfg.horizon = 1.05 * *std::max_element(t_entry.begin(), t_entry.end()) + 3.0 * eps + 1.0;

  const double steps = (cfg.horizon) / cfg.step;
  cfg.record_stride = std::max<std::size_t>(1, std::size_t(steps / 200000.0));
  return cfg;
}

example_run run_example(const std::string& id) {
  const example_def def = example_def_for(id);
  example_run run;
  run.id = id;
  run.problem = def.problem;
  const validated_problem& p = run.problem;
  const double eps = p.tuning.epsilon;

  example_verification& v = run.verification;
  v.margin = def.margin;
  const refinement_result ref = refine_ultimate_bound(p, eps, kRefineBeta, kRefineGamma);
  v.ub = ref.final_ub;
  v.ub_backmapped = ref.backmapped;
  vec d_omega(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) d_omega[i] = (v.margin - 1.0) * v.ub[i];
  v.entry_deadline = finite_time(p, eps, d_omega);
  const double t_entry_all = *std::max_element(v.entry_deadline.begin(),
                                               v.entry_deadline.end());

  const transient_envelope_result env = transient_envelope(p, eps);
  sim_config cfg = example_sim_config(id, p);

  sim_observer obs = [&](double t, const vec& vth, const vec& tth) {
    if (t >= env.t_start) {
      for (std::size_t i = 0; i < vth.size(); ++i) {
        const double e = env.eval(i, t);
        v.envelope_max_ratio = std::max(v.envelope_max_ratio, std::fabs(vth[i]) / e);
      }
    }
    for (std::size_t i = 0; i < vth.size(); ++i)
      if (t >= v.entry_deadline[i])
        v.ub_max_ratio = std::max(v.ub_max_ratio, std::fabs(vth[i]) / v.ub[i]);
    if (t >= t_entry_all)
      for (std::size_t i = 0; i < tth.size(); ++i)
        v.ub_backmapped_max_ratio =
            std::max(v.ub_backmapped_max_ratio, std::fabs(tth[i]) / v.ub_backmapped[i]);
  };

  run.trace = simulate(p, cfg, obs);
  v.pass = v.envelope_max_ratio < 1.0 && v.ub_max_ratio <= v.margin &&
           v.ub_backmapped_max_ratio <= v.margin;
  return run;
}

std::string example_run::summary() const {
  std::ostringstream os;
  const auto& v = verification;
  os << "# " << id << " verification\n\n";
  os << "ultimate bound (diag frame):";
  for (double b : v.ub) os << " " << fmt(b);
  os << "\nultimate bound (original frame):";
  for (double b : v.ub_backmapped) os << " " << fmt(b);
  os << "\nentry deadlines:";
  for (double t : v.entry_deadline) os << " " << fmt(t);
  os << "\nenvelope max ratio: " << fmt(v.envelope_max_ratio) << " (must be < 1)\n";
  os << "ultimate-bound max ratio after entry: " << fmt(v.ub_max_ratio)
     << " (margin " << fmt(v.margin) << ")\n";
  os << "original-frame max ratio after entry: " << fmt(v.ub_backmapped_max_ratio)
     << "\n";
  os << "result: " << (v.pass ? "confirmed" : "NOT CONFIRMED") << "\n";
  return os.str();
}

}  // namespace esdelay
