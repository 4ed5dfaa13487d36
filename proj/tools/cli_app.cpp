#include "cli_app.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esdelay/analysis.hpp"
#include "esdelay/errors.hpp"
#include "esdelay/experiments.hpp"
#include "esdelay/problem_io.hpp"
#include "json.hpp"

namespace esdelay::cli {

namespace {

namespace fs = std::filesystem;

struct common_opts {
  std::string problem_path;
  std::string variant_flag;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
};

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::bad_input, "cannot write " + path.string());
  out << body;
}

void write_run_meta(const fs::path& dir, int argc, const char* const* argv) {
  nlohmann::ordered_json meta;
  meta["tool"] = "esdelay";
  meta["version"] = "0.1.0";
  nlohmann::ordered_json args = nlohmann::ordered_json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
  meta["argv"] = args;
  const auto now = std::chrono::system_clock::now();
  meta["unix_time"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  write_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::bad_input, "cannot open problem file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

problem_bundle load_with_overrides(const common_opts& o) {
  std::string text = slurp(o.problem_path);
  for (const auto& ov : o.overrides) text = apply_override(text, ov);
  problem_bundle b = parse_problem_json(text);
  if (!o.variant_flag.empty()) b.v = variant_from_name(o.variant_flag);
  return b;
}

bool is_infeasibility(errc c) {
  return c == errc::gain_infeasible || c == errc::not_hurwitz ||
         c == errc::infeasible_at_zero || c == errc::infeasible ||
         c == errc::non_commensurate_delays || c == errc::box_inverted;
}

int cmd_analyze(const common_opts& o, int argc, const char* const* argv) {
  const problem_bundle b = load_with_overrides(o);
  const validated_problem p = validate(b);
  const analysis_report r = analyze(p);
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "report.json", report_to_json(r, p));
  write_file(fs::path(o.out_dir) / "report.csv", report_to_csv_row(r, true));
  write_file(fs::path(o.out_dir) / "problem.resolved.json", problem_to_json(b));
  write_run_meta(o.out_dir, argc, argv);

  std::cout << "variant: " << variant_name(r.v) << "\n";
  std::cout << "epsilon: " << r.epsilon << "\n";
  if (r.eps_star) {
    std::cout << "eps_star: " << *r.eps_star << "\n";
  } else {
    std::cout << "eps_star: infeasible (" << *r.eps_star_failure << ")\n";
  }
  std::cout << "decay rates:";
  for (double d : r.delta_rates) std::cout << " " << d;
  std::cout << "\n";
  if (!r.ultimate.empty()) {
    std::cout << "ultimate box at epsilon:";
    for (double x : r.ultimate) std::cout << " " << x;
    std::cout << "\nrefined ultimate bound:";
    for (double x : r.refinement->final_ub) std::cout << " " << x;
    std::cout << "\nback-mapped bound:";
    for (double x : r.refinement->backmapped) std::cout << " " << x;
    std::cout << "\n";
  } else {
    std::cout << "stability conditions infeasible at epsilon = " << r.epsilon << "\n";
    return 1;
  }
  return r.eps_star ? 0 : 1;
}

int cmd_simulate(const common_opts& o, int argc, const char* const* argv) {
  const problem_bundle b = load_with_overrides(o);
  const validated_problem p = validate(b);
  const sim_config cfg = make_sim_config(b, p);
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "problem.resolved.json", problem_to_json(b));
  write_run_meta(o.out_dir, argc, argv);

  const condition_values cv = stability_conditions(p, cfg.epsilon);
  if (!cv.feasible()) {
    const sim_trace tr = simulate(p, cfg);
    write_file(fs::path(o.out_dir) / "trace.csv", tr.to_csv());
    write_file(fs::path(o.out_dir) / "verify.md",
               "# verification\n\nstability conditions are infeasible at epsilon; "
               "trajectory recorded without bound verification\n");
    std::cout << "infeasible at epsilon = " << cfg.epsilon << "; trace written\n";
    return 1;
  }

  const refinement_result ref = refine_ultimate_bound(p, cfg.epsilon, 1e-3, 1e-4);
  const transient_envelope_result env = transient_envelope(p, cfg.epsilon);
  vec d_omega(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) d_omega[i] = 0.2 * ref.final_ub[i];
  const vec t_entry = finite_time(p, cfg.epsilon, d_omega);

  double env_ratio = 0.0, ub_ratio = 0.0;
  sim_observer obs = [&](double t, const vec& vth, const vec&) {
    for (std::size_t i = 0; i < vth.size(); ++i) {
      if (t >= env.t_start)
        env_ratio = std::max(env_ratio, std::fabs(vth[i]) / env.eval(i, t));
      if (t >= t_entry[i])
        ub_ratio = std::max(ub_ratio, std::fabs(vth[i]) / ref.final_ub[i]);
    }
  };
  const sim_trace tr = simulate(p, cfg, obs);
  write_file(fs::path(o.out_dir) / "trace.csv", tr.to_csv());

  const bool ok = env_ratio < 1.0 && ub_ratio <= 1.2;
  std::ostringstream md;
  md << "# verification\n\n";
  md << "refined ultimate bound:";
  for (double x : ref.final_ub) md << " " << x;
  md << "\nentry deadlines:";
  for (double x : t_entry) md << " " << x;
  md << "\nenvelope max ratio: " << env_ratio << " (must be < 1)\n";
  md << "ultimate-bound max ratio after entry: " << ub_ratio << " (margin 1.2)\n";
  md << "result: " << (ok ? "confirmed" : "NOT CONFIRMED") << "\n";
  write_file(fs::path(o.out_dir) / "verify.md", md.str());
  std::cout << md.str();
  return ok ? 0 : 3;
}

int cmd_reproduce(const std::string& table, const std::string& example,
                  const std::string& out_dir, int argc, const char* const* argv) {
  fs::create_directories(out_dir);
  write_run_meta(out_dir, argc, argv);
  if (!table.empty()) {
    const std::string id = table.size() <= 2 ? "table" + table : table;
    const table_diff d = reproduce_table(id);
    write_file(fs::path(out_dir) / (d.id + ".md"), d.to_markdown());
    write_file(fs::path(out_dir) / (d.id + ".csv"), d.to_csv());
    std::cout << d.to_markdown();
    return d.all_pass ? 0 : 3;
  }
  const std::string id = example.rfind("ex", 0) == 0 && example.rfind("example", 0) != 0
                             ? "example" + example.substr(2)
                             : example;
  const example_run r = run_example(id);
  write_file(fs::path(out_dir) / (r.id + ".md"), r.summary());
  write_file(fs::path(out_dir) / (r.id + "_trace.csv"), r.trace.to_csv());
  std::cout << r.summary();
  return r.verification.pass ? 0 : 3;
}

int cmd_sweep(const common_opts& o, const std::string& spec, int argc,
              const char* const* argv) {
  // spec: param:lo:hi:n
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4) fail(errc::bad_input, "--sweep expects param:lo:hi:n");
  const std::string param = parts[0];
  const double lo = std::stod(parts[1]);
  const double hi = std::stod(parts[2]);
  const long count = std::stol(parts[3]);
  if (count < 1) fail(errc::bad_input, "sweep point count must be positive");

  std::string base = slurp(o.problem_path);
  for (const auto& ov : o.overrides) base = apply_override(base, ov);

  struct sweep_row {
    double value;
    std::optional<double> eps_star;
    vec omega;
    std::string note;
  };
  auto eval_one = [&](double value) {
    sweep_row row{value, {}, {}, ""};
    try {
      std::ostringstream assign;
      assign.precision(17);
      assign << param << "=" << value;
      problem_bundle b = parse_problem_json(apply_override(base, assign.str()));
      if (!o.variant_flag.empty()) b.v = variant_from_name(o.variant_flag);
      const validated_problem p = validate(b);
      row.eps_star = find_eps_star(p).eps_star;
      row.omega = ultimate_box(p, *row.eps_star).omega;
    } catch (const es_error& e) {
      row.note = e.what();
    }
    return row;
  };

  std::vector<std::future<sweep_row>> futs;
  for (long i = 0; i < count; ++i) {
    const double v = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
    futs.push_back(std::async(std::launch::async, eval_one, v));
  }
  std::ostringstream csv;
  csv << "param,value,eps_star,omega,note\n";
  for (auto& f : futs) {
    const sweep_row r = f.get();
    csv << param << "," << r.value << ",";
    if (r.eps_star) csv << *r.eps_star;
    csv << ",\"";
    for (std::size_t i = 0; i < r.omega.size(); ++i)
      csv << (i ? " " : "") << r.omega[i];
    csv << "\"," << r.note << "\n";
  }
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());
  write_run_meta(o.out_dir, argc, argv);
  std::cout << csv.str();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"gradient extremum seeking under large delays: analysis, "
               "simulation, and table reproduction"};
  app.require_subcommand(1);

  common_opts opts;
  std::string table, example, sweep_spec;

  auto add_common = [&](CLI::App* sub, bool needs_problem) {
    if (needs_problem)
      sub->add_option("--problem", opts.problem_path, "problem JSON document")
          ->required();
    sub->add_option("--variant", opts.variant_flag,
                    "continuous | sampled | single_var_continuous | single_var_sampled");
    sub->add_option("--out", opts.out_dir, "output directory (default .)");
    sub->add_option("--set", opts.overrides,
                    "dotted-key override, e.g. tuning.epsilon=0.25 (repeatable)");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "feasibility and bound report");
  add_common(analyze, true);
  CLI::App* simulate = app.add_subcommand("simulate", "closed-loop trajectory + verification");
  add_common(simulate, true);
  CLI::App* reproduce = app.add_subcommand("reproduce", "published tables and examples");
  reproduce->add_option("--table", table, "table id (1..6 or tableN)");
  reproduce->add_option("--example", example, "example id (example3_1 .. example4_3)");
  reproduce->add_option("--out", opts.out_dir, "output directory (default .)");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  add_common(sweep, true);
  sweep->add_option("--sweep", sweep_spec, "param:lo:hi:n, e.g. tuning.kappa:0:1:11")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(opts, argc, argv);
    if (app.got_subcommand(simulate)) return cmd_simulate(opts, argc, argv);
    if (app.got_subcommand(reproduce)) {
      if (table.empty() == example.empty()) {
        std::cerr << "usage error: reproduce needs exactly one of --table/--example\n";
        return 2;
      }
      return cmd_reproduce(table, example, opts.out_dir, argc, argv);
    }
    if (app.got_subcommand(sweep)) return cmd_sweep(opts, sweep_spec, argc, argv);
  } catch (const es_error& e) {
    std::cerr << e.what() << "\n";
    if (e.code() == errc::unknown_table || e.code() == errc::unknown_example ||
        e.code() == errc::bad_input)
      return 2;
    return is_infeasibility(e.code()) ? 1 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace esdelay::cli
