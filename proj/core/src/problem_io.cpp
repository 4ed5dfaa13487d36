#include "esdelay/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "esdelay/errors.hpp"
#include "json.hpp"

namespace esdelay {

namespace {

using json = nlohmann::ordered_json;

vec to_vec(const json& j) {
  vec v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

mat to_mat(const json& j) {
  const std::size_t rows = j.size();
  if (rows == 0) fail(errc::bad_input, "empty matrix");
  const std::size_t cols = j[0].size();
  mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) fail(errc::bad_input, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json from_mat(const mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

problem_bundle parse_problem_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    fail(errc::bad_input, std::string("problem JSON does not parse: ") + e.what());
  }
  problem_bundle b;
  if (!doc.contains("map") || !doc.contains("delays") || !doc.contains("tuning"))
    fail(errc::bad_input, "problem document needs map/delays/tuning sections");
  b.v = variant_from_name(doc.value("variant", std::string("continuous")));

  const json& m = doc["map"];
  b.map.n = m.at("n").get<std::size_t>();
  if (m.contains("q_star") && !m["q_star"].is_null()) b.map.q_star = m["q_star"].get<double>();
  b.map.q_star_max = m.value("q_star_max", 0.0);
  if (m.contains("theta_star") && !m["theta_star"].is_null())
    b.map.theta_star = to_vec(m["theta_star"]);
  if (m.contains("theta_star_box") && !m["theta_star_box"].is_null()) {
    std::vector<interval> box;
    for (const auto& e : m["theta_star_box"]) {
      if (e.size() != 2) fail(errc::bad_input, "theta_star_box entries are [lo, hi]");
      box.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    b.map.theta_star_box = std::move(box);
  }
  b.map.h_bar = to_mat(m.at("h_bar"));
  if (m.contains("delta_h") && !m["delta_h"].is_null()) b.map.delta_h = to_mat(m["delta_h"]);
  b.map.kappa = m.value("kappa", 0.0);
  if (m.contains("h_m") && !m["h_m"].is_null()) b.map.h_m = m["h_m"].get<double>();
  if (m.contains("h_M") && !m["h_M"].is_null()) b.map.h_max = m["h_M"].get<double>();

  const json& d = doc["delays"];
  b.delays.d_out = d.value("d_out", 0.0);
  b.delays.mu = d.value("mu", 0.0);
  b.delays.d_in = to_vec(d.at("d_in"));
  for (const auto& e : d.at("m")) b.delays.m.push_back(e.get<long>());

  const json& t = doc["tuning"];
  b.tuning.k = to_vec(t.at("k"));
  b.tuning.a = to_vec(t.at("a"));
  b.tuning.sigma0_bar = to_vec(t.at("sigma0_bar"));
  b.tuning.sigma_bar = to_vec(t.at("sigma_bar"));
  b.tuning.mu = t.contains("mu") ? t["mu"].get<double>() : b.delays.mu;
  b.tuning.kappa = t.contains("kappa") ? t["kappa"].get<double>() : b.map.kappa;
  b.tuning.q = t.value("q", 1l);
  b.tuning.epsilon = t.at("epsilon").get<double>();

  if (doc.contains("simulation") && !doc["simulation"].is_null()) {
    const json& s = doc["simulation"];
    sim_settings ss;
    ss.horizon = s.at("horizon").get<double>();
    ss.step_divisor = s.value("step_divisor", 400l);
    ss.init_theta_hat = to_vec(s.at("init_theta_hat"));
    ss.record_stride = s.value("record_stride", std::size_t(1));
    ss.delta_d_kind = s.value("delta_d", std::string("sin"));
    if (ss.delta_d_kind != "sin" && ss.delta_d_kind != "zero")
      fail(errc::bad_input, "delta_d must be 'sin' or 'zero'");
    b.sim = std::move(ss);
  }
  return b;
}

problem_bundle load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::bad_input, "cannot open problem file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_problem_json(os.str());
}

std::string problem_to_json(const problem_bundle& b) {
  json doc;
  doc["variant"] = variant_name(b.v);
  json m;
  m["n"] = b.map.n;
  if (b.map.q_star) m["q_star"] = *b.map.q_star;
  m["q_star_max"] = b.map.q_star_max;
  if (b.map.theta_star) m["theta_star"] = *b.map.theta_star;
  if (b.map.theta_star_box) {
    json box = json::array();
    for (const auto& iv : *b.map.theta_star_box) box.push_back({iv.lo, iv.hi});
    m["theta_star_box"] = box;
  }
  m["h_bar"] = from_mat(b.map.h_bar);
  if (b.map.delta_h) m["delta_h"] = from_mat(*b.map.delta_h);
  m["kappa"] = b.map.kappa;
  if (b.map.h_m) m["h_m"] = *b.map.h_m;
  if (b.map.h_max) m["h_M"] = *b.map.h_max;
  doc["map"] = m;

  json d;
  d["d_out"] = b.delays.d_out;
  d["mu"] = b.delays.mu;
  d["d_in"] = b.delays.d_in;
  d["m"] = b.delays.m;
  doc["delays"] = d;

  json t;
  t["k"] = b.tuning.k;
  t["a"] = b.tuning.a;
  t["sigma0_bar"] = b.tuning.sigma0_bar;
  t["sigma_bar"] = b.tuning.sigma_bar;
  t["mu"] = b.tuning.mu;
  t["kappa"] = b.tuning.kappa;
  t["q"] = b.tuning.q;
  t["epsilon"] = b.tuning.epsilon;
  doc["tuning"] = t;

  if (b.sim) {
    json s;
    s["horizon"] = b.sim->horizon;
    s["step_divisor"] = b.sim->step_divisor;
    s["init_theta_hat"] = b.sim->init_theta_hat;
    s["record_stride"] = b.sim->record_stride;
    s["delta_d"] = b.sim->delta_d_kind;
    doc["simulation"] = s;
  }
  return doc.dump(2) + "\n";
}

validated_problem validate(const problem_bundle& b) {
  return validate_problem(b.map, b.delays, b.tuning, b.v);
}

sim_config make_sim_config(const problem_bundle& b, const validated_problem& p) {
  if (!b.sim) fail(errc::bad_input, "problem document has no simulation section");
  sim_config cfg;
  cfg.epsilon = p.tuning.epsilon;
  cfg.horizon = b.sim->horizon;
  if (b.sim->step_divisor < 1) fail(errc::bad_input, "step_divisor must be positive");
  cfg.step = cfg.epsilon / double(b.sim->step_divisor);
  cfg.init_theta_hat = b.sim->init_theta_hat;
  cfg.record_stride = b.sim->record_stride;
  if (b.sim->delta_d_kind == "zero") {
    cfg.delta_d = [](double) { return 0.0; };
  }  // "sin" keeps the simulator default rho*sin(t)
  return cfg;
}

std::string apply_override(const std::string& json_text, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(errc::bad_input, "override must look like section.key=value");
  std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  for (char& c : key)
    if (c == '.') c = '/';
  json doc = json::parse(json_text);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const std::exception&) {
    parsed = value;  // bare strings stay strings
  }
  const json::json_pointer ptr("/" + key);
  // overrides must land on existing schema keys (array extension excepted)
  if (!doc.contains(ptr)) {
    try {
      doc.at(ptr);
    } catch (const std::exception&) {
      fail(errc::bad_input, "override key '" + assignment.substr(0, eq) +
                                "' does not exist in the problem document");
    }
  }
  doc[ptr] = parsed;
  // kappa and mu live in two sections that must agree; setting one sets both
  auto mirror = [&](const char* a, const char* b) {
    const json::json_pointer pa(a), pb(b);
    if (ptr == pa && doc.contains(pb)) doc[pb] = parsed;
    if (ptr == pb && doc.contains(pa)) doc[pa] = parsed;
  };
  mirror("/map/kappa", "/tuning/kappa");
  mirror("/delays/mu", "/tuning/mu");
  return doc.dump(2) + "\n";
}

}  // namespace esdelay
