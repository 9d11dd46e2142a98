#include "convexito/cli.hpp"

#include "convexito/brownian.hpp"
#include "convexito/cone_grid.hpp"
#include "convexito/corpus.hpp"
#include "convexito/errors.hpp"
#include "convexito/estimators.hpp"
#include "convexito/heat_kernel.hpp"
#include "convexito/report.hpp"
#include "convexito/test_function.hpp"
#include "convexito/verifier.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace cvx::cli {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kCommands = {"trace",          "direction",          "hessian",
                                            "residual-curve", "verify-representation", "verify-trace-revuz",
                                            "verify-sup-exp", "verify-recursion",   "cone-grid-report",
                                            "corpus-test"};

std::int64_t parse_count(const std::string& s) {
  const auto v = parse_number_list(s);
  if (v.size() != 1 || !(v[0] >= 1.0) || v[0] != std::floor(v[0]) || v[0] > 9e15)
    throw ConfigError("n must be a positive integer, got '" + s + "'");
  return static_cast<std::int64_t>(v[0]);
}

std::uint64_t parse_seed(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("seed must be a non-negative integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("seed must be a non-negative integer, got '" + s + "'");
  return v;
}

double parse_one(const std::string& s, const std::string& name) {
  const auto v = parse_number_list(s);
  if (v.size() != 1) throw ConfigError(name + " must be a single number, got '" + s + "'");
  return v[0];
}

int parse_int(const std::string& s, const std::string& name) {
  const double v = parse_one(s, name);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(name + " must be an integer");
  return static_cast<int>(v);
}

// Applies one key=value (from a flag or the config file).
void apply(ExperimentConfig& c, const std::string& key, const std::string& val) {
  if (key == "function") c.function_id = val;
  else if (key == "x") c.x = parse_number_list(val);
  else if (key == "t") c.times = parse_number_list(val);
  else if (key == "r") c.radii = parse_number_list(val);
  else if (key == "n") c.n = parse_count(val);
  else if (key == "seed") c.seed = parse_seed(val);
  else if (key == "output") c.output = val;
  else if (key == "json") c.json = val;
  else if (key == "format") {
    if (val == "csv") c.format = Format::csv;
    else if (val == "json") c.format = Format::json;
    else throw ConfigError("format must be csv or json");
  } else if (key == "v") c.direction = parse_number_list(val);
  else if (key == "S" || key == "Q") c.matrix = val;
  else if (key == "eps") c.eps = parse_one(val, key);
  else if (key == "steps") c.steps = parse_int(val, key);
  else if (key == "levels") c.levels = parse_int(val, key);
  else if (key == "r-max") c.r_max = parse_one(val, key);
  else if (key == "width") c.width = parse_one(val, key);
  else if (key == "tol") c.tol = parse_one(val, key);
  else if (key == "d") c.d = parse_int(val, key);
  else if (key == "epsilon") c.epsilon = parse_one(val, key);
  else if (key == "corpus") c.corpus_files.push_back(val);
  else if (key == "threads") c.threads = parse_int(val, key);
  else throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(ExperimentConfig& c, const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config file: sections are not supported ('" + key + "')");
    apply(c, key, node.get_value<std::string>());
  }
}

struct Outcome {
  Table table;
  json summary = json::object();
  std::vector<std::pair<std::string, bool>> verdicts;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v) { return format_number(v); }

Vec point_for(const ExperimentConfig& c, int d) {
  if (c.x.empty()) return Vec::Zero(d);
  if (static_cast<int>(c.x.size()) != d)
    throw ConfigError("--x has " + std::to_string(c.x.size()) + " entries, function has dimension " +
                      std::to_string(d));
  return from_values(c.x);
}

std::vector<double> times_or(const ExperimentConfig& c, std::vector<double> fallback) {
  return c.times.empty() ? fallback : c.times;
}

Table estimate_table() { return Table({"param", "value", "stderr", "n", "seed", "elapsed_ms"}); }

void add_estimate(Table& t, double param, const MCEstimate& e, double ms) {
  t.add_row({num(param), num(e.mean), num(e.std_error), std::to_string(e.n), std::to_string(e.seed), num(ms)});
}

json estimate_json(const MCEstimate& e) {
  return {{"t", e.t}, {"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}, {"seed", e.seed}};
}

// f itself when it has an analytic Hessian, else its closed-form mollification.
ConvexFunction smooth_version(const ConvexFunction& f, double eps) {
  if (f.smooth && f.has_hessian()) return f;
  ConvexFunction g = mollify(f, eps);
  if (!g.has_hessian())
    throw ConfigError("'" + f.id + "' has no closed-form mollification with a Hessian; pick a smooth corpus member");
  return g;
}

Outcome cmd_trace(const ExperimentConfig& c, const Registry& reg) {
  const auto f = reg.get(c.function_id);
  const Vec x = point_for(c, f.dim);
  Outcome o{estimate_table()};
  o.summary["estimates"] = json::array();
  for (double t : times_or(c, {0.01})) {
    const auto start = std::chrono::steady_clock::now();
    const auto e = c.matrix.empty() ? trace_estimate(f, x, t, c.n, c.seed)
                                    : linear_map_trace(f, x, parse_matrix(c.matrix), t, c.n, c.seed);
    add_estimate(o.table, t, e, elapsed_ms(start));
    o.summary["estimates"].push_back(estimate_json(e));
  }
  return o;
}

Outcome cmd_direction(const ExperimentConfig& c, const Registry& reg) {
  const auto f = reg.get(c.function_id);
  const Vec x = point_for(c, f.dim);
  if (c.direction.empty()) throw ConfigError("direction needs --v");
  const Vec v = from_values(c.direction);
  Outcome o{estimate_table()};
  o.summary["estimates"] = json::array();
  for (double t : times_or(c, {0.01})) {
    const auto start = std::chrono::steady_clock::now();
    const auto e = directional_second_derivative(f, x, v, t, c.n, c.seed);
    add_estimate(o.table, t, e, elapsed_ms(start));
    o.summary["estimates"].push_back(estimate_json(e));
  }
  return o;
}

Outcome cmd_hessian(const ExperimentConfig& c, const Registry& reg) {
  const auto f = reg.get(c.function_id);
  const Vec x = point_for(c, f.dim);
  Outcome o{Table({"t", "i", "j", "value", "stderr", "n", "seed", "elapsed_ms"})};
  o.summary["estimates"] = json::array();
  for (double t : times_or(c, {0.01})) {
    const auto start = std::chrono::steady_clock::now();
    const auto h = hessian_by_polarization(f, x, t, c.n, c.seed);
    const double ms = elapsed_ms(start);
    json m = json::array();
    for (int i = 0; i < f.dim; ++i) {
      json row = json::array();
      for (int j = 0; j < f.dim; ++j) {
        row.push_back(h.matrix(i, j));
        if (j >= i)
          o.table.add_row({num(t), std::to_string(i), std::to_string(j), num(h.matrix(i, j)), num(h.std_error(i, j)),
                           std::to_string(h.n), std::to_string(h.seed), num(ms)});
      }
      m.push_back(row);
    }
    o.summary["estimates"].push_back({{"t", t}, {"matrix", m}});
  }
  return o;
}

Outcome cmd_residual_curve(const ExperimentConfig& c, const Registry& reg) {
  const auto f = reg.get(c.function_id);
  const Vec x = point_for(c, f.dim);
  std::optional<Mat> Q;
  if (!c.matrix.empty()) Q = parse_matrix(c.matrix);
  Outcome o{estimate_table()};
  ResidualCurve curve{f.id, x, {}};
  for (double t : times_or(c, dyadic_times(0.1, 1e-4))) {
    const auto start = std::chrono::steady_clock::now();
    const auto e = ito_residual(f, x, t, c.n, c.seed, Q);
    add_estimate(o.table, t, e, elapsed_ms(start));
    curve.points.push_back({t, e.mean, e.std_error});
  }
  const auto fit = residual_rate_fit(curve);
  o.summary["fit"] = {{"verdict", to_string(fit.verdict)},
                      {"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"points_used", fit.points_used}};
  o.verdicts.emplace_back("residual_decays", fit.verdict != RateVerdict::no_decay);
  return o;
}

Outcome cmd_representation(const ExperimentConfig& c, const Registry& reg) {
  const auto f = smooth_version(reg.get(c.function_id), c.eps);
  const Vec x = point_for(c, f.dim);
  const auto h = unit_mass_bump(x, Vec::Constant(f.dim, c.width));
  Outcome o{Table({"t", "lhs", "rhs", "abs_diff", "elapsed_ms"})};
  bool ok = true;
  RepresentationOptions opts;
  if (f.dim >= 2) opts = {20, 16};
  for (double t : times_or(c, {0.1, 1.0})) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = representation_check(f, h, t, opts);
    o.table.add_row({num(t), num(r.lhs), num(r.rhs), num(r.abs_diff()), num(elapsed_ms(start))});
    ok = ok && r.abs_diff() <= c.tol;
  }
  o.verdicts.emplace_back("lhs_equals_rhs", ok);
  return o;
}

Outcome cmd_trace_revuz(const ExperimentConfig& c, const Registry& reg) {
  const auto f = smooth_version(reg.get(c.function_id), c.eps);
  const Vec x = point_for(c, f.dim);
  const auto phi = poly_bump(x, Vec::Constant(f.dim, c.width));
  TraceRevuzOptions opts;
  opts.n = c.n;
  opts.seed = c.seed;
  const auto start = std::chrono::steady_clock::now();
  const auto r = trace_revuz_compare(f, phi, opts);
  Outcome o{Table({"mc_side", "mc_stderr", "quad_side", "abs_diff", "n", "seed", "elapsed_ms"})};
  const double diff = std::abs(r.mc_side - r.quad_side);
  o.table.add_row({num(r.mc_side), num(r.mc_std_error), num(r.quad_side), num(diff), std::to_string(c.n),
                   std::to_string(c.seed), num(elapsed_ms(start))});
  o.verdicts.emplace_back("agreement", diff <= 3.0 * r.mc_std_error + 1e-5);
  return o;
}

Table inequality_table() {
  return Table({"function", "param", "lhs", "rhs", "C", "alpha", "margin", "pass", "s", "L", "G", "G_stderr"});
}

void add_inequality(Table& t, const InequalityReport& r) {
  t.add_row({r.function_id, num(r.param), num(r.lhs), num(r.rhs), num(r.C), num(r.alpha), num(r.margin),
             r.pass ? "1" : "0", num(r.s), num(r.L), num(r.G), num(r.G_std_error)});
}

Outcome cmd_sup_exp(const ExperimentConfig& c, const Registry& reg) {
  const auto h = reg.get(c.function_id);
  const Vec x = point_for(c, h.dim);
  const double hx = h(x);
  const Vec p = h.subgradient(x);
  auto eval = h.eval;
  auto g = [eval, x, hx, p](const Vec& y) { return std::abs(eval(x + y) - hx - p.dot(y)); };
  Outcome o{inequality_table()};
  bool ok = true;
  for (double r : c.radii.empty() ? std::vector<double>{1.0, 0.5, 0.25} : c.radii) {
    SupOptions opts;
    opts.n = c.n;
    opts.seed = c.seed;
    opts.id = h.id;
    const auto rep = sup_expectation_bound(g, r, h.dim, opts);
    add_inequality(o.table, rep);
    ok = ok && rep.pass;
  }
  o.verdicts.emplace_back("sup_bound", ok);
  return o;
}

Outcome cmd_recursion(const ExperimentConfig& c, const Registry& reg) {
  const auto f = reg.get(c.function_id);
  const Vec x = point_for(c, f.dim);
  if (!f.has_hessian()) throw ConfigError("'" + f.id + "' has no analytic Hessian; recursion check needs (p, Q)");
  RecursionOptions opts;
  opts.n = c.n;
  opts.seed = c.seed;
  const auto rep = dyadic_recursion_check(f, x, f.subgradient(x), f.hessian_density(x), c.r_max, c.levels, opts);
  Outcome o{Table({"r", "s", "s_2r", "G", "G_stderr", "s_over_r2", "bound", "bound_ok", "dropped"})};
  for (const auto& lv : rep.levels)
    o.table.add_row({num(lv.r), num(lv.s), num(lv.s_double), num(lv.G), num(lv.G_std_error), num(lv.s_over_r2),
                     num(lv.bound), lv.bound_ok ? "1" : "0", lv.dropped ? "1" : "0"});
  o.summary["C_bound"] = rep.C_bound;
  o.summary["alpha"] = rep.alpha;
  o.summary["warnings"] = rep.warnings;
  o.verdicts.emplace_back("recursion_bound_every_level", rep.all_bounds_hold);
  o.verdicts.emplace_back("s_over_r2_bounded", rep.bounded);
  return o;
}

Outcome cmd_cone_grid(const ExperimentConfig& c) {
  const auto grid = build_grid(c.d, c.epsilon);
  const std::int64_t n = c.n;
  const auto areas = cap_area_estimate(grid, n, c.seed);
  CapArea worst;
  for (const auto& a : areas)
    if (a.area > worst.area) worst = a;
  const auto bound = distortion_bound(grid, identity(c.d));
  Outcome o{Table({"d", "epsilon", "N", "max_cap_area", "stderr", "max_exact_area", "a_norm", "a_quad", "a"})};
  o.table.add_row({std::to_string(c.d), num(c.epsilon), std::to_string(grid.N()), num(worst.area),
                   num(worst.std_error), num(grid.max_cell_area()), num(bound.norm_part), num(bound.quad_part),
                   num(bound.a)});
  o.verdicts.emplace_back("cap_area_within_epsilon", worst.area <= c.epsilon + 3.0 * worst.std_error);
  return o;
}

Outcome cmd_corpus_test(const ExperimentConfig& c, const Registry& reg) {
  Outcome o{Table({"function", "check", "worst", "pass"})};
  bool ok = true;
  for (const auto& id : reg.ids()) {
    for (const auto& chk : check_invariants(reg.get(id), c.seed)) {
      o.table.add_row({id, chk.name, num(chk.worst), chk.pass ? "1" : "0"});
      ok = ok && chk.pass;
    }
  }
  o.verdicts.emplace_back("invariants", ok);
  return o;
}

bool needs_function(const std::string& cmd) { return cmd != "cone-grid-report" && cmd != "corpus-test"; }

Outcome dispatch(const ExperimentConfig& c, const Registry& reg) {
  if (c.command == "trace") return cmd_trace(c, reg);
  if (c.command == "direction") return cmd_direction(c, reg);
  if (c.command == "hessian") return cmd_hessian(c, reg);
  if (c.command == "residual-curve") return cmd_residual_curve(c, reg);
  if (c.command == "verify-representation") return cmd_representation(c, reg);
  if (c.command == "verify-trace-revuz") return cmd_trace_revuz(c, reg);
  if (c.command == "verify-sup-exp") return cmd_sup_exp(c, reg);
  if (c.command == "verify-recursion") return cmd_recursion(c, reg);
  if (c.command == "cone-grid-report") return cmd_cone_grid(c);
  if (c.command == "corpus-test") return cmd_corpus_test(c, reg);
  throw ConfigError("unknown command '" + c.command + "'");
}

void write_outputs(const ExperimentConfig& c, Outcome& o, std::ostream& out) {
  bool all = true;
  json verdicts = json::array();
  for (const auto& [name, pass] : o.verdicts) {
    verdicts.push_back({{"name", name}, {"pass", pass}});
    all = all && pass;
  }
  json summary = {{"command", c.command}, {"function", c.function_id}, {"seed", c.seed}, {"n", c.n},
                  {"rows", o.table.rows().size()}, {"verdicts", verdicts}, {"pass", all}};
  summary.update(o.summary);

  if (!c.output.empty()) {
    std::ofstream f(c.output);
    if (!f) throw ConfigError("cannot write '" + c.output + "'");
    o.table.write_csv(f);
  } else if (c.format == Format::csv) {
    o.table.write_csv(out);
  }
  if (!c.json.empty()) {
    std::ofstream f(c.json);
    if (!f) throw ConfigError("cannot write '" + c.json + "'");
    f << summary.dump(2) << '\n';
  }
  if (c.format == Format::json) out << summary.dump(2) << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw ConfigError("unknown command '" + command + "'");
  if (needs_function(command) && function_id.empty()) throw ConfigError(command + " needs a function id");
  for (double t : times)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t values must be > 0");
  for (double r : radii)
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("r values must be > 0");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(width > 0.0)) throw ConfigError("width must be > 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  // `verify X` is the same as `verify-X`
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.size() >= 2 && args[0] == "verify") {
    args[0] = "verify-" + args[1];
    args.erase(args.begin() + 1);
  }

  CLI::App app{"Monte-Carlo and quadrature experiments on convex functions"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  std::string config_path;
  std::vector<std::string> corpus;
  std::string function_id, d_pos, eps_pos;
  const std::vector<std::string> keys = {"x",     "t",      "r",     "n",     "seed", "output", "json", "format",
                                         "v",     "S",      "Q",     "eps",   "steps", "levels", "r-max", "width",
                                         "tol",   "d",      "epsilon", "threads"};
  for (const auto& name : kCommands) {
    auto* sub = app.add_subcommand(name);
    if (needs_function(name)) sub->add_option("function", function_id, "corpus function id");
    if (name == "cone-grid-report") {
      sub->add_option("dimension", d_pos, "2 or 3");
      sub->add_option("cap_bound", eps_pos, "cap-area bound epsilon");
    }
    for (const auto& k : keys) sub->add_option("--" + k, flags[k]);
    sub->add_option("--config", config_path, "INI file whose keys override the flags");
    sub->add_option("--corpus", corpus, "INI corpus file with extra functions");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  ExperimentConfig c;
  try {
    c.command = app.get_subcommands().front()->get_name();
    c.function_id = function_id;
    if (c.command == "cone-grid-report") c.n = 1000000;
    if (!d_pos.empty()) apply(c, "d", d_pos);
    if (!eps_pos.empty()) apply(c, "epsilon", eps_pos);
    for (const auto& k : keys)
      if (!flags[k].empty()) apply(c, k, flags[k]);
    for (const auto& f : corpus) apply(c, "corpus", f);
    if (!config_path.empty()) load_config_file(c, config_path);
    c.validate();
    set_thread_count(c.threads);

    Registry reg = Registry::builtin();
    for (const auto& f : c.corpus_files) reg.load_ini_file(f);
    if (needs_function(c.command)) reg.spec(c.function_id);  // unknown ids fail before any work

    Outcome o = dispatch(c, reg);
    write_outputs(c, o, out);
    for (const auto& [name, pass] : o.verdicts)
      if (!pass) {
        err << "verdict failed: " << name << "\n";
        return 1;
      }
    return 0;
  } catch (const UnknownFunctionError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonIntegrableError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EstimationError& e) {
    err << "monte-carlo abort: " << e.what() << "\n  sample:";
    for (double v : e.sample()) err << ' ' << format_number(v);
    err << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "abort: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cvx::cli
