#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "hdgeig/error.hpp"
#include "hdgeig/parallel.hpp"
#include "hdgeig/recovery.hpp"
#include "hdgeig/study.hpp"
#include "json.hpp"

namespace hdgeig {

namespace {

struct CliOptions {
  std::string domain = "square";
  int level = 1;
  std::string levels = "0:3";
  int k = 1;
  std::string space_case = "equal";
  std::string tau = "one";
  std::vector<int> modes;
  bool postprocess = true;
  std::string format = "markdown";
  std::string output;
  int threads = 0;
  double rel_tol = 1e-12;
  int max_iter = 50;
  bool verbose = false;
};

std::string num(double v, const char* spec = "%.15g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::pair<int, int> parse_levels(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      const int l = std::stoi(s);
      return {l, l};
    }
    std::size_t used_a = 0, used_b = 0;
    const int a = std::stoi(s.substr(0, colon), &used_a);
    const int b = std::stoi(s.substr(colon + 1), &used_b);
    if (used_a != colon || used_b != s.size() - colon - 1) throw std::invalid_argument(s);
    if (a < 0 || b < a) throw ConfigError("invalid level range '" + s + "' (need 0 <= a <= b)");
    return {a, b};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("malformed level range '" + s + "' (expected a:b)");
  }
}

// A single value N means modes 1..N.
std::vector<int> mode_list(const std::vector<int>& modes, int fallback) {
  std::vector<int> out;
  if (modes.empty()) {
    for (int m = 1; m <= fallback; ++m) out.push_back(m);
  } else if (modes.size() == 1) {
    for (int m = 1; m <= modes[0]; ++m) out.push_back(m);
  } else {
    out = modes;
  }
  if (out.empty()) throw ConfigError("no modes requested");
  for (int m : out)
    if (m < 1) throw ConfigError("mode indices are 1-based");
  return out;
}

NonlinearOptions solver_options(const CliOptions& o) {
  if (!(o.rel_tol > 0.0) || o.max_iter < 1) throw ConfigError("invalid solver tolerances");
  return {o.rel_tol, o.max_iter};
}

void write_output(const CliOptions& o, const std::string& text, std::ostream& out) {
  if (o.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.output);
  if (!f) throw ConfigError("cannot open output file '" + o.output + "'");
  f << text;
}

std::string describe(const CliOptions& o, int level, const CondensedSystem& sys) {
  std::ostringstream os;
  os << "domain " << o.domain << ", level " << level << ", k = " << o.k << ", case " << o.space_case << ", tau "
     << sys.tau().label() << ", " << sys.mesh().num_elements() << " elements, " << sys.size() << " trace unknowns";
  return os.str();
}

int cmd_solve(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const Domain domain = parse_domain(o.domain);
  const TableFormat format = parse_format(o.format);
  const SpaceConfig spaces = SpaceConfig::make(o.k, parse_space_case(o.space_case));
  const TauSpec tau = parse_tau(o.tau);
  validate(spaces, tau);
  if (o.level < 0 || o.level > 6) throw ConfigError("level must be in 0..6");
  const std::vector<int> modes = mode_list(o.modes, 4);
  const NonlinearOptions opts = solver_options(o);

  CondensedSystem sys(build_mesh(domain, o.level), spaces, tau, MaterialSpec::isotropic());
  const int mmax = *std::max_element(modes.begin(), modes.end());
  const auto seeds = solve_linear_surrogate(sys, mmax);
  struct Row {
    EigenPair pair;
    double tilde;
    std::optional<double> star;
  };
  std::vector<Row> rows;
  for (int m : modes) {
    Row row{solve_condensed_nonlinear(sys, seeds[m - 1], m, opts), seeds[m - 1].lambda, std::nullopt};
    if (o.verbose) {
      err << "mode " << m << ": " << row.pair.iterations << " iterations, history";
      for (double v : row.pair.history) err << ' ' << num(v);
      err << "\n";
    }
    if (o.postprocess) row.star = postprocess(sys, recover_fields(sys, row.pair)).lambda_star;
    rows.push_back(std::move(row));
  }

  std::ostringstream os;
  switch (format) {
    case TableFormat::markdown:
      os << "# HDG eigenvalues\n\n" << describe(o, o.level, sys) << "\n\n";
      os << "| mode | lambda_h | lambda~_h | lambda*_h | iterations |\n|---|---|---|---|---|\n";
      for (const Row& r : rows)
        os << "| " << r.pair.mode << " | " << num(r.pair.lambda) << " | " << num(r.tilde) << " | "
           << (r.star ? num(*r.star) : "-") << " | " << r.pair.iterations << " |\n";
      break;
    case TableFormat::csv:
      os << "mode,lambda,lambda_tilde,lambda_star,iterations\n";
      for (const Row& r : rows)
        os << r.pair.mode << "," << num(r.pair.lambda) << "," << num(r.tilde) << "," << (r.star ? num(*r.star) : "")
           << "," << r.pair.iterations << "\n";
      break;
    case TableFormat::json: {
      nlohmann::json j = {{"domain", o.domain}, {"level", o.level},     {"k", o.k},
                          {"case", o.space_case}, {"tau", tau.label()}, {"trace_dofs", sys.size()}};
      j["modes"] = nlohmann::json::array();
      for (const Row& r : rows)
        j["modes"].push_back({{"mode", r.pair.mode},
                              {"lambda", r.pair.lambda},
                              {"lambda_tilde", r.tilde},
                              {"lambda_star", r.star ? nlohmann::json(*r.star) : nlohmann::json(nullptr)},
                              {"iterations", r.pair.iterations},
                              {"defect", r.pair.defect},
                              {"residual", r.pair.residual}});
      os << j.dump(2) << "\n";
      break;
    }
  }
  write_output(o, os.str(), out);
  return kExitOk;
}

int cmd_study(const CliOptions& o, std::ostream& out, std::ostream& err) {
  StudyConfig cfg;
  cfg.domain = parse_domain(o.domain);
  cfg.k = o.k;
  cfg.space_case = parse_space_case(o.space_case);
  cfg.tau = o.tau;
  std::tie(cfg.level_min, cfg.level_max) = parse_levels(o.levels);
  if (!o.modes.empty()) cfg.modes = o.modes;
  cfg.postprocess = o.postprocess;
  cfg.solver = solver_options(o);
  const TableFormat format = parse_format(o.format);
  cfg.validate();

  const ConvergenceReport report = run_convergence_study(cfg);
  if (o.verbose)
    for (const auto& l : report.levels)
      err << "level " << l.level << ": " << l.trace_dofs << " trace unknowns, " << num(l.seconds, "%.2f") << " s\n";
  write_output(o, emit_table(report, format), out);
  for (const auto& c : report.cells)
    if (!c.failure.empty()) {
      err << "error: mode " << c.mode << ", level " << c.level << ": " << c.failure << "\n";
      return kExitNumerical;
    }
  return kExitOk;
}

int cmd_oracle_check(const CliOptions& o, std::ostream& out, std::ostream&) {
  const Domain domain = parse_domain(o.domain);
  const SpaceConfig spaces = SpaceConfig::make(o.k, parse_space_case(o.space_case));
  const TauSpec tau = parse_tau(o.tau);
  validate(spaces, tau);
  if (o.level < 0 || o.level > 1) throw ConfigError("oracle-check is limited to levels 0 and 1");
  const std::vector<int> modes = mode_list(o.modes, 6);
  const NonlinearOptions opts = solver_options(o);

  CondensedSystem sys(build_mesh(domain, o.level), spaces, tau, MaterialSpec::isotropic());
  const int mmax = *std::max_element(modes.begin(), modes.end());
  const OracleSpectrum oracle = oracle_full_eig(sys, mmax);
  const auto seeds = solve_linear_surrogate(sys, mmax);

  std::ostringstream os;
  os << "# Oracle check\n\n" << describe(o, o.level, sys) << "\n\n";
  os << "| mode | condensed | oracle | relative difference |\n|---|---|---|---|\n";
  double worst = 0.0;
  for (int m : modes) {
    const double lam = solve_condensed_nonlinear(sys, seeds[m - 1], m, opts).lambda;
    const double ref = oracle.eigenvalues(m - 1);
    const double rel = std::abs(lam - ref) / std::abs(ref);
    worst = std::max(worst, rel);
    os << "| " << m << " | " << num(lam) << " | " << num(ref) << " | " << num(rel, "%.2e") << " |\n";
  }
  const bool ok = worst < 1e-9;
  os << "\n" << (ok ? "PASS" : "FAIL") << ": max relative difference " << num(worst, "%.2e") << " (tolerance 1e-9)\n";
  write_output(o, os.str(), out);
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliOptions o;
  CLI::App app{"HDG eigenvalue solver for -div(alpha grad u) = lambda u on 2D model domains", "hdgeig"};
  app.set_config("--config", "", "Key-value config file (keys are the long option names); flags win");
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--domain", o.domain, "square | lshape")->capture_default_str();
  app.add_option("--level", o.level, "Refinement level (solve, oracle-check)")->capture_default_str();
  app.add_option("--levels", o.levels, "Level range a:b (study)")->capture_default_str();
  app.add_option("--k", o.k, "Trace polynomial degree")->capture_default_str();
  app.add_option("--case", o.space_case, "equal | case1 | case2")->capture_default_str();
  app.add_option("--tau", o.tau, "one | h | invh | zero | const:<x>")->capture_default_str();
  app.add_option("--modes", o.modes,
                 "Modes: one value N selects 1..N (solve, oracle-check); a list selects modes (default 1,2,4,6 "
                 "for study)")
      ->delimiter(',');
  app.add_flag("--postprocess,!--no-postprocess", o.postprocess, "Compute u*, q* and lambda*")
      ->capture_default_str();
  app.add_option("--format", o.format, "markdown | csv | json")->capture_default_str();
  app.add_option("--output", o.output, "Write the report to this file instead of stdout");
  app.add_option("--threads", o.threads, "Worker threads (default $HDG_EIG_THREADS or 1)");
  app.add_option("--rel-tol", o.rel_tol, "Nonlinear iteration tolerance")->capture_default_str();
  app.add_option("--max-iter", o.max_iter, "Nonlinear iteration budget")->capture_default_str();
  app.add_flag("--verbose,-v", o.verbose, "Iteration diagnostics on stderr");

  auto* solve = app.add_subcommand("solve", "Eigenvalues on one mesh");
  auto* study = app.add_subcommand("study", "Convergence tables across levels");
  auto* oracle = app.add_subcommand("oracle-check", "Compare against the full-system solution-operator spectrum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (o.threads < 0) throw ConfigError("--threads must be non-negative");
    if (o.threads > 0) set_thread_count(o.threads);
    if (solve->parsed()) return cmd_solve(o, out, err);
    if (study->parsed()) return cmd_study(o, out, err);
    if (oracle->parsed()) return cmd_oracle_check(o, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace hdgeig
