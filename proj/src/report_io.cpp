#include <cstdio>
#include <sstream>

#include "hdgeig/error.hpp"
#include "hdgeig/study.hpp"
#include "json.hpp"

namespace hdgeig {

namespace {

using nlohmann::json;

constexpr Quantity kQuantities[] = {Quantity::lambda, Quantity::lambda_star, Quantity::u, Quantity::u_star,
                                    Quantity::gap};

std::string title(Quantity q) {
  switch (q) {
    case Quantity::lambda: return "|lambda - lambda_h|";
    case Quantity::lambda_star: return "|lambda - lambda*_h|";
    case Quantity::u: return "||u - u_h||";
    case Quantity::u_star: return "||u - u*_h||";
    case Quantity::gap: return "|lambda_h - lambda~_h|";
  }
  return "";
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string config_line(const StudyConfig& c) {
  std::ostringstream os;
  os << "domain " << to_string(c.domain) << ", k = " << c.k << ", case " << to_string(c.space_case) << ", tau "
     << parse_tau(c.tau).label() << ", levels " << c.level_min << ":" << c.level_max;
  return os.str();
}

void markdown(std::ostream& os, const ConvergenceReport& r) {
  os << "# HDG eigenvalue convergence\n\n" << config_line(r.config) << "\n";
  std::vector<Quantity> shown;
  for (Quantity q : kQuantities)
    if (r.has(q)) shown.push_back(q);
  if (shown.empty()) shown.push_back(Quantity::lambda);
  for (Quantity q : shown) {
    os << "\n## " << title(q) << "\n\n| level |";
    for (int m : r.config.modes) os << " mode " << m << " error | order |";
    os << "\n|---|";
    for (std::size_t i = 0; i < r.config.modes.size(); ++i) os << "---|---|";
    os << "\n";
    std::vector<std::vector<std::optional<double>>> err, ord;
    for (int m : r.config.modes) {
      err.push_back(r.errors(m, q));
      ord.push_back(r.orders(m, q));
    }
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
      os << "| " << r.levels[l].level << " |";
      for (std::size_t i = 0; i < r.config.modes.size(); ++i) {
        const CellResult* c = r.cell(r.config.modes[i], r.levels[l].level);
        if (err[i][l])
          os << " " << fmt("%.2e", *err[i][l]) << " |";
        else
          os << (c && !c->failure.empty() ? " fail |" : " - |");
        os << " " << (ord[i][l] ? fmt("%.2f", *ord[i][l]) : std::string("-")) << " |";
      }
      os << "\n";
    }
  }
  std::vector<const CellResult*> failed;
  for (const auto& c : r.cells)
    if (!c.failure.empty()) failed.push_back(&c);
  if (!failed.empty()) {
    os << "\n## Failures\n\n";
    for (const CellResult* c : failed) os << "- mode " << c->mode << ", level " << c->level << ": " << c->failure << "\n";
  }
}

void csv(std::ostream& os, const ConvergenceReport& r) {
  os << "k,level,elements,trace_dofs";
  for (int m : r.config.modes)
    for (Quantity q : kQuantities) os << ",mode" << m << "_" << to_string(q) << "_error,mode" << m << "_" << to_string(q) << "_order";
  os << "\n";
  for (std::size_t l = 0; l < r.levels.size(); ++l) {
    const LevelInfo& info = r.levels[l];
    os << r.config.k << "," << info.level << "," << info.elements << "," << info.trace_dofs;
    for (int m : r.config.modes) {
      for (Quantity q : kQuantities) {
        const auto e = r.errors(m, q)[l];
        const auto o = r.orders(m, q)[l];
        os << "," << (e ? fmt("%.6e", *e) : "") << "," << (o ? fmt("%.4f", *o) : "");
      }
    }
    os << "\n";
  }
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json to_json(const ConvergenceReport& r) {
  json j;
  const StudyConfig& c = r.config;
  j["config"] = {{"domain", std::string(to_string(c.domain))},
                 {"k", c.k},
                 {"case", std::string(to_string(c.space_case))},
                 {"tau", c.tau},
                 {"level_min", c.level_min},
                 {"level_max", c.level_max},
                 {"modes", c.modes},
                 {"postprocess", c.postprocess},
                 {"rel_tol", c.solver.rel_tol},
                 {"max_iter", c.solver.max_iter}};
  j["levels"] = json::array();
  for (const auto& l : r.levels)
    j["levels"].push_back({{"level", l.level},
                           {"elements", l.elements},
                           {"trace_dofs", l.trace_dofs},
                           {"seconds", l.seconds},
                           {"failure", l.failure}});
  j["cells"] = json::array();
  for (const auto& cell : r.cells)
    j["cells"].push_back({{"mode", cell.mode},
                          {"level", cell.level},
                          {"lambda", opt(cell.lambda)},
                          {"lambda_tilde", opt(cell.lambda_tilde)},
                          {"lambda_star", opt(cell.lambda_star)},
                          {"lambda_error", opt(cell.lambda_error)},
                          {"lambda_star_error", opt(cell.lambda_star_error)},
                          {"u_error", opt(cell.u_error)},
                          {"u_star_error", opt(cell.u_star_error)},
                          {"gap", opt(cell.gap)},
                          {"iterations", cell.iterations},
                          {"failure", cell.failure}});
  json orders = json::object();
  for (int m : c.modes)
    for (Quantity q : kQuantities) {
      json col = json::array();
      for (const auto& o : r.orders(m, q)) col.push_back(opt(o));
      orders["mode" + std::to_string(m)][std::string(to_string(q))] = col;
    }
  j["orders"] = orders;
  return j;
}

}  // namespace

TableFormat parse_format(std::string_view s) {
  if (s == "markdown" || s == "md") return TableFormat::markdown;
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  throw ConfigError("unknown output format '" + std::string(s) + "' (markdown|csv|json)");
}

std::string emit_table(const ConvergenceReport& report, TableFormat format) {
  std::ostringstream os;
  switch (format) {
    case TableFormat::markdown: markdown(os, report); break;
    case TableFormat::csv: csv(os, report); break;
    case TableFormat::json: os << to_json(report).dump(2) << "\n"; break;
  }
  return os.str();
}

ConvergenceReport parse_report_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ConvergenceReport r;
    const json& c = j.at("config");
    r.config.domain = parse_domain(c.at("domain").get<std::string>());
    r.config.k = c.at("k").get<int>();
    r.config.space_case = parse_space_case(c.at("case").get<std::string>());
    r.config.tau = c.at("tau").get<std::string>();
    r.config.level_min = c.at("level_min").get<int>();
    r.config.level_max = c.at("level_max").get<int>();
    r.config.modes = c.at("modes").get<std::vector<int>>();
    r.config.postprocess = c.at("postprocess").get<bool>();
    r.config.solver.rel_tol = c.at("rel_tol").get<double>();
    r.config.solver.max_iter = c.at("max_iter").get<int>();
    for (const json& l : j.at("levels"))
      r.levels.push_back({l.at("level").get<int>(), l.at("elements").get<int>(), l.at("trace_dofs").get<int>(),
                          l.at("seconds").get<double>(), l.at("failure").get<std::string>()});
    for (const json& x : j.at("cells")) {
      CellResult cell;
      cell.mode = x.at("mode").get<int>();
      cell.level = x.at("level").get<int>();
      cell.lambda = get_opt(x, "lambda");
      cell.lambda_tilde = get_opt(x, "lambda_tilde");
      cell.lambda_star = get_opt(x, "lambda_star");
      cell.lambda_error = get_opt(x, "lambda_error");
      cell.lambda_star_error = get_opt(x, "lambda_star_error");
      cell.u_error = get_opt(x, "u_error");
      cell.u_star_error = get_opt(x, "u_star_error");
      cell.gap = get_opt(x, "gap");
      cell.iterations = x.at("iterations").get<int>();
      cell.failure = x.at("failure").get<std::string>();
      r.cells.push_back(std::move(cell));
    }
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed report JSON: ") + ex.what());
  }
}

}  // namespace hdgeig
