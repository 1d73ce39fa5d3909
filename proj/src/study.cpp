#include "hdgeig/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "hdgeig/error.hpp"
#include "hdgeig/quadrature.hpp"
#include "hdgeig/recovery.hpp"

namespace hdgeig {

double ExactMode::eigenfunction(const Point& p) const {
  return std::sin(m * p.x()) * std::sin(n * p.y()) / (std::numbers::pi / 2);
}

std::vector<ExactMode> exact_square_spectrum(int count) {
  if (count < 1) throw ConfigError("spectrum size must be positive");
  // Every value <= bound appears once m, n range up to sqrt(bound).
  int bound = 2;
  std::vector<ExactMode> all;
  for (;;) {
    all.clear();
    const int top = static_cast<int>(std::sqrt(static_cast<double>(bound))) + 1;
    for (int m = 1; m <= top; ++m)
      for (int n = 1; n <= top; ++n)
        if (m * m + n * n <= bound) all.push_back({Domain::square, 0, double(m * m + n * n), 1, m, n, false});
    if (static_cast<int>(all.size()) >= count) break;
    bound *= 2;
  }
  std::sort(all.begin(), all.end(), [](const ExactMode& a, const ExactMode& b) {
    return a.value != b.value ? a.value < b.value : a.m < b.m;
  });
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].index = static_cast<int>(i) + 1;
    all[i].multiplicity = static_cast<int>(
        std::count_if(all.begin(), all.end(), [&](const ExactMode& o) { return o.value == all[i].value; }));
  }
  all.resize(count);
  return all;
}

LShapeValues exact_lshape_values() { return {9.63972384464540, 2.0 * std::numbers::pi * std::numbers::pi}; }

std::optional<ExactMode> exact_mode(Domain domain, int mode) {
  if (mode < 1) return std::nullopt;
  if (domain == Domain::square) return exact_square_spectrum(mode).back();
  const LShapeValues v = exact_lshape_values();
  if (mode == 1) return ExactMode{Domain::lshape, 1, v.mode1, 1, 0, 0, true};
  if (mode == 3) return ExactMode{Domain::lshape, 3, v.mode3, 1, 1, 1, false};
  return std::nullopt;
}

double eigenfunction_error(const Mesh& mesh, int degree, const Eigen::MatrixXd& coeffs, const ExactMode& mode) {
  if (!mode.has_eigenfunction())
    throw ConfigError("unsupported: mode " + std::to_string(mode.index) + " has no closed-form eigenfunction");
  const ScalarBasis<> basis(degree);
  if (coeffs.rows() != basis.size() || coeffs.cols() != mesh.num_elements())
    throw ConfigError("coefficient array does not match the mesh and degree");
  const auto rule = triangle_quadrature(12);
  std::vector<Eigen::VectorXd> phi(rule.size());
  for (Eigen::Index q = 0; q < rule.size(); ++q) phi[q] = basis.values(rule.point(q));

  double norm2 = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto map = AffineMap<double>::from_vertices(mesh.vertex(e, 0), mesh.vertex(e, 1), mesh.vertex(e, 2));
    for (Eigen::Index q = 0; q < rule.size(); ++q) {
      const double v = phi[q].dot(coeffs.col(e));
      norm2 += rule.weights(q) * std::abs(map.det) * v * v;
    }
  }
  if (!(norm2 > 0.0)) throw NumericalError("eigenfunction error: discrete field vanishes");
  const double inv = 1.0 / std::sqrt(norm2);
  double plus = 0.0, minus = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto map = AffineMap<double>::from_vertices(mesh.vertex(e, 0), mesh.vertex(e, 1), mesh.vertex(e, 2));
    for (Eigen::Index q = 0; q < rule.size(); ++q) {
      const double w = rule.weights(q) * std::abs(map.det);
      const double v = inv * phi[q].dot(coeffs.col(e));
      const double ex = mode.eigenfunction(map.to_physical(rule.point(q)));
      plus += w * (v - ex) * (v - ex);
      minus += w * (v + ex) * (v + ex);
    }
  }
  return std::sqrt(std::min(plus, minus));
}

std::vector<std::optional<double>> estimate_order(const std::vector<std::optional<double>>& errors) {
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const auto& a = errors[i - 1];
    const auto& b = errors[i];
    if (a && b && *a > 0.0 && *b > 0.0) out[i] = std::log2(*a / *b);
  }
  return out;
}

std::vector<std::optional<double>> estimate_order(const std::vector<double>& errors) {
  return estimate_order(std::vector<std::optional<double>>(errors.begin(), errors.end()));
}

void StudyConfig::validate() const {
  if (level_min < 0 || level_max < level_min)
    throw ConfigError("invalid level range " + std::to_string(level_min) + ":" + std::to_string(level_max));
  if (level_max > 6) throw ConfigError("levels above 6 are not supported");
  if (modes.empty()) throw ConfigError("no modes requested");
  for (int m : modes)
    if (m < 1) throw ConfigError("mode indices are 1-based");
  if (!(solver.rel_tol > 0.0) || solver.max_iter < 1) throw ConfigError("invalid solver tolerances");
  hdgeig::validate(SpaceConfig::make(k, space_case), parse_tau(tau));
}

bool StudyConfig::operator==(const StudyConfig& o) const {
  return domain == o.domain && k == o.k && space_case == o.space_case && tau == o.tau && level_min == o.level_min &&
         level_max == o.level_max && modes == o.modes && postprocess == o.postprocess &&
         solver.rel_tol == o.solver.rel_tol && solver.max_iter == o.solver.max_iter;
}

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::lambda: return "lambda";
    case Quantity::lambda_star: return "lambda_star";
    case Quantity::u: return "u";
    case Quantity::u_star: return "u_star";
    case Quantity::gap: return "gap";
  }
  return "?";
}

const CellResult* ConvergenceReport::cell(int mode, int level) const {
  for (const auto& c : cells)
    if (c.mode == mode && c.level == level) return &c;
  return nullptr;
}

std::vector<std::optional<double>> ConvergenceReport::errors(int mode, Quantity q) const {
  std::vector<std::optional<double>> out;
  for (const auto& info : levels) {
    const CellResult* c = cell(mode, info.level);
    if (!c) {
      out.emplace_back();
      continue;
    }
    switch (q) {
      case Quantity::lambda: out.push_back(c->lambda_error); break;
      case Quantity::lambda_star: out.push_back(c->lambda_star_error); break;
      case Quantity::u: out.push_back(c->u_error); break;
      case Quantity::u_star: out.push_back(c->u_star_error); break;
      case Quantity::gap: out.push_back(c->gap); break;
    }
  }
  return out;
}

bool ConvergenceReport::has(Quantity q) const {
  for (int m : config.modes)
    for (const auto& e : errors(m, q))
      if (e) return true;
  return false;
}

ConvergenceReport run_convergence_study(const StudyConfig& config) {
  config.validate();
  const SpaceConfig spaces = SpaceConfig::make(config.k, config.space_case);
  const TauSpec tau = parse_tau(config.tau);
  const int mmax = *std::max_element(config.modes.begin(), config.modes.end());

  ConvergenceReport report;
  report.config = config;
  for (int level = config.level_min; level <= config.level_max; ++level) {
    const auto start = std::chrono::steady_clock::now();
    LevelInfo info;
    info.level = level;
    std::vector<CellResult> cells;
    for (int m : config.modes) {
      CellResult cell;
      cell.mode = m;
      cell.level = level;
      cells.push_back(cell);
    }
    try {
      CondensedSystem sys(build_mesh(config.domain, level), spaces, tau, MaterialSpec::isotropic());
      info.elements = sys.mesh().num_elements();
      info.trace_dofs = sys.size();
      const auto seeds = solve_linear_surrogate(sys, mmax);
      for (auto& cell : cells) {
        try {
          const SurrogatePair& seed = seeds[cell.mode - 1];
          const EigenPair pair = solve_condensed_nonlinear(sys, seed, cell.mode, config.solver);
          cell.lambda = pair.lambda;
          cell.lambda_tilde = seed.lambda;
          cell.iterations = pair.iterations;
          cell.gap = std::abs(pair.lambda - seed.lambda);
          const auto exact = exact_mode(config.domain, cell.mode);
          if (exact) cell.lambda_error = std::abs(pair.lambda - exact->value);
          const bool with_u = exact && exact->has_eigenfunction();
          if (!config.postprocess && !with_u) continue;
          const RecoveredFields fields = recover_fields(sys, pair);
          if (with_u) cell.u_error = eigenfunction_error(sys.mesh(), spaces.kw, fields.u, *exact);
          if (config.postprocess) {
            const PostprocessedFields pp = postprocess(sys, fields);
            cell.lambda_star = pp.lambda_star;
            if (exact) cell.lambda_star_error = std::abs(pp.lambda_star - exact->value);
            if (with_u) cell.u_star_error = eigenfunction_error(sys.mesh(), spaces.k + 1, pp.u_star, *exact);
          }
        } catch (const std::exception& ex) {
          cell.failure = ex.what();
        }
      }
    } catch (const std::exception& ex) {
      info.failure = ex.what();
      for (auto& cell : cells) cell.failure = ex.what();
    }
    info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.levels.push_back(info);
    report.cells.insert(report.cells.end(), cells.begin(), cells.end());
  }
  return report;
}

}  // namespace hdgeig
