#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hdgeig/eigensolve.hpp"
#include "hdgeig/mesh.hpp"

namespace hdgeig {

/// Reference eigenpair. Square modes carry (m, n) with
/// u = sin(m x) sin(n y); an eigenfunction is only available for simple modes.
struct ExactMode {
  Domain domain = Domain::square;
  int index = 1;  // 1-based, ascending with multiplicity
  double value = 0.0;
  int multiplicity = 1;
  int m = 0, n = 0;
  bool singular = false;  // eigenfunction not smooth (L-shape mode 1)

  bool has_eigenfunction() const { return domain == Domain::square && multiplicity == 1; }
  /// sin(m x) sin(n y) normalised to unit L2 norm on (0, pi)^2.
  double eigenfunction(const Point& p) const;
};

std::vector<ExactMode> exact_square_spectrum(int count);

struct LShapeValues {
  double mode1 = 0.0;
  double mode3 = 0.0;
};
LShapeValues exact_lshape_values();

/// Reference data for `mode` when the domain has it.
std::optional<ExactMode> exact_mode(Domain domain, int mode);

/// min over s = +-1 of || s u / ||u|| - u_exact ||, u given by per-element
/// coefficients in the ScalarBasis of `degree`.
double eigenfunction_error(const Mesh& mesh, int degree, const Eigen::MatrixXd& coeffs, const ExactMode& mode);

/// log2(e_{l-1} / e_l); empty for the first entry and for nonpositive errors.
std::vector<std::optional<double>> estimate_order(const std::vector<std::optional<double>>& errors);
std::vector<std::optional<double>> estimate_order(const std::vector<double>& errors);

struct StudyConfig {
  Domain domain = Domain::square;
  int k = 1;
  SpaceCase space_case = SpaceCase::equal;
  std::string tau = "one";  // parse_tau syntax
  int level_min = 0;
  int level_max = 3;
  std::vector<int> modes{1, 2, 4, 6};
  bool postprocess = true;
  NonlinearOptions solver{};

  void validate() const;
  bool operator==(const StudyConfig& o) const;
};

/// Result for one (mode, level) cell. Errors are absent when no reference is
/// available or the cell failed.
struct CellResult {
  int mode = 1;
  int level = 0;
  std::optional<double> lambda, lambda_tilde, lambda_star;
  std::optional<double> lambda_error, lambda_star_error, u_error, u_star_error, gap;
  int iterations = 0;
  std::string failure;

  bool operator==(const CellResult&) const = default;
};

struct LevelInfo {
  int level = 0;
  int elements = 0;
  int trace_dofs = 0;
  double seconds = 0.0;
  std::string failure;

  bool operator==(const LevelInfo&) const = default;
};

enum class Quantity { lambda, lambda_star, u, u_star, gap };
std::string_view to_string(Quantity q);

struct ConvergenceReport {
  StudyConfig config;
  std::vector<LevelInfo> levels;
  std::vector<CellResult> cells;  // level-major, modes in config order

  const CellResult* cell(int mode, int level) const;
  std::vector<std::optional<double>> errors(int mode, Quantity q) const;
  std::vector<std::optional<double>> orders(int mode, Quantity q) const { return estimate_order(errors(mode, q)); }
  bool has(Quantity q) const;
  bool operator==(const ConvergenceReport& o) const = default;
};

ConvergenceReport run_convergence_study(const StudyConfig& config);

enum class TableFormat { markdown, csv, json };
TableFormat parse_format(std::string_view s);

std::string emit_table(const ConvergenceReport& report, TableFormat format);
ConvergenceReport parse_report_json(std::string_view text);

}  // namespace hdgeig
