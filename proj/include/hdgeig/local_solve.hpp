#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "hdgeig/basis.hpp"
#include "hdgeig/mesh.hpp"

namespace hdgeig {

enum class SpaceCase { equal, case1, case2 };

std::string_view to_string(SpaceCase c);
SpaceCase parse_space_case(std::string_view s);

/// Polynomial degrees: trace k, interior scalar kw, interior flux kv.
struct SpaceConfig {
  int k = 1;
  SpaceCase kind = SpaceCase::equal;
  int kw = 1;
  int kv = 1;

  static SpaceConfig make(int k, SpaceCase kind = SpaceCase::equal);

  int trace_dim() const { return k + 1; }
  int local_trace_dim() const { return 3 * (k + 1); }
  int w_dim() const { return scalar_dim(kw); }
  int v_dim() const { return vector_dim(kv); }
  int max_degree() const { return std::max({k, kw, kv}); }
};

enum class TauVariant { constant, global_h, inverse_global_h, zero };

/// Stabilisation choice. `global_h` / `inverse_global_h` scale with the mesh
/// spacing (shortest edge; the leg length on the model meshes) unless
/// `use_local_h` is set, in which case the element diameter h_K is used.
struct TauSpec {
  TauVariant variant = TauVariant::constant;
  double value = 1.0;
  bool use_local_h = false;

  static TauSpec constant(double v) { return {TauVariant::constant, v, false}; }
  static TauSpec one() { return constant(1.0); }
  static TauSpec h() { return {TauVariant::global_h, 0.0, false}; }
  static TauSpec inverse_h() { return {TauVariant::inverse_global_h, 0.0, false}; }
  static TauSpec zero() { return {TauVariant::zero, 0.0, false}; }

  /// Branch values [tau]_K on the three faces of `element`.
  std::array<double, 3> face_values(const Mesh& mesh, int element) const;
  TauSpec scaled(double s) const;
  std::string label() const;
};

/// Parses `one|h|invh|zero|const:<x>`.
TauSpec parse_tau(std::string_view s);

/// Constant SPD coefficient alpha and its inverse c.
struct MaterialSpec {
  Eigen::Matrix2d alpha = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d c = Eigen::Matrix2d::Identity();

  static MaterialSpec isotropic(double a = 1.0);
  static MaterialSpec from_alpha(const Eigen::Matrix2d& alpha);
  MaterialSpec scaled(double s) const { return from_alpha(s * alpha); }
};

/// Throws ConfigError when the tau choice violates the unique-solvability
/// condition of the chosen space case.
void validate(const SpaceConfig& spaces, const TauSpec& tau);

struct ElementGeometry {
  AffineMap<double> map;
  std::array<Eigen::Vector2d, 3> normals;  // outward unit normals per face
  std::array<double, 3> lengths;
  std::array<bool, 3> flipped{};  // face parameter runs against the edge direction
  double area = 0.0;
  double diameter = 0.0;
};

ElementGeometry element_geometry(const Mesh& mesh, int element);

/// Reference-triangle coordinates of the point at parameter s on local face f.
Eigen::Vector2d face_point(int face, double s);

/// Element-local operators. Trace columns are face-major: local trace dof
/// f*(k+1)+a is edge-basis function a on face f (in the global edge
/// direction). Load operators act on W_h(K) coefficient vectors.
struct LiftOperators {
  Eigen::MatrixXd q_trace;   // Q mu_j
  Eigen::MatrixXd u_trace;   // U mu_j
  Eigen::MatrixXd q_moment;  // Q^W, input = moments (f, phi_i)_K
  Eigen::MatrixXd u_moment;  // U^W, input = moments
  Eigen::MatrixXd q_load;    // Q^W, input = W_h(K) coefficients
  Eigen::MatrixXd u_load;    // U^W, input = W_h(K) coefficients
  Eigen::MatrixXd mass_w;    // (phi_j, phi_i)_K
  Eigen::MatrixXd a_local;   // a_h restricted to the element's trace dofs
  Eigen::MatrixXd g_local;   // (U mu_j, U mu_i)_K
  Eigen::FullPivLU<Eigen::MatrixXd> saddle;
};

struct LocalLift {
  int element = -1;
  std::shared_ptr<const LiftOperators> ops;

  const LiftOperators* operator->() const { return ops.get(); }
};

/// Solves the local saddle systems on one element.
LiftOperators compute_lift(const ElementGeometry& geom, const SpaceConfig& spaces,
                           const std::array<double, 3>& tau, const MaterialSpec& mat,
                           int element_id = -1);

LocalLift element_lift(const Mesh& mesh, int element, const SpaceConfig& spaces,
                       const TauSpec& tau, const MaterialSpec& mat);

/// Shares LiftOperators between translated copies of the same element.
class LiftCache {
 public:
  LiftCache(const SpaceConfig& spaces, const TauSpec& tau, const MaterialSpec& mat)
      : spaces_(spaces), tau_(tau), mat_(mat) {}

  LocalLift get(const Mesh& mesh, int element);
  std::size_t classes() const { return cache_.size(); }

 private:
  SpaceConfig spaces_;
  TauSpec tau_;
  MaterialSpec mat_;
  std::mutex mutex_;
  std::map<std::vector<long long>, std::shared_ptr<const LiftOperators>> cache_;
};

/// (I - lambda U^W)^{-1} on W_h(K), dense. Throws NumericalError when the
/// matrix is singular or its condition estimate exceeds 1e12.
Eigen::MatrixXd uw_resolvent(const LocalLift& lift, double lambda);

/// x with (I - lambda U^W) x = w.
Eigen::VectorXd apply_uw_inverse(const LocalLift& lift, double lambda, const Eigen::VectorXd& w);

}  // namespace hdgeig
