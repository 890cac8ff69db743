#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace stochnav {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Enclosing spherical shell: beta_0(x) = r^2 - |x - c|^2, concave,
// nonnegative exactly on the workspace.
struct WorkspaceSphere {
  Vec center;
  double radius = 0.0;

  double value(const Vec& x) const {
    return radius * radius - (x - center).squaredNorm();
  }
  Vec gradient(const Vec& x) const { return -2.0 * (x - center); }
};

// beta_i(x) = |x - c|^2 - r^2. Hessian is 2I everywhere.
struct SphereObstacle {
  Vec center;
  double radius = 0.0;
};

// beta_i(x) = (x-c)' A (x-c) - mu_min(A) * r^2 with A symmetric positive
// definite; r is the largest semi-axis. Hessian is 2A.
struct EllipseObstacle {
  Vec center;
  Mat A;
  double scale = 0.0;   // r
  double mu_min_A = 0;  // smallest eigenvalue of A, cached

  // Validates symmetry (1e-12 relative) and positive definiteness.
  static EllipseObstacle make(Vec center, Mat A, double scale);

  double level() const { return mu_min_A * scale * scale; }
};

enum class EggAxis { Horizontal, Vertical };

// Planar egg: beta(x) = |x-c|^4 - 2 r (x - c)_axis^3. The boundary in polar
// coordinates about c is rho(t) = 2 r cos^3(t) (horizontal; sin^3 vertical).
// The enclosed region is convex but the Hessian of beta is indefinite on
// part of the exterior, so per-point queries are used where a global
// eigenvalue bound would be meaningless.
struct EggObstacle {
  Vec center;             // n = 2 only
  double tip = 0.0;       // r: boundary passes through c and c + 2r*axis
  EggAxis axis = EggAxis::Horizontal;
  double mu_min_boundary = 0.0;  // inf of Hessian min-eigenvalue over boundary samples
  Mat fit_A;                     // deterministic least-squares ellipse model
  Vec fit_center;
  double fit_r2 = 0.0;

  static EggObstacle make(Vec center, double tip, EggAxis axis);

  int axis_index() const { return axis == EggAxis::Horizontal ? 0 : 1; }
  // Boundary point at parameter t; horizontal uses t in (-pi/2, pi/2).
  Vec boundary_point(double t) const;
};

using Obstacle = std::variant<SphereObstacle, EllipseObstacle, EggObstacle>;

// f0(x) = (x - xstar)' Q (x - xstar) + fmin, Q symmetric positive definite.
struct QuadraticObjective {
  Vec xstar;
  Mat Q;
  double fmin = 0.0;
  double lambda_min = 0.0;  // extreme eigenvalues of Q (Hessian is 2Q)
  double lambda_max = 0.0;

  static QuadraticObjective make(Vec xstar, Mat Q, double fmin);

  double value(const Vec& x) const {
    const Vec u = x - xstar;
    return u.dot(Q * u) + fmin;
  }
  Vec gradient(const Vec& x) const { return 2.0 * (Q * (x - xstar)); }
  double hessian_ratio() const { return lambda_max / lambda_min; }
};

struct World {
  WorkspaceSphere workspace;
  std::vector<Obstacle> obstacles;
  QuadraticObjective objective;

  int dim() const { return static_cast<int>(workspace.center.size()); }
  int num_obstacles() const { return static_cast<int>(obstacles.size()); }
  // Indexed obstacle functions; index 0 is the workspace shell.
  int num_betas() const { return num_obstacles() + 1; }
  double beta(int i, const Vec& x) const;
  Vec beta_gradient(int i, const Vec& x) const;
};

struct Projection {
  Vec point;        // closest boundary point P
  double distance;  // |x - P|
  Vec normal;       // (x - P)/|x - P|
};

double obstacle_value(const Obstacle& o, const Vec& x);
Vec obstacle_gradient(const Obstacle& o, const Vec& x);
Mat obstacle_hessian(const Obstacle& o, const Vec& x);
double obstacle_hessian_min_eigenvalue(const Obstacle& o, const Vec& x);
// Per-obstacle constant used by the condition check: 2 for spheres,
// 2*lambda_min(A) for ellipses, boundary-sampled infimum for eggs (may be
// negative; see check_condition).
double obstacle_mu_min(const Obstacle& o);
// Characteristic magnitude of beta near the boundary, used for tolerances.
double obstacle_beta_scale(const Obstacle& o);

// Closest boundary point from a strictly exterior x. Throws "collision
// query" if x is inside or on the obstacle; throws on projection
// non-convergence with the residual in the message.
Projection project_to_obstacle(const Obstacle& o, const Vec& x);

// Radius of the osculating circle at boundary point P (n = 2, except
// spheres which work in any dimension). Throws if the implied curvature is
// not positive.
double boundary_curvature_radius(const Obstacle& o, const Vec& P);

// Deterministic boundary sample (count points). For n = 2 these trace the
// boundary by angle; spheres/ellipses in higher dimension use a seeded
// direction sample.
std::vector<Vec> obstacle_boundary_points(const Obstacle& o, int count,
                                          std::uint64_t seed = 0);

double beta_product(const World& w, const Vec& x);
Vec beta_product_gradient(const World& w, const Vec& x);

// Workspace-aware distance/projection, i = 0 is the shell.
Projection project_indexed(const World& w, int i, const Vec& x);
double distance_indexed(const World& w, int i, const Vec& x);
double curvature_radius_indexed(const World& w, int i, const Vec& P);
double min_clearance(const World& w, const Vec& x);

bool in_free_space(const World& w, const Vec& x);
bool in_free_space_interior(const World& w, const Vec& x);

struct ValidationReport {
  bool pass = false;
  std::vector<std::string> failures;
  // Margins (distances); +inf when not applicable.
  double min_pair_margin = 0.0;
  int worst_pair_i = -1, worst_pair_j = -1;
  double min_containment_margin = 0.0;
  double beta_at_xstar = 0.0;
  bool xstar_interior = false;
  bool objective_nonnegative = false;
};

// Checks Assumption-1 disjointness/containment by boundary sampling, that
// xstar lies in the free-space interior, and that f0(xstar) >= 0.
ValidationReport validate_world(const World& w, int samples);

}  // namespace stochnav
