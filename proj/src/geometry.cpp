#include "stochnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stochnav/rng.hpp"

namespace stochnav {

namespace {

constexpr double kPi = std::numbers::pi;

double sq(double v) { return v * v; }

// Least-squares conic fit (x-c)'A(x-c) - r2 through sampled egg boundary
// points, rescaled so the average boundary gradient norm matches the egg's.
void fit_egg_ellipse(EggObstacle& egg) {
  const int n_pts = 256;
  Eigen::Matrix<double, Eigen::Dynamic, 6> M(n_pts, 6);
  std::vector<Vec> pts;
  pts.reserve(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    const double t = -kPi / 2 + kPi * (i + 0.5) / n_pts;
    const Vec p = egg.boundary_point(t);
    const Vec u = p - egg.center;
    M.row(i) << u[0] * u[0], 2.0 * u[0] * u[1], u[1] * u[1], u[0], u[1], 1.0;
    pts.push_back(p);
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinV);
  Eigen::Matrix<double, 6, 1> p = svd.matrixV().col(5);
  Mat A(2, 2);
  A << p[0], p[1], p[1], p[2];
  // Orient so A is positive definite (the fitted zero set is an ellipse).
  if (A.trace() < 0) {
    A = -A;
    p = -p;
  }
  const Vec b = p.segment(3, 2);
  const double c = p[5];
  const Vec center_local = A.ldlt().solve(-0.5 * b);
  double r2 = center_local.dot(A * center_local) - c;
  if (r2 <= 0) r2 = std::abs(r2) + 1e-12;
  // Match the mean boundary gradient magnitude of the true egg.
  double g_true = 0, g_fit = 0;
  for (const Vec& q : pts) {
    g_true += obstacle_gradient(egg, q).norm();
    g_fit += (2.0 * A * (q - egg.center - center_local)).norm();
  }
  const double s = g_fit > 0 ? g_true / g_fit : 1.0;
  egg.fit_A = s * A;
  egg.fit_center = egg.center + center_local;
  egg.fit_r2 = s * r2;
}

void sample_egg_mu_min(EggObstacle& egg) {
  const int n_pts = 10000;
  double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_pts; ++i) {
    const double t = -kPi / 2 + kPi * (i + 0.5) / n_pts;
    const Vec p = egg.boundary_point(t);
    const Mat h = obstacle_hessian(egg, p);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    inf = std::min(inf, es.eigenvalues().minCoeff());
  }
  egg.mu_min_boundary = inf;
}

struct Visitor {
  template <class F>
  static auto apply(const Obstacle& o, F&& f) {
    return std::visit(std::forward<F>(f), o);
  }
};

Projection sphere_projection(const Vec& center, double radius, const Vec& x,
                             double beta) {
  if (beta <= 0) throw std::runtime_error("collision query: point not strictly outside obstacle");
  const Vec u = x - center;
  const double rho = u.norm();
  Projection pr;
  pr.normal = u / rho;
  pr.point = center + radius * pr.normal;
  pr.distance = rho - radius;
  return pr;
}

Projection ellipse_projection(const EllipseObstacle& e, const Vec& x) {
  const double beta = obstacle_value(Obstacle{e}, x);
  if (beta <= 0) throw std::runtime_error("collision query: point not strictly outside obstacle");
  const int n = static_cast<int>(x.size());
  // Spherical special case: A = sigma I.
  const Mat dev = e.A - e.A.trace() / n * Mat::Identity(n, n);
  if (dev.norm() <= 1e-12 * e.A.norm()) {
    const double sigma = e.A.trace() / n;
    const double radius = std::sqrt(e.level() / sigma);
    return sphere_projection(e.center, radius, x, beta);
  }
  // Damped Newton on the KKT system {beta(P) = 0, x - P = t grad beta(P)},
  // initialized at the ray x -> center boundary crossing.
  const Vec u = x - e.center;
  const double q = u.dot(e.A * u);
  Vec P = e.center + std::sqrt(e.level() / q) * u;
  Vec g = 2.0 * (e.A * (P - e.center));
  double t = (x - P).norm() / g.norm();
  const double len_scale = std::sqrt((x - e.center).squaredNorm());
  const double beta_scale = e.level();
  auto residual = [&](const Vec& Pc, double tc) {
    const Vec gc = 2.0 * (e.A * (Pc - e.center));
    Vec F(n + 1);
    F.head(n) = x - Pc - tc * gc;
    F[n] = (Pc - e.center).dot(e.A * (Pc - e.center)) - e.level();
    return F;
  };
  auto scaled_norm = [&](const Vec& F) {
    return F.head(n).norm() / len_scale + std::abs(F[n]) / beta_scale;
  };
  Vec F = residual(P, t);
  for (int it = 0; it < 100; ++it) {
    if (scaled_norm(F) < 1e-12) break;
    g = 2.0 * (e.A * (P - e.center));
    Mat J(n + 1, n + 1);
    J.setZero();
    J.topLeftCorner(n, n) = -Mat::Identity(n, n) - t * 2.0 * e.A;
    J.topRightCorner(n, 1) = -g;
    J.bottomLeftCorner(1, n) = g.transpose();
    const Vec step = J.fullPivLu().solve(-F);
    double alpha = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      const Vec Pn = P + alpha * step.head(n);
      const double tn = t + alpha * step[n];
      const Vec Fn = residual(Pn, tn);
      if (scaled_norm(Fn) < (1.0 - 0.25 * alpha) * scaled_norm(F)) {
        P = Pn;
        t = tn;
        F = Fn;
        break;
      }
      alpha *= 0.5;
    }
  }
  if (scaled_norm(F) >= 1e-9) {
    throw std::runtime_error("ellipse projection did not converge, residual " +
                             std::to_string(scaled_norm(F)));
  }
  Projection pr;
  pr.point = P;
  pr.distance = (x - P).norm();
  pr.normal = (x - P) / pr.distance;
  return pr;
}

Projection egg_projection(const EggObstacle& egg, const Vec& x) {
  const double beta = obstacle_value(Obstacle{egg}, x);
  if (beta <= 0) throw std::runtime_error("collision query: point not strictly outside obstacle");
  // The boundary parametrization is closed-form, so project by minimizing
  // the distance over the parameter; grad beta vanishes at the bottom tip,
  // which rules out the KKT system there.
  auto dist2 = [&](double t) { return (x - egg.boundary_point(t)).squaredNorm(); };
  const int grid = 144;
  double best_t = 0, best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double t = -kPi / 2 + kPi * i / grid;
    const double v = dist2(t);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  double lo = best_t - kPi / grid, hi = best_t + kPi / grid;
  lo = std::max(lo, -kPi / 2);
  hi = std::min(hi, kPi / 2);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = dist2(c1), f2 = dist2(c2);
  for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = dist2(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = dist2(c2);
    }
  }
  Projection pr;
  pr.point = egg.boundary_point(0.5 * (a + b));
  pr.distance = (x - pr.point).norm();
  pr.normal = (x - pr.point) / pr.distance;
  return pr;
}

}  // namespace

EllipseObstacle EllipseObstacle::make(Vec center, Mat A, double scale) {
  if (scale <= 0) throw std::invalid_argument("ellipse scale must be positive");
  if (A.rows() != A.cols() || A.rows() != center.size())
    throw std::invalid_argument("ellipse matrix dimension mismatch");
  if ((A - A.transpose()).norm() > 1e-12 * std::max(1.0, A.norm()))
    throw std::invalid_argument("ellipse matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("ellipse matrix not positive definite");
  EllipseObstacle e;
  e.center = std::move(center);
  e.A = 0.5 * (A + A.transpose());
  e.scale = scale;
  e.mu_min_A = es.eigenvalues().minCoeff();
  return e;
}

Vec EggObstacle::boundary_point(double t) const {
  const double rho = 2.0 * tip * std::cos(t) * std::cos(t) * std::cos(t);
  Vec dir(2);
  if (axis == EggAxis::Horizontal)
    dir << std::cos(t), std::sin(t);
  else
    dir << -std::sin(t), std::cos(t);
  return center + rho * dir;
}

EggObstacle EggObstacle::make(Vec center, double tip, EggAxis axis) {
  if (center.size() != 2) throw std::invalid_argument("egg obstacles are planar");
  if (tip <= 0) throw std::invalid_argument("egg tip distance must be positive");
  EggObstacle egg;
  egg.center = std::move(center);
  egg.tip = tip;
  egg.axis = axis;
  fit_egg_ellipse(egg);
  sample_egg_mu_min(egg);
  return egg;
}

QuadraticObjective QuadraticObjective::make(Vec xstar, Mat Q, double fmin) {
  if (fmin < 0) throw std::invalid_argument("fmin must be nonnegative");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
    throw std::invalid_argument("objective matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(Q);
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("objective matrix not positive definite");
  QuadraticObjective f;
  f.xstar = std::move(xstar);
  f.Q = 0.5 * (Q + Q.transpose());
  f.fmin = fmin;
  f.lambda_min = es.eigenvalues().minCoeff();
  f.lambda_max = es.eigenvalues().maxCoeff();
  return f;
}

double World::beta(int i, const Vec& x) const {
  return i == 0 ? workspace.value(x) : obstacle_value(obstacles[i - 1], x);
}

Vec World::beta_gradient(int i, const Vec& x) const {
  return i == 0 ? workspace.gradient(x) : obstacle_gradient(obstacles[i - 1], x);
}

double obstacle_value(const Obstacle& o, const Vec& x) {
  return Visitor::apply(o, [&](const auto& s) -> double {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return (x - s.center).squaredNorm() - s.radius * s.radius;
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      const Vec u = x - s.center;
      return u.dot(s.A * u) - s.level();
    } else {
      const Vec u = x - s.center;
      const double a = u[s.axis_index()];
      return sq(u.squaredNorm()) - 2.0 * s.tip * a * a * a;
    }
  });
}

Vec obstacle_gradient(const Obstacle& o, const Vec& x) {
  return Visitor::apply(o, [&](const auto& s) -> Vec {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return 2.0 * (x - s.center);
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      return 2.0 * (s.A * (x - s.center));
    } else {
      const Vec u = x - s.center;
      const double a = u[s.axis_index()];
      Vec g = 4.0 * u.squaredNorm() * u;
      g[s.axis_index()] -= 6.0 * s.tip * a * a;
      return g;
    }
  });
}

Mat obstacle_hessian(const Obstacle& o, const Vec& x) {
  return Visitor::apply(o, [&](const auto& s) -> Mat {
    using T = std::decay_t<decltype(s)>;
    const int n = static_cast<int>(x.size());
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return 2.0 * Mat::Identity(n, n);
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      return 2.0 * s.A;
    } else {
      const Vec u = x - s.center;
      const double a = u[s.axis_index()];
      Mat h = 4.0 * u.squaredNorm() * Mat::Identity(n, n) +
              8.0 * (u * u.transpose());
      h(s.axis_index(), s.axis_index()) -= 12.0 * s.tip * a;
      return h;
    }
  });
}

double obstacle_hessian_min_eigenvalue(const Obstacle& o, const Vec& x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(obstacle_hessian(o, x));
  return es.eigenvalues().minCoeff();
}

double obstacle_mu_min(const Obstacle& o) {
  return Visitor::apply(o, [&](const auto& s) -> double {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return 2.0;
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      return 2.0 * s.mu_min_A;
    } else {
      return s.mu_min_boundary;
    }
  });
}

double obstacle_beta_scale(const Obstacle& o) {
  return Visitor::apply(o, [&](const auto& s) -> double {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return s.radius * s.radius;
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      return s.level();
    } else {
      return sq(sq(2.0 * s.tip));
    }
  });
}

Projection project_to_obstacle(const Obstacle& o, const Vec& x) {
  return Visitor::apply(o, [&](const auto& s) -> Projection {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, SphereObstacle>) {
      return sphere_projection(s.center, s.radius, x, obstacle_value(o, x));
    } else if constexpr (std::is_same_v<T, EllipseObstacle>) {
      return ellipse_projection(s, x);
    } else {
      return egg_projection(s, x);
    }
  });
}

double boundary_curvature_radius(const Obstacle& o, const Vec& P) {
  if (const auto* s = std::get_if<SphereObstacle>(&o)) return s->radius;
  if (P.size() != 2)
    throw std::invalid_argument("curvature queries require n = 2");
  const Vec g = obstacle_gradient(o, P);
  const Mat h = obstacle_hessian(o, P);
  const double denom = g[1] * g[1] * h(0, 0) - 2.0 * g[0] * g[1] * h(0, 1) +
                       g[0] * g[0] * h(1, 1);
  if (denom <= 0)
    throw std::runtime_error("non-positive boundary curvature: boundary not convex at query point");
  const double gn = g.norm();
  return gn * gn * gn / denom;
}

std::vector<Vec> obstacle_boundary_points(const Obstacle& o, int count,
                                          std::uint64_t seed) {
  std::vector<Vec> pts;
  pts.reserve(count);
  return Visitor::apply(o, [&](const auto& s) -> std::vector<Vec> {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, EggObstacle>) {
      for (int i = 0; i < count; ++i) {
        const double t = -kPi / 2 + kPi * (i + 0.5) / count;
        pts.push_back(s.boundary_point(t));
      }
      return pts;
    } else {
      const int n = static_cast<int>(s.center.size());
      auto push_direction = [&](const Vec& dir) {
        if constexpr (std::is_same_v<T, SphereObstacle>) {
          pts.push_back(s.center + s.radius * dir);
        } else {
          const double t = std::sqrt(s.level() / dir.dot(s.A * dir));
          pts.push_back(s.center + t * dir);
        }
      };
      if (n == 2) {
        for (int i = 0; i < count; ++i) {
          const double t = 2.0 * kPi * i / count;
          push_direction(vec2(std::cos(t), std::sin(t)));
        }
      } else {
        KeyedRng rng(seed, {0x626f756e64ULL});
        for (int i = 0; i < count; ++i) {
          Vec dir = rng.next_gaussian_vec(n);
          dir.normalize();
          push_direction(dir);
        }
      }
      return pts;
    }
  });
}

double beta_product(const World& w, const Vec& x) {
  double p = w.workspace.value(x);
  for (const auto& o : w.obstacles) p *= obstacle_value(o, x);
  return p;
}

Vec beta_product_gradient(const World& w, const Vec& x) {
  const int m = w.num_betas();
  std::vector<double> vals(m);
  std::vector<Vec> grads(m);
  for (int i = 0; i < m; ++i) {
    vals[i] = w.beta(i, x);
    grads[i] = w.beta_gradient(i, x);
  }
  Vec g = Vec::Zero(x.size());
  for (int i = 0; i < m; ++i) {
    double rest = 1.0;
    for (int j = 0; j < m; ++j)
      if (j != i) rest *= vals[j];
    g += rest * grads[i];
  }
  return g;
}

Projection project_indexed(const World& w, int i, const Vec& x) {
  if (i == 0) {
    const Vec u = x - w.workspace.center;
    const double rho = u.norm();
    if (rho >= w.workspace.radius)
      throw std::runtime_error("collision query: point not inside workspace");
    Projection pr;
    Vec dir = rho > 0 ? Vec(u / rho) : Vec(Vec::Unit(x.size(), 0));
    pr.point = w.workspace.center + w.workspace.radius * dir;
    pr.distance = w.workspace.radius - rho;
    pr.normal = (x - pr.point) / pr.distance;
    return pr;
  }
  return project_to_obstacle(w.obstacles[i - 1], x);
}

double distance_indexed(const World& w, int i, const Vec& x) {
  if (i == 0) return w.workspace.radius - (x - w.workspace.center).norm();
  return project_to_obstacle(w.obstacles[i - 1], x).distance;
}

double curvature_radius_indexed(const World& w, int i, const Vec& P) {
  if (i == 0) return w.workspace.radius;
  return boundary_curvature_radius(w.obstacles[i - 1], P);
}

double min_clearance(const World& w, const Vec& x) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < w.num_betas(); ++i)
    d = std::min(d, distance_indexed(w, i, x));
  return d;
}

bool in_free_space(const World& w, const Vec& x) {
  if (w.workspace.value(x) < 0) return false;
  for (const auto& o : w.obstacles)
    if (obstacle_value(o, x) < 0) return false;
  return true;
}

bool in_free_space_interior(const World& w, const Vec& x) {
  if (w.workspace.value(x) <= 0) return false;
  for (const auto& o : w.obstacles)
    if (obstacle_value(o, x) <= 0) return false;
  return true;
}

ValidationReport validate_world(const World& w, int samples) {
  if (samples < 1000) throw std::invalid_argument("validate_world needs at least 1e3 samples");
  ValidationReport rep;
  rep.min_pair_margin = std::numeric_limits<double>::infinity();
  rep.min_containment_margin = std::numeric_limits<double>::infinity();
  const int m = w.num_obstacles();
  std::vector<std::vector<Vec>> boundary(m);
  for (int i = 0; i < m; ++i)
    boundary[i] = obstacle_boundary_points(w.obstacles[i], samples, 1234 + i);

  for (int i = 0; i < m; ++i) {
    for (const Vec& p : boundary[i]) {
      const double margin0 = w.workspace.radius - (p - w.workspace.center).norm();
      rep.min_containment_margin = std::min(rep.min_containment_margin, margin0);
      if (margin0 <= 0) {
        rep.failures.push_back("obstacle " + std::to_string(i + 1) +
                               " not contained in workspace interior");
        break;
      }
    }
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      for (const Vec& p : boundary[i]) {
        if (obstacle_value(w.obstacles[j], p) <= 0) {
          rep.failures.push_back("obstacles intersect: " + std::to_string(i + 1) +
                                 " and " + std::to_string(j + 1));
          if (rep.min_pair_margin > 0) {
            rep.min_pair_margin = 0;
            rep.worst_pair_i = i + 1;
            rep.worst_pair_j = j + 1;
          }
          break;
        }
        const double dj = project_to_obstacle(w.obstacles[j], p).distance;
        if (dj < rep.min_pair_margin) {
          rep.min_pair_margin = dj;
          rep.worst_pair_i = i + 1;
          rep.worst_pair_j = j + 1;
        }
      }
    }
  }

  rep.beta_at_xstar = beta_product(w, w.objective.xstar);
  rep.xstar_interior = in_free_space_interior(w, w.objective.xstar);
  if (!rep.xstar_interior)
    rep.failures.push_back("objective minimum not in free-space interior");
  rep.objective_nonnegative = w.objective.fmin >= 0;
  if (!rep.objective_nonnegative)
    rep.failures.push_back("objective minimum value negative");
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace stochnav
