#include "stochnav/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stochnav {

namespace {

constexpr double kPi = std::numbers::pi;

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double world_beta_tolerance(const World& w) {
  double s = w.workspace.radius * w.workspace.radius;
  for (const auto& o : w.obstacles) s *= obstacle_beta_scale(o);
  return 1e-12 * s;
}

// Continuous boundary parametrization, t in [0, 1), for n = 2 refinement.
Vec boundary_param(const Obstacle& o, double t) {
  if (const auto* egg = std::get_if<EggObstacle>(&o))
    return egg->boundary_point(-kPi / 2 + kPi * t);
  const double ang = 2.0 * kPi * t;
  const Vec dir = vec2(std::cos(ang), std::sin(ang));
  if (const auto* s = std::get_if<SphereObstacle>(&o))
    return s->center + s->radius * dir;
  const auto& e = std::get<EllipseObstacle>(o);
  return e.center + std::sqrt(e.level() / dir.dot(e.A * dir)) * dir;
}

Mat fd_descent_jacobian(const World& w, const PotentialSpec& spec, const Vec& x,
                        double step) {
  const int n = static_cast<int>(x.size());
  Mat J(n, n);
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    J.col(j) = (descent_direction(w, spec, xp) - descent_direction(w, spec, xm)) /
               (2.0 * step);
  }
  return J;
}

}  // namespace

PotentialSpec PotentialSpec::rk(double k) {
  if (k <= 0) throw std::invalid_argument("order parameter must be positive");
  return PotentialSpec{PotentialKind::RimonKoditschek, k};
}

PotentialSpec PotentialSpec::log_barrier(double k) {
  if (k <= 0) throw std::invalid_argument("order parameter must be positive");
  return PotentialSpec{PotentialKind::LogBarrier, k};
}

double phi(const World& w, const PotentialSpec& spec, const Vec& x) {
  const double f0 = w.objective.value(x);
  double beta = beta_product(w, x);
  if (spec.kind == PotentialKind::LogBarrier) {
    if (beta <= 0) throw std::runtime_error("outside free space");
    return f0 - std::log(beta) / spec.k;
  }
  if (beta < -world_beta_tolerance(w)) throw std::runtime_error("outside free space");
  beta = std::max(beta, 0.0);
  if (f0 == 0.0) return 0.0;
  const double lse = log_sum_exp(spec.k * std::log(f0), std::log(beta));
  return std::exp(std::log(f0) - lse / spec.k);
}

Vec phi_gradient(const World& w, const PotentialSpec& spec, const Vec& x) {
  const double f0 = w.objective.value(x);
  const Vec gf = w.objective.gradient(x);
  const double beta = beta_product(w, x);
  const Vec gb = beta_product_gradient(w, x);
  if (spec.kind == PotentialKind::LogBarrier) {
    if (beta <= 0) throw std::runtime_error("outside free space");
    return gf - gb / (spec.k * beta);
  }
  if (beta <= 0) throw std::runtime_error("outside free space");
  if (f0 == 0.0) return std::pow(beta, -1.0 / spec.k) * gf;
  const double lse = log_sum_exp(spec.k * std::log(f0), std::log(beta));
  const double factor = std::exp(-(1.0 + 1.0 / spec.k) * lse);
  return factor * (beta * gf - (f0 / spec.k) * gb);
}

Vec descent_direction(const World& w, const PotentialSpec& spec, const Vec& x) {
  const double f0 = w.objective.value(x);
  const Vec gf = w.objective.gradient(x);
  const double beta = beta_product(w, x);
  const Vec gb = beta_product_gradient(w, x);
  if (spec.kind == PotentialKind::LogBarrier)
    return beta * gf - gb / spec.k;
  return beta * gf - (f0 / spec.k) * gb;
}

double descent_scale_log(const World& w, const PotentialSpec& spec, const Vec& x) {
  const double beta = beta_product(w, x);
  if (beta <= 0) throw std::runtime_error("outside free space");
  if (spec.kind == PotentialKind::LogBarrier) return std::log(beta);
  const double f0 = w.objective.value(x);
  const double lf = f0 > 0 ? spec.k * std::log(f0)
                           : -std::numeric_limits<double>::infinity();
  return (1.0 + 1.0 / spec.k) * log_sum_exp(lf, std::log(beta));
}

double descent_local_scale(const World& w, const PotentialSpec& spec, const Vec& x) {
  const double f0 = w.objective.value(x);
  const double beta = std::abs(beta_product(w, x));
  const double gf = w.objective.gradient(x).norm();
  const double gb = beta_product_gradient(w, x).norm();
  const double second =
      spec.kind == PotentialKind::LogBarrier ? gb / spec.k : f0 * gb / spec.k;
  return beta * gf + second + std::numeric_limits<double>::min();
}

ConditionReport check_condition(const World& w, int boundary_samples) {
  if (boundary_samples < 1000)
    throw std::invalid_argument("check_condition needs at least 1e3 boundary samples per obstacle");
  const Vec& xstar = w.objective.xstar;
  for (const auto& o : w.obstacles)
    if (obstacle_value(o, xstar) <= 0)
      throw std::runtime_error("objective minimum inside an obstacle");

  ConditionReport rep;
  rep.n_cond = std::numeric_limits<double>::infinity();
  const double ratio = w.objective.hessian_ratio();
  for (int i = 0; i < w.num_obstacles(); ++i) {
    const Obstacle& o = w.obstacles[i];
    auto h = [&](const Vec& xs) {
      const Vec d = xs - xstar;
      return obstacle_gradient(o, xs).dot(d) / d.squaredNorm();
    };
    double best_t = 0, best_v = -std::numeric_limits<double>::infinity();
    Vec best_p;
    const bool planar = w.dim() == 2;
    if (planar) {
      for (int s = 0; s < boundary_samples; ++s) {
        const double t = (s + 0.5) / boundary_samples;
        const Vec p = boundary_param(o, t);
        const double v = h(p);
        if (v > best_v) {
          best_v = v;
          best_t = t;
          best_p = p;
        }
      }
      // Golden-section refinement around the best coarse cell.
      double a = best_t - 1.0 / boundary_samples;
      double b = best_t + 1.0 / boundary_samples;
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
      double f1 = h(boundary_param(o, c1)), f2 = h(boundary_param(o, c2));
      for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        if (f1 > f2) {
          b = c2; c2 = c1; f2 = f1;
          c1 = b - gr * (b - a);
          f1 = h(boundary_param(o, c1));
        } else {
          a = c1; c1 = c2; f1 = f2;
          c2 = a + gr * (b - a);
          f2 = h(boundary_param(o, c2));
        }
      }
      best_p = boundary_param(o, 0.5 * (a + b));
      best_v = std::max(best_v, h(best_p));
    } else {
      for (const Vec& p : obstacle_boundary_points(o, boundary_samples, 77 + i)) {
        const double v = h(p);
        if (v > best_v) {
          best_v = v;
          best_p = p;
        }
      }
    }
    ConditionEntry e;
    e.obstacle = i + 1;
    e.worst_ratio_free = best_v;
    e.worst_lhs = ratio * best_v;
    e.mu_min = obstacle_mu_min(o);
    e.margin = e.mu_min - e.worst_lhs;
    e.pass = e.worst_lhs < e.mu_min;
    e.admissible_ratio = best_v > 0 ? e.mu_min / best_v
                                    : std::numeric_limits<double>::infinity();
    e.worst_point = best_p;
    rep.n_cond = std::min(rep.n_cond, e.admissible_ratio);
    rep.per_obstacle.push_back(std::move(e));
  }
  rep.pass = std::all_of(rep.per_obstacle.begin(), rep.per_obstacle.end(),
                         [](const ConditionEntry& e) { return e.pass; });
  return rep;
}

std::string to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::Minimum: return "minimum";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::Maximum: return "maximum";
    default: return "degenerate";
  }
}

std::vector<CriticalPoint> find_critical_points(const World& w,
                                                const PotentialSpec& spec,
                                                const std::vector<Vec>& seeds) {
  const double fd_step = 1e-6 * w.workspace.radius;
  std::vector<Vec> roots;
  for (const Vec& seed : seeds) {
    if (!in_free_space_interior(w, seed)) continue;
    Vec x = seed;
    Vec g = descent_direction(w, spec, x);
    bool ok = false;
    for (int it = 0; it < 80; ++it) {
      const double scale = descent_local_scale(w, spec, x);
      if (g.norm() <= 1e-12 * scale) {
        ok = true;
        break;
      }
      const Mat J = fd_descent_jacobian(w, spec, x, fd_step);
      const Vec step = J.fullPivLu().solve(-g);
      if (!step.allFinite()) break;
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 50; ++ls) {
        const Vec xn = x + alpha * step;
        if (in_free_space_interior(w, xn)) {
          const Vec gn = descent_direction(w, spec, xn);
          if (gn.norm() < (1.0 - 0.25 * alpha) * g.norm()) {
            x = xn;
            g = gn;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    if (!ok && g.norm() <= 1e-9 * descent_local_scale(w, spec, x)) ok = true;
    if (!ok) continue;
    const double dedupe = std::max(1e-6, 1e-9 * w.workspace.radius);
    bool dup = false;
    for (const Vec& r : roots)
      if ((r - x).norm() < dedupe) dup = true;
    if (!dup) roots.push_back(x);
  }

  std::vector<CriticalPoint> out;
  for (const Vec& r : roots) {
    const Mat J = fd_descent_jacobian(w, spec, r, fd_step);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (J + J.transpose()));
    const Vec ev = es.eigenvalues();
    CriticalPoint cp;
    cp.x = r;
    cp.jacobian_eigenvalues = ev;
    const double emax = ev.cwiseAbs().maxCoeff();
    if (emax == 0 || ev.cwiseAbs().minCoeff() < 1e-8 * emax) {
      cp.kind = CriticalKind::Degenerate;
    } else if (ev.minCoeff() > 0) {
      cp.kind = CriticalKind::Minimum;
    } else if (ev.maxCoeff() < 0) {
      cp.kind = CriticalKind::Maximum;
    } else {
      cp.kind = CriticalKind::Saddle;
    }
    out.push_back(std::move(cp));
  }
  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    return a.x[0] < b.x[0];
  });
  return out;
}

std::vector<Vec> default_critical_seeds(const World& w, int grid) {
  std::vector<Vec> seeds;
  const Vec& xstar = w.objective.xstar;
  seeds.push_back(xstar);
  for (const auto& o : w.obstacles) {
    const Vec center = std::visit([](const auto& s) { return s.center; }, o);
    Vec u = center - xstar;
    const double base = u.norm();
    if (base == 0) continue;
    u /= base;
    // Far boundary crossing of beta_i along the ray, then 5% beyond.
    double t_lo = base, t_hi = base;
    while (obstacle_value(o, xstar + t_hi * u) <= 0 &&
           t_hi < 4.0 * w.workspace.radius)
      t_hi += 0.05 * base;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (t_lo + t_hi);
      (obstacle_value(o, xstar + mid * u) <= 0 ? t_lo : t_hi) = mid;
    }
    Vec s = xstar + 1.05 * t_hi * u;
    for (int push = 0; push < 20 && !in_free_space_interior(w, s); ++push)
      s = xstar + (1.05 + 0.02 * push) * t_hi * u;
    if (in_free_space_interior(w, s)) seeds.push_back(s);
  }
  if (w.dim() == 2) {
    const double r = w.workspace.radius;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        Vec p = w.workspace.center +
                vec2(-r + 2.0 * r * (i + 0.5) / grid, -r + 2.0 * r * (j + 0.5) / grid);
        if (in_free_space_interior(w, p)) seeds.push_back(p);
      }
    }
  } else {
    KeyedRng rng(2024, {0x736565647fULL});
    int added = 0;
    while (added < grid * grid) {
      Vec p = w.workspace.center;
      for (int d = 0; d < w.dim(); ++d)
        p[d] += rng.next_uniform(-w.workspace.radius, w.workspace.radius);
      ++added;
      if (in_free_space_interior(w, p)) seeds.push_back(p);
    }
  }
  return seeds;
}

Vec locate_minimum(const World& w, const PotentialSpec& spec) {
  const auto cps = find_critical_points(w, spec, default_critical_seeds(w));
  Vec found;
  int count = 0;
  for (const auto& cp : cps) {
    if (cp.kind == CriticalKind::Minimum) {
      found = cp.x;
      ++count;
    }
  }
  if (count != 1)
    throw std::runtime_error("expected a unique potential minimum, found " +
                             std::to_string(count));
  return found;
}

double find_order_threshold(const World& w, PotentialKind kind, double k0,
                            double k_max) {
  for (double k = k0; k <= k_max; k *= 2.0) {
    const PotentialSpec spec{kind, k};
    const auto cps = find_critical_points(w, spec, default_critical_seeds(w));
    int minima = 0, saddles = 0, degenerate = 0;
    for (const auto& cp : cps) {
      if (cp.kind == CriticalKind::Minimum) ++minima;
      if (cp.kind == CriticalKind::Saddle) ++saddles;
      if (cp.kind == CriticalKind::Degenerate) ++degenerate;
    }
    if (minima == 1 && saddles == w.num_obstacles() && degenerate == 0) return k;
  }
  throw std::runtime_error("no order parameter up to k_max produced the expected critical set");
}

}  // namespace stochnav
