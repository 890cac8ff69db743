#pragma once

#include <string>
#include <vector>

#include "stochnav/geometry.hpp"

namespace stochnav {

enum class PotentialKind { RimonKoditschek, LogBarrier };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::RimonKoditschek;
  double k = 1.0;

  static PotentialSpec rk(double k);
  static PotentialSpec log_barrier(double k);
};

// phi_k(x): RK is f0 / (f0^k + beta)^(1/k) in [0,1]; log barrier is
// f0 - log(beta)/k. RK is evaluated in log space so large k never
// overflows. Throws "outside free space" when beta(x) < 0 (RK) or
// beta(x) <= 0 (log barrier).
double phi(const World& w, const PotentialSpec& spec, const Vec& x);

// Exact gradient. RK: (f0^k+beta)^(-1-1/k) [beta grad f0 - (f0/k) grad beta];
// log barrier: grad f0 - grad beta / (k beta).
Vec phi_gradient(const World& w, const PotentialSpec& spec, const Vec& x);

// Scale-free descent field: beta*grad f0 - (f0/k)*grad beta (RK) or
// beta*grad f0 - grad beta/k (log barrier). Equals descent_scale(x) times
// phi_gradient wherever both are defined.
Vec descent_direction(const World& w, const PotentialSpec& spec, const Vec& x);

// log of the positive scalar linking the two fields:
// (1+1/k)*log(f0^k+beta) for RK, log(beta) for the log barrier.
double descent_scale_log(const World& w, const PotentialSpec& spec, const Vec& x);

// Magnitude scale of the descent field terms at x, for relative tolerances.
double descent_local_scale(const World& w, const PotentialSpec& spec, const Vec& x);

struct ConditionEntry {
  int obstacle = 0;       // 1-based
  double worst_lhs = 0;   // (lmax/lmin) * max_s grad beta_i' (x_s - x*) / |x_s - x*|^2
  double worst_ratio_free = 0;  // the max without the eigenvalue ratio
  double mu_min = 0;
  double margin = 0;      // mu_min - worst_lhs
  bool pass = false;
  double admissible_ratio = 0;  // largest Hessian ratio that would still pass
  Vec worst_point;
};

struct ConditionReport {
  std::vector<ConditionEntry> per_obstacle;
  bool pass = false;
  double n_cond = 0;  // min over obstacles of admissible_ratio
};

// Theorem-1 inequality over sampled (and locally refined, n = 2) boundary
// points. Throws if x* is inside an obstacle.
ConditionReport check_condition(const World& w, int boundary_samples);

enum class CriticalKind { Minimum, Saddle, Maximum, Degenerate };

struct CriticalPoint {
  Vec x;
  CriticalKind kind = CriticalKind::Degenerate;
  // Eigenvalues of the symmetrized descent-field Jacobian at x. This equals
  // (f0^k+beta)^(1+1/k) * Hess(phi) at a critical point, so the signs match
  // the Hessian of phi while staying representable at large k.
  Vec jacobian_eigenvalues;
};

std::string to_string(CriticalKind k);

// Damped Newton on descent_direction = 0 from each seed; deduplicates and
// classifies roots. Diverging seeds are skipped.
std::vector<CriticalPoint> find_critical_points(const World& w,
                                                const PotentialSpec& spec,
                                                const std::vector<Vec>& seeds);

// Per-obstacle behind-the-obstacle seeds plus a free-space grid.
std::vector<Vec> default_critical_seeds(const World& w, int grid = 20);

// Runs the finder and returns the unique minimum; throws if the count is
// not exactly one.
Vec locate_minimum(const World& w, const PotentialSpec& spec);

// Doubles k from k0 until the finder yields exactly one minimum and m
// nondegenerate saddles. Returns the first such k.
double find_order_threshold(const World& w, PotentialKind kind, double k0 = 2.0,
                            double k_max = 512.0);

}  // namespace stochnav
