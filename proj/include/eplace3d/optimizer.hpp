#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "eplace3d/model.hpp"
#include "eplace3d/wirelength.hpp"

namespace ep3d {

enum class PrecondMode { Volume3D, Degree2D };

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

// Per-object divisors max(d_i, H_min) with H_min = 1e-4 * median(d). An
// all-zero input falls back to H_min = 1 so the output stays finite.
inline std::vector<double> clamp_divisors(std::vector<double> d) {
  std::vector<double> positive;
  for (double v : d)
    if (v > 0.0) positive.push_back(v);
  double hmin = 1e-4 * median_of(d);
  if (!(hmin > 0.0)) hmin = positive.empty() ? 1.0 : 1e-4 * median_of(positive);
  for (double& v : d) v = std::max(v, hmin);
  return d;
}

// Divisors lambda * V_i: every object is equalized by its charge alone.
inline std::vector<double> preconditioner_3d(std::span<const double> volume, double lambda) {
  std::vector<double> d(volume.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = lambda * volume[i];
  return clamp_divisors(std::move(d));
}

// Divisors |N_i| + lambda * A_i.
inline std::vector<double> preconditioner_2d(std::span<const double> area,
                                             std::span<const std::size_t> degree, double lambda) {
  std::vector<double> d(area.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(degree[i]) + lambda * area[i];
  return clamp_divisors(std::move(d));
}

inline void apply_preconditioner(std::span<Point3> grad, std::span<const double> divisor) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i].x /= divisor[i];
    grad[i].y /= divisor[i];
    grad[i].z /= divisor[i];
  }
}

inline void precondition_3d(std::span<Point3> grad, std::span<const double> volume, double lambda) {
  apply_preconditioner(grad, preconditioner_3d(volume, lambda));
}

inline void precondition_2d(std::span<Point3> grad, std::span<const double> area,
                            std::span<const std::size_t> degree, double lambda) {
  apply_preconditioner(grad, preconditioner_2d(area, degree, lambda));
}

inline double norm2(std::span<const Point3> v) {
  double s = 0.0;
  for (const Point3& p : v) s += p.x * p.x + p.y * p.y + p.z * p.z;
  return std::sqrt(s);
}

inline double diff_norm2(std::span<const Point3> a, std::span<const Point3> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i].x - b[i].x, dy = a[i].y - b[i].y, dz = a[i].z - b[i].z;
    s += dx * dx + dy * dy + dz * dz;
  }
  return std::sqrt(s);
}

inline double norm1(std::span<const Point3> v) {
  double s = 0.0;
  for (const Point3& p : v) s += std::abs(p.x) + std::abs(p.y) + std::abs(p.z);
  return s;
}

inline bool all_finite(std::span<const Point3> v) {
  for (const Point3& p : v)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) return false;
  return true;
}

// Inverse local Lipschitz estimate ||u_k - u_{k-1}|| / ||g_k - g_{k-1}||.
inline double estimate_steplength(std::span<const Point3> u, std::span<const Point3> u_prev,
                                  std::span<const Point3> g, std::span<const Point3> g_prev,
                                  double previous) {
  const double dg = diff_norm2(g, g_prev);
  const double du = diff_norm2(u, u_prev);
  if (!(dg > 0.0) || !std::isfinite(dg) || !(du > 0.0)) return previous;
  return du / dg;
}

inline double next_nesterov_parameter(double a) { return 0.5 * (1.0 + std::sqrt(4.0 * a * a + 1.0)); }

struct LambdaSchedule {
  double mu_max = 1.1;
  double mu_min = 0.75;
};

// lambda' = mu * lambda with mu = 1.1^(1 - dHPWL/ref), clamped.
inline double lambda_update(double lambda, double delta_hpwl, double ref, const LambdaSchedule& s = {}) {
  const double mu = ref > 0.0 ? std::pow(1.1, 1.0 - delta_hpwl / ref) : s.mu_max;
  return lambda * std::clamp(mu, s.mu_min, s.mu_max);
}

inline double initial_lambda(std::span<const Point3> grad_w, std::span<const Point3> grad_u) {
  const double nu = norm1(grad_u);
  const double l = nu > 0.0 ? norm1(grad_w) / nu : 0.0;
  return (l > 0.0 && std::isfinite(l)) ? l : 1.0;
}

// gamma = base * 10^(2 tau): one bin width at tau = 0, a hundred at tau = 1.
// z uses the tier depth as its base.
inline SmoothingParams gamma_schedule(double tau, double bin_x, double bin_y, double tier_depth) {
  const double f = std::pow(10.0, 2.0 * std::clamp(tau, 0.0, 1.0));
  return {bin_x * f, bin_y * f, tier_depth * f};
}

// Axis-aligned box constraints on every variable.
struct Bounds {
  std::vector<Point3> lo, hi;

  void project(std::span<Point3> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i].x = std::clamp(x[i].x, lo[i].x, hi[i].x);
      x[i].y = std::clamp(x[i].y, lo[i].y, hi[i].y);
      x[i].z = std::clamp(x[i].z, lo[i].z, hi[i].z);
    }
  }
};

struct NesterovConfig {
  double accept_ratio = 0.95;
  int max_backtracks = 10;
};

// Nesterov's accelerated method with a Lipschitz-predicted steplength and
// halving backtracking. The objective is supplied as a callback returning the
// (preconditioned) descent gradient at a point.
class NesterovSolver {
 public:
  using GradientFn = std::function<void(std::span<const Point3>, std::span<Point3>)>;

  NesterovSolver(GradientFn fn, Bounds bounds, NesterovConfig cfg = {})
      : fn_(std::move(fn)), bounds_(std::move(bounds)), cfg_(cfg) {}

  // Starts from x0. The first step length is alpha0 unless alpha0 <= 0, in
  // which case it is chosen so the largest coordinate move equals max_move.
  void reset(std::vector<Point3> x0, double alpha0, double max_move = 0.0) {
    bounds_.project(x0);
    v_ = x0;
    u_ = std::move(x0);
    g_.assign(u_.size(), {});
    evaluate(u_, g_);
    a_ = 1.0;
    iteration_ = 0;
    alpha_ = alpha0;
    if (!(alpha_ > 0.0)) {
      double gmax = 0.0;
      for (const Point3& p : g_) gmax = std::max({gmax, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
      alpha_ = gmax > 0.0 ? max_move / gmax : 1.0;
    }
    have_prev_ = false;
  }

  // One major iteration. Throws DivergenceError on non-finite gradients.
  void step() {
    double alpha = alpha_;
    if (have_prev_) alpha = estimate_steplength(u_, u_prev_, g_, g_prev_, alpha_);
    const double a_next = next_nesterov_parameter(a_);
    const double coef = (a_ - 1.0) / a_next;
    std::vector<Point3> v_new(u_.size()), u_new(u_.size()), g_new(u_.size());
    for (int tries = 0;; ++tries) {
      for (std::size_t i = 0; i < u_.size(); ++i) {
        v_new[i] = {u_[i].x - alpha * g_[i].x, u_[i].y - alpha * g_[i].y, u_[i].z - alpha * g_[i].z};
      }
      bounds_.project(v_new);
      for (std::size_t i = 0; i < u_.size(); ++i) {
        u_new[i] = {v_new[i].x + coef * (v_new[i].x - v_[i].x), v_new[i].y + coef * (v_new[i].y - v_[i].y),
                    v_new[i].z + coef * (v_new[i].z - v_[i].z)};
      }
      bounds_.project(u_new);
      evaluate(u_new, g_new);
      const double check = estimate_steplength(u_new, u_, g_new, g_, alpha);
      if (check >= cfg_.accept_ratio * alpha || tries + 1 >= cfg_.max_backtracks) break;
      alpha *= 0.5;
    }
    u_prev_ = std::move(u_);
    g_prev_ = std::move(g_);
    v_ = std::move(v_new);
    u_ = std::move(u_new);
    g_ = std::move(g_new);
    a_ = a_next;
    alpha_ = alpha;
    have_prev_ = true;
    ++iteration_;
  }

  // Re-evaluates the gradient at the current reference point, for callers
  // that changed the objective (lambda, gamma) between iterations.
  void refresh() { evaluate(u_, g_); }

  const std::vector<Point3>& solution() const { return v_; }
  const std::vector<Point3>& reference() const { return u_; }
  const std::vector<Point3>& reference_gradient() const { return g_; }
  double alpha() const { return alpha_; }
  double nesterov_parameter() const { return a_; }
  int iteration() const { return iteration_; }

 private:
  void evaluate(std::span<const Point3> x, std::span<Point3> g) {
    fn_(x, g);
    if (!all_finite(g)) throw DivergenceError("non-finite gradient at iteration " + std::to_string(iteration_));
  }

  GradientFn fn_;
  Bounds bounds_;
  NesterovConfig cfg_;
  std::vector<Point3> v_, u_, g_, u_prev_, g_prev_;
  double alpha_ = 1.0;
  double a_ = 1.0;
  int iteration_ = 0;
  bool have_prev_ = false;
};

}  // namespace ep3d
