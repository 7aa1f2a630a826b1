#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "eplace3d/model.hpp"

namespace ep3d {

namespace detail {

struct FftwBufferDeleter {
  void operator()(double* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double[], FftwBufferDeleter>;

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

}  // namespace detail

// Neumann Poisson solve on a uniform grid sampled at bin centers.
//
// Density is expanded in the cosine basis cos(w_j x) cos(w_k y) cos(w_l z)
// with w_j = pi*j/L_x (L = the grid's physical extent), the potential
// divides each coefficient by w_j^2+w_k^2+w_l^2 with the DC term removed,
// and the field components are the matching mixed sine/cosine series.
// That is one forward and four inverse real-to-real transforms per solve.
//
// A grid with nz == 1 degenerates to the planar problem and E_z is zero.
class SpectralPoissonSolver {
 public:
  explicit SpectralPoissonSolver(const BinGridSpec& grid) : grid_(grid) {
    n_ = {grid.nx, grid.ny, grid.nz};
    len_ = {grid.lx, grid.ly, grid.lz};
    rank_ = grid.nz > 1 ? 3 : 2;
    const std::size_t total = grid.size();
    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * total)));
    out_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * total)));
    coeff_.assign(total, 0.0);
    pot_coeff_.assign(total, 0.0);
    phi_.assign(total, 0.0);
    ex_.assign(total, 0.0);
    ey_.assign(total, 0.0);
    ez_.assign(total, 0.0);
    for (int d = 0; d < 3; ++d) {
      w_[d].resize(n_[d]);
      for (int j = 0; j < n_[d]; ++j) w_[d][j] = std::numbers::pi * j / len_[d];
    }
    fwd_ = make_plan({FFTW_REDFT10, FFTW_REDFT10, FFTW_REDFT10});
    inv_phi_ = make_plan({FFTW_REDFT01, FFTW_REDFT01, FFTW_REDFT01});
    inv_ex_ = make_plan({FFTW_RODFT01, FFTW_REDFT01, FFTW_REDFT01});
    inv_ey_ = make_plan({FFTW_REDFT01, FFTW_RODFT01, FFTW_REDFT01});
    if (rank_ == 3) inv_ez_ = make_plan({FFTW_REDFT01, FFTW_REDFT01, FFTW_RODFT01});
  }

  SpectralPoissonSolver(const SpectralPoissonSolver&) = delete;
  SpectralPoissonSolver& operator=(const SpectralPoissonSolver&) = delete;
  SpectralPoissonSolver(SpectralPoissonSolver&&) = default;
  SpectralPoissonSolver& operator=(SpectralPoissonSolver&&) = default;

  const BinGridSpec& grid() const { return grid_; }

  void solve(std::span<const double> rho) {
    const std::size_t total = grid_.size();
    std::copy(rho.begin(), rho.end(), in_.get());
    fftw_execute(fwd_.get());

    // REDFT10 yields 2*sum(...) per axis; the cosine-series coefficient is
    // that sum times c_j/n with c_0 = 1 and c_j = 2 otherwise.
    for_each_index([&](int j, int k, int l, std::size_t idx) {
      double s = out_[idx];
      s *= (j ? 2.0 : 1.0) / (2.0 * n_[0]);
      s *= (k ? 2.0 : 1.0) / (2.0 * n_[1]);
      if (rank_ == 3) s *= (l ? 2.0 : 1.0) / (2.0 * n_[2]);
      coeff_[idx] = s;
      const double w2 = w_[0][j] * w_[0][j] + w_[1][k] * w_[1][k] + w_[2][l] * w_[2][l];
      pot_coeff_[idx] = idx == 0 ? 0.0 : s / w2;
    });
    coeff_[0] = 0.0;

    // REDFT01 evaluates X_0 + 2*sum_{k>0} X_k cos(...), so halve every
    // nonzero-frequency coefficient on cosine axes.
    auto cos_div = [](int j) { return j ? 0.5 : 1.0; };

    for_each_index([&](int j, int k, int l, std::size_t idx) {
      in_[idx] = pot_coeff_[idx] * cos_div(j) * cos_div(k) * cos_div(l);
    });
    fftw_execute(inv_phi_.get());
    std::copy(out_.get(), out_.get() + total, phi_.begin());

    // RODFT01 evaluates 2*sum_{k<n-1} X_k sin(pi(k+1)(2i+1)/2n) + (-1)^i X_{n-1};
    // frequency j sits at X_{j-1} and the top slot stays empty.
    auto field = [&](int axis, detail::FftwPlan& plan, std::vector<double>& dst) {
      std::fill(in_.get(), in_.get() + total, 0.0);
      for_each_index([&](int j, int k, int l, std::size_t idx) {
        const std::array<int, 3> f{j, k, l};
        if (f[axis] == 0) return;
        std::array<int, 3> g = f;
        g[axis] -= 1;
        double v = pot_coeff_[idx] * w_[axis][f[axis]];
        for (int d = 0; d < 3; ++d) v *= d == axis ? 0.5 : cos_div(f[d]);
        in_[grid_.index(g[0], g[1], g[2])] = v;
      });
      fftw_execute(plan.get());
      std::copy(out_.get(), out_.get() + total, dst.begin());
    };
    field(0, inv_ex_, ex_);
    field(1, inv_ey_, ey_);
    if (rank_ == 3)
      field(2, inv_ez_, ez_);
    else
      std::fill(ez_.begin(), ez_.end(), 0.0);
  }

  const std::vector<double>& coeffs() const { return coeff_; }
  const std::vector<double>& phi() const { return phi_; }
  const std::vector<double>& ex() const { return ex_; }
  const std::vector<double>& ey() const { return ey_; }
  const std::vector<double>& ez() const { return ez_; }
  double frequency(int axis, int j) const { return w_[axis][j]; }

 private:
  template <class F>
  void for_each_index(F&& f) const {
    for (int j = 0; j < n_[0]; ++j)
      for (int k = 0; k < n_[1]; ++k)
        for (int l = 0; l < n_[2]; ++l) f(j, k, l, grid_.index(j, k, l));
  }

  detail::FftwPlan make_plan(std::array<fftw_r2r_kind, 3> kinds) {
    std::array<int, 3> n{n_[0], n_[1], n_[2]};
    return detail::FftwPlan(
        fftw_plan_r2r(rank_, n.data(), in_.get(), out_.get(), kinds.data(), FFTW_ESTIMATE));
  }

  BinGridSpec grid_;
  std::array<int, 3> n_{};
  std::array<double, 3> len_{};
  int rank_ = 3;
  std::array<std::vector<double>, 3> w_;
  detail::FftwBuffer in_, out_;
  detail::FftwPlan fwd_, inv_phi_, inv_ex_, inv_ey_, inv_ez_;
  std::vector<double> coeff_, pot_coeff_, phi_, ex_, ey_, ez_;
};

}  // namespace ep3d
