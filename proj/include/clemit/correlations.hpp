#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "clemit/dynamics.hpp"

namespace clemit {

/// Linear map T^{mn} with Y^{mn}(t2, 0) = T^{mn} Psi(t2), encoding the product
/// rule A_ij A_mn = delta_jm A_in.
struct RegressionSeed {
  int m = 0;
  int n = 0;
  CMatrix transfer;

  CVector apply(const CVector& psi) const { return transfer * psi; }
};

RegressionSeed regression_seed(const Basis& basis, int m, int n);

/// Repeated application of a cached exp(M h) to a block of seed vectors.
class RegressionPropagator {
 public:
  RegressionPropagator(const Liouvillian& generator, double step) : step_(generator, step) {}

  double step() const noexcept { return step_.step(); }
  const CMatrix& matrix() const noexcept { return step_.matrix(); }

  /// Advances every column of `block` by one step in place.
  void advance(CMatrix& block) const { block = step_.matrix() * block; }

 private:
  Propagator step_;
};

/// Two-time averages Y^{mn}_e(t2, tau) = <A_e(t2 + tau) A_mn(t2)> for a chosen
/// set of basis entries e, stored tau-major per t2: values[(t2 * n_tau + tau)
/// * n_entries + e].
class CorrelationSlice {
 public:
  CorrelationSlice(int m, int n, std::vector<double> t2_grid, std::vector<double> tau_grid,
                   std::vector<std::pair<int, int>> entries);

  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  const std::vector<double>& t2_grid() const noexcept { return t2_grid_; }
  const std::vector<double>& tau_grid() const noexcept { return tau_grid_; }
  const std::vector<std::pair<int, int>>& entries() const noexcept { return entries_; }

  /// Position of operator (i, j) in entries(), or -1.
  int entry_position(int i, int j) const;

  Complex& at(std::size_t t2, std::size_t tau, std::size_t entry) {
    return values_[(t2 * tau_grid_.size() + tau) * entries_.size() + entry];
  }
  Complex at(std::size_t t2, std::size_t tau, std::size_t entry) const {
    return values_[(t2 * tau_grid_.size() + tau) * entries_.size() + entry];
  }
  /// Y_ij(t2, tau); throws IndexOutOfRange if (i, j) is not stored.
  Complex value(int i, int j, std::size_t t2, std::size_t tau) const;

 private:
  int m_;
  int n_;
  std::vector<double> t2_grid_;
  std::vector<double> tau_grid_;
  std::vector<std::pair<int, int>> entries_;
  std::vector<Complex> values_;
};

/// Y^{mn}(t2, tau) = exp(M tau) T^{mn} Psi(t2) for every t2 of the trajectory
/// and every tau of the uniform tau grid (which must start at 0 and share the
/// trajectory step). Empty `entries` stores every basis entry.
CorrelationSlice two_time_correlations(const Liouvillian& generator, const Trajectory& traj, int m, int n,
                                       std::span<const double> tau_grid,
                                       std::vector<std::pair<int, int>> entries = {});

/// Emission correlators <A_i0(t2 + tau) A_0j(t2)>: the (0, j) seed with rows
/// (i, 0), i = 1..n_excited, unless `entries` says otherwise.
CorrelationSlice two_time_correlations(const Liouvillian& generator, const Trajectory& traj, int j,
                                       std::span<const double> tau_grid,
                                       std::vector<std::pair<int, int>> entries = {});

/// CSV dump with columns t2,tau,re,im,i,j; `stride` subsamples both grids.
void write_correlation_csv(const CorrelationSlice& slice, const std::filesystem::path& path,
                           std::size_t stride = 1);

}  // namespace clemit
