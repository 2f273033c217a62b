#pragma once

#include <span>
#include <vector>

#include "clemit/model.hpp"

namespace clemit {

/// exp(A) by scaling and squaring with diagonal Pade approximants of degree
/// 3, 5, 7, 9 or 13 chosen from the 1-norm of A.
///
/// Throws NonFinite for non-finite input and ConvergenceFailure when the
/// result overflows.
CMatrix matrix_exponential(const CMatrix& a);

/// Cached exp(M * step).
class Propagator {
 public:
  Propagator(const Liouvillian& generator, double step);

  double step() const noexcept { return step_; }
  const CMatrix& matrix() const noexcept { return matrix_; }

  CVector apply(const CVector& v) const { return matrix_ * v; }

 private:
  double step_;
  CMatrix matrix_;
};

class Trajectory {
 public:
  Trajectory(std::vector<double> times, std::vector<StateVector> states);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<StateVector>& states() const noexcept { return states_; }
  std::size_t size() const noexcept { return times_.size(); }
  const StateVector& at(std::size_t k) const { return states_.at(k); }

  /// rho_ii(t)
  std::vector<double> populations(int i) const;
  /// |rho_ij(t)|
  std::vector<double> coherence_magnitudes(int i, int j) const;

  /// Step of a uniform grid, or 0 when the grid is not uniform.
  double uniform_step() const noexcept { return uniform_step_; }

 private:
  std::vector<double> times_;
  std::vector<StateVector> states_;
  double uniform_step_ = 0.0;
};

/// Step of `times` if it is uniform to 1e-12 relative, otherwise 0.
double uniform_grid_step(std::span<const double> times);

/// Psi(t_k) = exp(M t_k) Psi(0) on a monotone grid. Uniform grids reuse one
/// cached step propagator.
Trajectory propagate(const Liouvillian& generator, const StateVector& psi0, std::span<const double> times);

/// Uniform grid t_k = k * step, k = 0..count-1.
std::vector<double> uniform_grid(double step, std::size_t count);
/// Uniform grid of `count` points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Trace-one null vector of M from the smallest right singular vector.
///
/// Throws DegenerateKernel when more than one singular value lies below the
/// kernel tolerance, NoSteadyState when none does or the null vector has no
/// trace.
StateVector steady_state(const Liouvillian& generator);

inline constexpr double kKernelTolerance = 1e-9;

}  // namespace clemit
