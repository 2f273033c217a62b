#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clemit/correlations.hpp"

namespace clemit {

/// Filtered time-dependent spectrum settings. Detunings are measured from
/// omega_20 and every time must be an integer multiple of `step`.
struct SpectrumConfig {
  double filter_bandwidth = 0.1;
  std::vector<double> omega;
  std::vector<double> times;
  double step = 0.002;
  bool allow_coarse_grid = false;
  unsigned threads = 1;
};

/// Throws ValidationFailed for a malformed config, GridMismatch when a time is
/// off the step lattice and GridTooCoarse when step > 1/(10 max(|omega|, Gamma, 1))
/// unless allow_coarse_grid is set.
void validate_spectrum_config(const SpectrumConfig& cfg);

/// S(omega, t) sampled on times x omega, stored time-major.
struct SpectrumGrid {
  std::vector<double> omega;
  std::vector<double> times;
  std::vector<double> values;
  std::string route;

  double at(std::size_t t, std::size_t w) const { return values[t * omega.size() + w]; }
  double& at(std::size_t t, std::size_t w) { return values[t * omega.size() + w]; }
  double max_value() const;
};

/// gamma_ii = 2 gamma_i, gamma_ij = -sqrt(gamma_i gamma_j).
RMatrix gamma_matrix(const EmitterModel& model);

/// Uniform trajectory t_k = k h up to the largest requested time.
Trajectory spectrum_trajectory(const Liouvillian& generator, const StateVector& psi0, const SpectrumConfig& cfg);

/// Composite trapezoid over t2 and tau with shared step h. Correlation columns
/// are generated one t2 at a time from the trajectory and never stored whole.
SpectrumGrid spectrum_quadrature(const Liouvillian& generator, const Trajectory& traj, const SpectrumConfig& cfg,
                                 const EmitterModel& model);

/// Same quadrature over precomputed emission correlators, one slice per seed
/// (0, j), j = 1..n_excited, each holding rows (i, 0).
SpectrumGrid spectrum_quadrature(std::span<const CorrelationSlice> slices, const SpectrumConfig& cfg,
                                 const EmitterModel& model);

struct EigenRouteOptions {
  double max_condition = 1e8;
  /// Use the quadrature route when the eigenbasis is ill-conditioned instead
  /// of throwing IllConditionedEigenbasis.
  bool fallback = true;
};

/// Diagonalises M once; the tau integral of each eigenmode is done in closed
/// form and only t2 uses the trapezoid rule.
SpectrumGrid spectrum_eigen(const Trajectory& traj, const Liouvillian& generator, const SpectrumConfig& cfg,
                            const EmitterModel& model, const EigenRouteOptions& opt = {});

/// |S_p - S_0| pointwise.
SpectrumGrid interference_contribution(const SpectrumGrid& with_interference, const SpectrumGrid& without);

/// S_II / S_I, NaN where S_I < floor. Default floor: 1e-6 of max S_I.
SpectrumGrid relative_intensity(const SpectrumGrid& numerator, const SpectrumGrid& denominator,
                                std::optional<double> floor = std::nullopt);

struct PeakRatio {
  double time = 0.0;
  double omega = 0.0;
  double reference = 0.0;
  double value = 0.0;
  double ratio = 0.0;
};

/// Ratio S_II / S_I at each interior local maximum of S_I above `floor`.
std::vector<PeakRatio> peak_ratios(const SpectrumGrid& numerator, const SpectrumGrid& denominator,
                                   std::optional<double> floor = std::nullopt);

/// Sub-grid local maxima (omega positions) of one time row, interior points only.
std::vector<std::size_t> local_maxima(const SpectrumGrid& grid, std::size_t t_index, double floor = 0.0);

/// C(t) = |rho_ij| / (rho_ii + rho_jj); 0 where the denominator is below 1e-14.
std::vector<double> coherence_ratio(const Trajectory& traj, int i, int j);

}  // namespace clemit
