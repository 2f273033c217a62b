#pragma once

#include <memory>
#include <string_view>
#include <utility>
#include <vector>

#include "clemit/types.hpp"

namespace clemit {

/// Ordered index map (i, j) <-> position of <A_ij> in the state vector.
///
/// Ordering: excited populations (1,1)..(n,n); excited coherence pairs
/// (i,j),(j,i) for i < j in lexicographic order; optical coherence pairs
/// (i,0),(0,i); finally (0,0). For n = 3 this is
///   A11 A22 A33 A12 A21 A13 A31 A23 A32 A10 A01 A20 A02 A30 A03 A00.
class Basis {
 public:
  explicit Basis(int n_excited);

  int n_excited() const noexcept { return n_excited_; }
  int levels() const noexcept { return n_excited_ + 1; }
  int dim() const noexcept { return levels() * levels(); }

  int index(int i, int j) const;
  std::pair<int, int> pair(int k) const { return pairs_.at(static_cast<std::size_t>(k)); }
  const std::vector<std::pair<int, int>>& pairs() const noexcept { return pairs_; }

 private:
  int n_excited_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> lookup_;  // levels x levels, row-major
};

struct NrChannel {
  int upper = 0;
  int lower = 0;
  double rate = 0.0;
};

/// Raw, unvalidated parameters. Frequencies and rates are in units of the
/// reference radiative rate; level 0 is the ground state and the vectors are
/// indexed by excited level minus one.
struct ModelParams {
  int n_excited = 3;
  std::vector<double> omega;
  std::vector<double> gamma_rad;
  std::vector<double> excitation;
  double p_interf = 0.0;
  double gamma_nr = 0.0;
  std::vector<std::pair<int, int>> nr_channels;
};

/// All downward pairs (u, l), u > l >= 1, ordered (n,1)..(n,n-1),(n-1,1)...
/// For three excited levels: (3,1), (3,2), (2,1).
std::vector<std::pair<int, int>> default_nr_channels(int n_excited);

/// Frequencies in the frame centred on level 2 (omega_20 = 0) for the V-system
/// with spacings omega_21 and omega_32.
std::vector<double> v_system_frequencies(double omega_21, double omega_32);

class EmitterModel {
 public:
  int n_excited() const noexcept { return params_.n_excited; }
  int levels() const noexcept { return params_.n_excited + 1; }

  // Level-indexed accessors take the excited level i in 1..n_excited.
  double omega(int i) const { return params_.omega.at(static_cast<std::size_t>(i - 1)); }
  double gamma(int i) const { return params_.gamma_rad.at(static_cast<std::size_t>(i - 1)); }
  double excitation(int i) const { return params_.excitation.at(static_cast<std::size_t>(i - 1)); }
  double p_interf() const noexcept { return params_.p_interf; }
  double gamma_nr() const noexcept { return params_.gamma_nr; }
  const std::vector<NrChannel>& nr_channels() const noexcept { return channels_; }
  const ModelParams& params() const noexcept { return params_; }

  /// Cross pump rate p * sqrt(r_i r_j) for i != j, r_i on the diagonal.
  double pump_rate(int i, int j) const;
  /// n x n pump rate matrix R.
  RMatrix pump_matrix() const;

  /// Same model with a different interference parameter (revalidated).
  EmitterModel with_interference(double p) const;

 private:
  friend EmitterModel build_model(ModelParams params);
  explicit EmitterModel(ModelParams params, std::vector<NrChannel> channels)
      : params_(std::move(params)), channels_(std::move(channels)) {}

  ModelParams params_;
  std::vector<NrChannel> channels_;
};

/// Validates parameters and runs the positive-semidefiniteness check on the
/// pump rate matrix (eigenvalues >= -1e-12).
EmitterModel build_model(ModelParams params);

inline constexpr double kPumpPsdTolerance = 1e-12;

/// Vector of one-time averages <A_ij> with <A_ij> = rho_ji.
class StateVector {
 public:
  StateVector(std::shared_ptr<const Basis> basis, CVector entries);

  static StateVector from_density_matrix(std::shared_ptr<const Basis> basis, const CMatrix& rho);

  const Basis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const Basis>& basis_ptr() const noexcept { return basis_; }
  const CVector& entries() const noexcept { return entries_; }

  /// <A_ij>
  Complex average(int i, int j) const { return entries_(basis_->index(i, j)); }
  /// rho_ij = <A_ji>
  Complex rho(int i, int j) const { return entries_(basis_->index(j, i)); }
  double population(int i) const { return rho(i, i).real(); }

  CMatrix density_matrix() const;
  Complex trace() const;
  /// max |<A_ij> - conj(<A_ji>)|
  double hermiticity_defect() const;
  /// Smallest eigenvalue of the Hermitian part of rho.
  double min_eigenvalue() const;

 private:
  std::shared_ptr<const Basis> basis_;
  CVector entries_;
};

/// Generator M of dPsi/dt = M Psi over the basis above.
class Liouvillian {
 public:
  Liouvillian(std::shared_ptr<const Basis> basis, CMatrix matrix)
      : basis_(std::move(basis)), matrix_(std::move(matrix)) {}

  const Basis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const Basis>& basis_ptr() const noexcept { return basis_; }
  const CMatrix& matrix() const noexcept { return matrix_; }
  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }

  /// Row vector selecting sum_i <A_ii>; annihilates M for a trace-preserving
  /// generator.
  Eigen::RowVectorXcd trace_functional() const;

 private:
  std::shared_ptr<const Basis> basis_;
  CMatrix matrix_;
};

Liouvillian build_liouvillian(const EmitterModel& model);

/// psi = sum_i c_i exp(i delta_i) |i>, i = 0..n_excited. Missing trailing
/// entries are zero.
struct PureStateSpec {
  std::vector<double> amplitudes;
  std::vector<double> phases;
};

inline constexpr double kNormalizationTolerance = 1e-9;

StateVector initial_state(std::shared_ptr<const Basis> basis, const PureStateSpec& spec);

/// Named presets: "ground", "excited-<k>", "superposition-01" ((|0>+|1>)/sqrt2),
/// "equal" (all c_i equal, zero phases) and "equal-pi" (all c_i equal, phase
/// pi on the highest level).
StateVector initial_state(std::shared_ptr<const Basis> basis, std::string_view preset);
PureStateSpec preset_state_spec(int n_excited, std::string_view preset);

}  // namespace clemit
