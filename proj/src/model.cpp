#include "clemit/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace clemit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::InterferenceOutOfRange: return "InterferenceOutOfRange";
    case ErrorCode::PumpMatrixNotPSD: return "PumpMatrixNotPSD";
    case ErrorCode::BadChannel: return "BadChannel";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::NoSteadyState: return "NoSteadyState";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::IllConditionedEigenbasis: return "IllConditionedEigenbasis";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Basis

Basis::Basis(int n_excited) : n_excited_(n_excited) {
  if (n_excited < 1) {
    throw Error(ErrorCode::IndexOutOfRange, "n_excited must be at least 1");
  }
  const int n = n_excited;
  for (int i = 1; i <= n; ++i) pairs_.emplace_back(i, i);
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      pairs_.emplace_back(i, j);
      pairs_.emplace_back(j, i);
    }
  }
  for (int i = 1; i <= n; ++i) {
    pairs_.emplace_back(i, 0);
    pairs_.emplace_back(0, i);
  }
  pairs_.emplace_back(0, 0);

  const int l = levels();
  lookup_.assign(static_cast<std::size_t>(l * l), -1);
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto [i, j] = pairs_[k];
    lookup_[static_cast<std::size_t>(i * l + j)] = static_cast<int>(k);
  }
}

int Basis::index(int i, int j) const {
  const int l = levels();
  if (i < 0 || j < 0 || i >= l || j >= l) {
    throw Error(ErrorCode::IndexOutOfRange,
                "operator index (" + std::to_string(i) + "," + std::to_string(j) + ") outside 0.." +
                    std::to_string(l - 1));
  }
  return lookup_[static_cast<std::size_t>(i * l + j)];
}

// ---------------------------------------------------------------------------
// EmitterModel

std::vector<std::pair<int, int>> default_nr_channels(int n_excited) {
  std::vector<std::pair<int, int>> out;
  for (int u = n_excited; u >= 2; --u) {
    for (int l = 1; l < u; ++l) out.emplace_back(u, l);
  }
  return out;
}

std::vector<double> v_system_frequencies(double omega_21, double omega_32) {
  return {-omega_21, 0.0, omega_32};
}

namespace {

void check_rates(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::NonFinite, std::string(name) + "[" + std::to_string(i) + "] is not finite");
    }
    if (v[i] < 0.0) {
      std::ostringstream os;
      os << name << "[" << i << "] = " << v[i] << " is negative";
      throw Error(ErrorCode::NegativeRate, os.str());
    }
  }
}

void check_length(const std::vector<double>& v, int n, const char* name) {
  if (static_cast<int>(v.size()) != n) {
    throw Error(ErrorCode::IndexOutOfRange, std::string(name) + " has " + std::to_string(v.size()) +
                                                " entries, expected " + std::to_string(n));
  }
}

}  // namespace

EmitterModel build_model(ModelParams params) {
  const int n = params.n_excited;
  if (n < 1) throw Error(ErrorCode::IndexOutOfRange, "n_excited must be at least 1");
  check_length(params.omega, n, "omega");
  check_length(params.gamma_rad, n, "gamma_rad");
  check_length(params.excitation, n, "excitation");
  for (std::size_t i = 0; i < params.omega.size(); ++i) {
    if (!std::isfinite(params.omega[i])) {
      throw Error(ErrorCode::NonFinite, "omega[" + std::to_string(i) + "] is not finite");
    }
  }
  check_rates(params.gamma_rad, "gamma_rad");
  check_rates(params.excitation, "excitation");
  check_rates({params.gamma_nr}, "gamma_nr");

  if (!(params.p_interf >= -1.0 && params.p_interf <= 1.0)) {
    std::ostringstream os;
    os << "p_interf = " << params.p_interf << " outside [-1, 1]";
    throw Error(ErrorCode::InterferenceOutOfRange, os.str());
  }

  std::vector<NrChannel> channels;
  for (std::size_t k = 0; k < params.nr_channels.size(); ++k) {
    const auto [u, l] = params.nr_channels[k];
    if (!(1 <= l && l < u && u <= n)) {
      throw Error(ErrorCode::BadChannel, "nr_channels[" + std::to_string(k) + "] = (" + std::to_string(u) +
                                             "," + std::to_string(l) + ") needs 1 <= lower < upper <= " +
                                             std::to_string(n));
    }
    channels.push_back({u, l, params.gamma_nr});
  }

  EmitterModel model(std::move(params), std::move(channels));

  const RMatrix pump = model.pump_matrix();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(pump, Eigen::EigenvaluesOnly);
  const double lowest = es.eigenvalues().minCoeff();
  if (lowest < -kPumpPsdTolerance) {
    std::ostringstream os;
    os.precision(6);
    os << "pump rate matrix has eigenvalue " << lowest << " < 0 (p_interf = " << model.p_interf() << ")";
    throw Error(ErrorCode::PumpMatrixNotPSD, os.str());
  }
  return model;
}

double EmitterModel::pump_rate(int i, int j) const {
  if (i == j) return excitation(i);
  return params_.p_interf * std::sqrt(excitation(i) * excitation(j));
}

RMatrix EmitterModel::pump_matrix() const {
  const int n = n_excited();
  RMatrix r(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) r(i - 1, j - 1) = pump_rate(i, j);
  }
  return r;
}

EmitterModel EmitterModel::with_interference(double p) const {
  ModelParams next = params_;
  next.p_interf = p;
  return build_model(std::move(next));
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::shared_ptr<const Basis> basis, CVector entries)
    : basis_(std::move(basis)), entries_(std::move(entries)) {
  if (entries_.size() != basis_->dim()) {
    throw Error(ErrorCode::IndexOutOfRange, "state vector length " + std::to_string(entries_.size()) +
                                                " does not match basis dimension " +
                                                std::to_string(basis_->dim()));
  }
}

StateVector StateVector::from_density_matrix(std::shared_ptr<const Basis> basis, const CMatrix& rho) {
  CVector v(basis->dim());
  for (int k = 0; k < basis->dim(); ++k) {
    const auto [i, j] = basis->pair(k);
    v(k) = rho(j, i);
  }
  return StateVector(std::move(basis), std::move(v));
}

CMatrix StateVector::density_matrix() const {
  const int l = basis_->levels();
  CMatrix rho(l, l);
  for (int k = 0; k < basis_->dim(); ++k) {
    const auto [i, j] = basis_->pair(k);
    rho(j, i) = entries_(k);
  }
  return rho;
}

Complex StateVector::trace() const {
  Complex t = 0.0;
  for (int i = 0; i < basis_->levels(); ++i) t += average(i, i);
  return t;
}

double StateVector::hermiticity_defect() const {
  double worst = 0.0;
  for (int k = 0; k < basis_->dim(); ++k) {
    const auto [i, j] = basis_->pair(k);
    worst = std::max(worst, std::abs(entries_(k) - std::conj(average(j, i))));
  }
  return worst;
}

double StateVector::min_eigenvalue() const {
  const CMatrix rho = density_matrix();
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Liouvillian

Eigen::RowVectorXcd Liouvillian::trace_functional() const {
  Eigen::RowVectorXcd t = Eigen::RowVectorXcd::Zero(dim());
  for (int i = 0; i < basis_->levels(); ++i) t(basis_->index(i, i)) = 1.0;
  return t;
}

namespace {

// Accumulates linear maps rho -> c * A rho B into M over the Psi basis, where
// Psi_(i,j) = rho_ji, so that (A rho B)_ji = sum_cd A_jc rho_cd B_di feeds
// M[(i,j), (d,c)].
class SuperoperatorBuilder {
 public:
  explicit SuperoperatorBuilder(const Basis& basis)
      : basis_(basis), m_(CMatrix::Zero(basis.dim(), basis.dim())) {}

  void sandwich(Complex coef, const CMatrix& a, const CMatrix& b) {
    if (coef == Complex(0.0)) return;
    const int l = basis_.levels();
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        const int row = basis_.index(i, j);
        for (int c = 0; c < l; ++c) {
          const Complex ajc = a(j, c);
          if (ajc == Complex(0.0)) continue;
          for (int d = 0; d < l; ++d) {
            const Complex bdi = b(d, i);
            if (bdi == Complex(0.0)) continue;
            m_(row, basis_.index(d, c)) += coef * ajc * bdi;
          }
        }
      }
    }
  }

  void left(Complex coef, const CMatrix& a) { sandwich(coef, a, identity()); }
  void right(Complex coef, const CMatrix& b) { sandwich(coef, identity(), b); }
  void anticommutator(Complex coef, const CMatrix& a) {
    left(coef, a);
    right(coef, a);
  }

  CMatrix take() && { return std::move(m_); }

 private:
  CMatrix identity() const { return CMatrix::Identity(basis_.levels(), basis_.levels()); }

  const Basis& basis_;
  CMatrix m_;
};

// |a><b|
CMatrix transition(int levels, int a, int b) {
  CMatrix out = CMatrix::Zero(levels, levels);
  out(a, b) = 1.0;
  return out;
}

}  // namespace

Liouvillian build_liouvillian(const EmitterModel& model) {
  auto basis = std::make_shared<const Basis>(model.n_excited());
  const int l = basis->levels();
  const int n = model.n_excited();
  SuperoperatorBuilder sb(*basis);

  auto raise = [l](int i) { return transition(l, i, 0); };  // S+_i = A_i0
  auto lower = [l](int i) { return transition(l, 0, i); };  // S-_i = A_0i

  // -i [H0, rho]
  CMatrix h0 = CMatrix::Zero(l, l);
  for (int i = 1; i <= n; ++i) h0(i, i) = model.omega(i);
  sb.left(-kI, h0);
  sb.right(kI, h0);

  for (int i = 1; i <= n; ++i) {
    // radiative width gamma_i + r_i on the lowering channel
    const double down = model.gamma(i) + model.excitation(i);
    sb.anticommutator(-0.5 * down, raise(i) * lower(i));
    sb.sandwich(down, lower(i), raise(i));

    // incoherent excitation
    const double up = model.excitation(i);
    sb.anticommutator(-0.5 * up, lower(i) * raise(i));
    sb.sandwich(up, raise(i), lower(i));
  }

  // Pump cross terms, no secular approximation:
  //   -r_ij ( 1/2 {S+_i S-_j + S-_j S+_i, rho} - S-_j rho S+_i - S+_i rho S-_j )
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const double rij = model.pump_rate(i, j);
      if (rij == 0.0) continue;
      sb.anticommutator(-0.5 * rij, raise(i) * lower(j) + lower(j) * raise(i));
      sb.sandwich(rij, lower(j), raise(i));
      sb.sandwich(rij, raise(i), lower(j));
    }
  }

  // Nonradiative relaxation upper -> lower: rate * (A_lu rho A_ul - 1/2 {A_uu, rho})
  for (const NrChannel& ch : model.nr_channels()) {
    sb.sandwich(ch.rate, transition(l, ch.lower, ch.upper), transition(l, ch.upper, ch.lower));
    sb.anticommutator(-0.5 * ch.rate, transition(l, ch.upper, ch.upper));
  }

  return Liouvillian(std::move(basis), std::move(sb).take());
}

// ---------------------------------------------------------------------------
// Initial states

PureStateSpec preset_state_spec(int n_excited, std::string_view preset) {
  const int levels = n_excited + 1;
  PureStateSpec spec;
  spec.amplitudes.assign(static_cast<std::size_t>(levels), 0.0);
  spec.phases.assign(static_cast<std::size_t>(levels), 0.0);
  if (preset == "ground") {
    spec.amplitudes[0] = 1.0;
  } else if (preset.starts_with("excited-")) {
    int k = -1;
    try {
      k = std::stoi(std::string(preset.substr(8)));
    } catch (const std::exception&) {
      k = -1;
    }
    if (k < 1 || k > n_excited) {
      throw Error(ErrorCode::IndexOutOfRange, "preset '" + std::string(preset) + "' names no excited level");
    }
    spec.amplitudes[static_cast<std::size_t>(k)] = 1.0;
  } else if (preset == "superposition-01") {
    spec.amplitudes[0] = spec.amplitudes[1] = 1.0 / std::numbers::sqrt2;
  } else if (preset == "equal" || preset == "equal-pi") {
    const double c = 1.0 / std::sqrt(static_cast<double>(levels));
    spec.amplitudes.assign(static_cast<std::size_t>(levels), c);
    if (preset == "equal-pi") spec.phases.back() = std::numbers::pi;
  } else {
    throw Error(ErrorCode::IndexOutOfRange, "unknown initial-state preset '" + std::string(preset) + "'");
  }
  return spec;
}

StateVector initial_state(std::shared_ptr<const Basis> basis, const PureStateSpec& spec) {
  const int levels = basis->levels();
  if (static_cast<int>(spec.amplitudes.size()) > levels || static_cast<int>(spec.phases.size()) > levels) {
    throw Error(ErrorCode::IndexOutOfRange, "initial state names more than " + std::to_string(levels) + " levels");
  }
  CVector psi = CVector::Zero(levels);
  for (std::size_t i = 0; i < spec.amplitudes.size(); ++i) {
    const double phase = i < spec.phases.size() ? spec.phases[i] : 0.0;
    psi(static_cast<int>(i)) = std::polar(spec.amplitudes[i], phase);
  }
  const double norm = psi.squaredNorm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormalizationTolerance) {
    std::ostringstream os;
    os << "sum |c_i|^2 = " << norm << ", expected 1";
    throw Error(ErrorCode::NotNormalized, os.str());
  }
  const CMatrix rho = psi * psi.adjoint();
  return StateVector::from_density_matrix(std::move(basis), rho);
}

StateVector initial_state(std::shared_ptr<const Basis> basis, std::string_view preset) {
  const int n = basis->n_excited();
  return initial_state(std::move(basis), preset_state_spec(n, preset));
}

}  // namespace clemit
