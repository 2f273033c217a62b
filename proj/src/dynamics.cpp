#include "clemit/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace clemit {

namespace {

double one_norm(const CMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Pade coefficients b_0..b_m for exp.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                                           2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
    10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
    960960.0,            16380.0,             182.0,              1.0};

// Largest 1-norm for which the degree-m approximant meets unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
void low_degree_terms(const CMatrix& a, const std::array<double, N>& b, CMatrix& u, CMatrix& v) {
  const Eigen::Index n = a.rows();
  const CMatrix ident = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a;
  CMatrix odd = b[1] * ident;
  CMatrix even = b[0] * ident;
  CMatrix power = ident;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    odd += b[k + 1] * power;
  }
  u = a * odd;
  v = std::move(even);
}

void degree13_terms(const CMatrix& a, CMatrix& u, CMatrix& v) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const CMatrix ident = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a;
  const CMatrix a4 = a2 * a2;
  const CMatrix a6 = a4 * a2;
  const CMatrix inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  u = a * inner_u;
  v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
}

}  // namespace

CMatrix matrix_exponential(const CMatrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::IndexOutOfRange, "matrix exponential needs a square matrix");
  }
  if (!a.allFinite()) throw Error(ErrorCode::NonFinite, "matrix exponential input has non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  const double norm = one_norm(a);
  CMatrix u;
  CMatrix v;
  int squarings = 0;
  if (norm <= kTheta3) {
    low_degree_terms(a, kPade3, u, v);
  } else if (norm <= kTheta5) {
    low_degree_terms(a, kPade5, u, v);
  } else if (norm <= kTheta7) {
    low_degree_terms(a, kPade7, u, v);
  } else if (norm <= kTheta9) {
    low_degree_terms(a, kPade9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
    degree13_terms(a / std::ldexp(1.0, squarings), u, v);
  }

  CMatrix result = (v - u).partialPivLu().solve(v + u);
  for (int s = 0; s < squarings; ++s) result = result * result;

  if (!result.allFinite()) {
    throw Error(ErrorCode::ConvergenceFailure, "matrix exponential overflowed");
  }
  return result;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const Liouvillian& generator, double step)
    : step_(step), matrix_(matrix_exponential(generator.matrix() * step)) {}

Trajectory::Trajectory(std::vector<double> times, std::vector<StateVector> states)
    : times_(std::move(times)), states_(std::move(states)) {
  if (times_.size() != states_.size()) {
    throw Error(ErrorCode::GridMismatch, "trajectory has different numbers of times and states");
  }
  uniform_step_ = uniform_grid_step(times_);
}

std::vector<double> Trajectory::populations(int i) const {
  std::vector<double> out;
  out.reserve(states_.size());
  for (const auto& s : states_) out.push_back(s.population(i));
  return out;
}

std::vector<double> Trajectory::coherence_magnitudes(int i, int j) const {
  std::vector<double> out;
  out.reserve(states_.size());
  for (const auto& s : states_) out.push_back(std::abs(s.rho(i, j)));
  return out;
}

double uniform_grid_step(std::span<const double> times) {
  if (times.size() < 2) return 0.0;
  const double span = times.back() - times.front();
  const double step = span / static_cast<double>(times.size() - 1);
  if (!(step > 0.0)) return 0.0;
  const double tol = 1e-12 * std::max(1.0, std::abs(times.back()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - (times.front() + static_cast<double>(k) * step)) > tol) return 0.0;
  }
  return step;
}

std::vector<double> uniform_grid(double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<double>(k) * step;
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) out[k] = lo + static_cast<double>(k) * step;
  if (count > 1) out.back() = hi;
  return out;
}

Trajectory propagate(const Liouvillian& generator, const StateVector& psi0, std::span<const double> times) {
  if (psi0.entries().size() != generator.dim()) {
    throw Error(ErrorCode::GridMismatch, "initial state dimension does not match the Liouvillian");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || times[k] < 0.0 || (k > 0 && times[k] < times[k - 1])) {
      throw Error(ErrorCode::GridMismatch, "time grid must be finite, non-negative and monotone");
    }
  }

  std::vector<StateVector> states;
  states.reserve(times.size());
  const auto& basis = psi0.basis_ptr();

  const double step = uniform_grid_step(times);
  if (step > 0.0) {
    const Propagator prop(generator, step);
    CVector v = times.front() == 0.0
                    ? psi0.entries()
                    : CVector(matrix_exponential(generator.matrix() * times.front()) * psi0.entries());
    states.emplace_back(basis, v);
    for (std::size_t k = 1; k < times.size(); ++k) {
      v = prop.apply(v);
      states.emplace_back(basis, v);
    }
  } else {
    for (const double t : times) {
      if (t == 0.0) {
        states.push_back(psi0);
      } else {
        states.emplace_back(basis, matrix_exponential(generator.matrix() * t) * psi0.entries());
      }
    }
  }
  return Trajectory(std::vector<double>(times.begin(), times.end()), std::move(states));
}

StateVector steady_state(const Liouvillian& generator) {
  const CMatrix& m = generator.matrix();
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();  // descending
  const double scale = std::max(1.0, sigma(0));
  const double tol = kKernelTolerance * scale;

  int kernel = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) <= tol) ++kernel;
  }
  if (kernel > 1) {
    throw Error(ErrorCode::DegenerateKernel,
                "Liouvillian kernel has dimension " + std::to_string(kernel) + "; steady state is not unique");
  }
  if (kernel == 0) {
    std::ostringstream os;
    os << "smallest singular value " << sigma(sigma.size() - 1) << " exceeds kernel tolerance " << tol;
    throw Error(ErrorCode::NoSteadyState, os.str());
  }

  CVector v = svd.matrixV().col(m.cols() - 1);
  const Complex tr = generator.trace_functional() * v;
  if (std::abs(tr) < 1e-12) {
    throw Error(ErrorCode::NoSteadyState, "null vector of the Liouvillian is traceless");
  }
  v /= tr;
  return StateVector(generator.basis_ptr(), std::move(v));
}

}  // namespace clemit
