#include <doctest.h>

#include <cmath>
#include <random>

#include "clemit/dynamics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace clemit;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

ModelParams two_level(double gamma, double r) {
  ModelParams params;
  params.n_excited = 1;
  params.omega = {0.0};
  params.gamma_rad = {gamma};
  params.excitation = {r};
  return params;
}

}  // namespace

TEST_CASE("matrix exponential") {
  SUBCASE("zero and diagonal") {
    CHECK(max_abs(matrix_exponential(CMatrix::Zero(5, 5)) - CMatrix::Identity(5, 5)) == 0.0);
    CMatrix d = CMatrix::Zero(3, 3);
    d(0, 0) = -1.0;
    d(1, 1) = -2.0;
    d(2, 2) = Complex(0.0, 3.0);
    const CMatrix e = matrix_exponential(d);
    CHECK(std::abs(e(0, 0) - std::exp(-1.0)) < 1e-15);
    CHECK(std::abs(e(1, 1) - std::exp(-2.0)) < 1e-15);
    CHECK(std::abs(e(2, 2) - std::exp(Complex(0.0, 3.0))) < 1e-14);
  }
  SUBCASE("random 16x16 against a scaled Taylor series") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    for (double scale : {0.01, 0.5, 2.0, 10.0}) {
      CMatrix a(16, 16);
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) a(i, j) = Complex(g(rng), g(rng));
      }
      a *= scale / a.cwiseAbs().colwise().sum().maxCoeff();
      // shift the spectrum into the left half plane like a Liouvillian
      a -= CMatrix::Identity(16, 16) * scale;
      const CMatrix ref = oracle::taylor_exponential(a);
      CAPTURE(scale);
      CHECK(max_abs(matrix_exponential(a) - ref) <= 1e-10 * std::max(1.0, max_abs(ref)));
    }
  }
  SUBCASE("Liouvillians against a scaled Taylor series") {
    for (const auto& fig : fixture::figure_models()) {
      const Liouvillian l = build_liouvillian(build_model(fig.params));
      for (double t : {0.002, 0.1, 1.0}) {
        const CMatrix a = l.matrix() * t;
        CAPTURE(fig.name);
        CAPTURE(t);
        CHECK(max_abs(matrix_exponential(a) - oracle::taylor_exponential(a)) <= 1e-10);
      }
    }
  }
  SUBCASE("non-finite input") {
    CMatrix a = CMatrix::Zero(2, 2);
    a(0, 1) = std::nan("");
    CHECK(code_of([&] { matrix_exponential(a); }) == ErrorCode::NonFinite);
  }
  SUBCASE("overflow") {
    CMatrix a = CMatrix::Identity(2, 2) * 1000.0;
    CHECK(code_of([&] { matrix_exponential(a); }) == ErrorCode::ConvergenceFailure);
  }
}

TEST_CASE("propagator semigroup") {
  const Liouvillian l = build_liouvillian(build_model(fixture::v_system(50.0, 0.05, 5.0, 1.0)));
  const Propagator half(l, 0.05);
  const Propagator full(l, 0.1);
  CHECK(max_abs(half.matrix() * half.matrix() - full.matrix()) < 1e-13);
  CHECK(max_abs(Propagator(l, 0.0).matrix() - CMatrix::Identity(16, 16)) == 0.0);
}

TEST_CASE("propagation basics") {
  const Liouvillian l = build_liouvillian(build_model(fixture::v_system(0.05, 0.05, 5.0, 1.0)));
  const StateVector psi0 = initial_state(l.basis_ptr(), "ground");

  SUBCASE("t = 0 returns the initial state") {
    const std::vector<double> times{0.0};
    const Trajectory traj = propagate(l, psi0, times);
    CHECK((traj.at(0).entries() - psi0.entries()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("uniform and non-uniform grids agree") {
    const std::vector<double> uniform = linspace(0.0, 2.0, 21);
    const std::vector<double> irregular{0.0, 0.1, 0.35, 1.0, 2.0};
    const Trajectory a = propagate(l, psi0, uniform);
    const Trajectory b = propagate(l, psi0, irregular);
    CHECK(a.uniform_step() == doctest::Approx(0.1));
    CHECK(b.uniform_step() == 0.0);
    CHECK((a.at(20).entries() - b.at(4).entries()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.at(10).entries() - b.at(3).entries()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("bad grids") {
    const std::vector<double> back{0.0, 1.0, 0.5};
    const std::vector<double> negative{-1.0, 0.0};
    CHECK(code_of([&] { propagate(l, psi0, back); }) == ErrorCode::GridMismatch);
    CHECK(code_of([&] { propagate(l, psi0, negative); }) == ErrorCode::GridMismatch);
  }
  SUBCASE("coherences rise from zero to a maximum then settle to a nonzero value") {
    const std::vector<double> times = linspace(0.0, 20.0, 2001);
    const Trajectory traj = propagate(l, psi0, times);
    for (const auto& [i, j] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) {
      const auto c = traj.coherence_magnitudes(i, j);
      CHECK(c.front() == 0.0);
      const auto peak = std::max_element(c.begin(), c.end());
      CHECK(peak != c.begin());
      CHECK(peak - c.begin() < 100);
      CHECK(c.back() < 0.8 * *peak);
      CHECK(c.back() > 1e-3);
    }
  }
}

TEST_CASE("two-level reduction") {
  for (double r : {0.5, 1.0, 5.0}) {
    const Liouvillian l = build_liouvillian(build_model(two_level(1.0, r)));
    CHECK(steady_state(l).population(1) == doctest::Approx(r / (1.0 + 2.0 * r)).epsilon(1e-10));
  }
  const Liouvillian l = build_liouvillian(build_model(two_level(1.0, 0.0)));
  const std::vector<double> times = linspace(0.0, 10.0, 101);
  const Trajectory traj = propagate(l, initial_state(l.basis_ptr(), "excited-1"), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(std::abs(traj.at(k).population(1) - std::exp(-times[k])) < 1e-12);
  }
}

TEST_CASE("steady state") {
  SUBCASE("matches long-time propagation for the figure models") {
    for (const auto& fig : fixture::figure_models()) {
      CAPTURE(fig.name);
      const Liouvillian l = build_liouvillian(build_model(fig.params));
      const StateVector ss = steady_state(l);
      CHECK((l.matrix() * ss.entries()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(std::abs(ss.trace() - 1.0) < 1e-12);
      const std::vector<double> times{0.0, 100.0};
      const Trajectory traj = propagate(l, initial_state(l.basis_ptr(), "ground"), times);
      CHECK((traj.at(1).entries() - ss.entries()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("closed system has a degenerate kernel") {
    auto params = fixture::v_system(0.3, 0.7, 0.0, 0.0);
    params.gamma_rad = {0.0, 0.0, 0.0};
    params.gamma_nr = 0.0;
    const Liouvillian l = build_liouvillian(build_model(params));
    CHECK(code_of([&] { steady_state(l); }) == ErrorCode::DegenerateKernel);
  }
  SUBCASE("no kernel") {
    const auto basis = fixture::basis(1);
    const Liouvillian l(basis, -CMatrix::Identity(4, 4));
    CHECK(code_of([&] { steady_state(l); }) == ErrorCode::NoSteadyState);
  }
}

TEST_CASE("direct Runge-Kutta integration agrees with the exponential") {
  for (const auto& params : {fixture::v_system(0.05, 0.05, 5.0, 1.0), fixture::v_system(50.0, 50.0, 1.0, 0.5)}) {
    const EmitterModel model = build_model(params);
    const Liouvillian l = build_liouvillian(model);
    const StateVector psi0 = initial_state(l.basis_ptr(), "equal-pi");
    const std::vector<double> times = linspace(0.0, 3.0, 31);
    const Trajectory traj = propagate(l, psi0, times);
    const auto rk = oracle::integrate_rho(model, psi0.density_matrix(), times);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      worst = std::max(worst, max_abs(traj.at(k).density_matrix() - rk[k]));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("Runge-Kutta integrator on a scalar problem") {
  RkStats stats;
  const std::vector<double> times{0.0, 0.5, 1.0, 4.0};
  Eigen::VectorXd y0(2);
  y0 << 1.0, 0.0;
  auto rhs = [](double, const Eigen::VectorXd& y) {
    Eigen::VectorXd d(2);
    d << y(1), -y(0);
    return d;
  };
  const auto out = integrate_adaptive(rhs, y0, std::span<const double>(times), RkOptions{}, &stats);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(std::abs(out[k](0) - std::cos(times[k])) < 1e-9);
    CHECK(std::abs(out[k](1) + std::sin(times[k])) < 1e-9);
  }
  CHECK(stats.accepted > 0);
}

TEST_CASE("CPTP over random models and states") {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 12; ++trial) {
    const EmitterModel model = build_model(fixture::random_params(1 + trial % 4, rng, trial % 2 == 0));
    const Liouvillian l = build_liouvillian(model);
    const CMatrix rho0 = fixture::random_density(model.levels(), rng);
    const StateVector psi0 = StateVector::from_density_matrix(l.basis_ptr(), rho0);
    const std::vector<double> times = linspace(0.0, 5.0, 51);
    const Trajectory traj = propagate(l, psi0, times);
    for (const auto& s : traj.states()) {
      CHECK(std::abs(s.trace() - 1.0) < 1e-10);
      CHECK(s.hermiticity_defect() < 1e-10);
      CHECK(s.min_eigenvalue() > -1e-8);
    }
  }
}
