#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "clemit/model.hpp"
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

/// Psi from rho using <A_ij> = rho_ji, independent of StateVector.
CVector psi_of(const Basis& basis, const CMatrix& rho) {
  CVector psi(basis.dim());
  for (int k = 0; k < basis.dim(); ++k) {
    const auto [i, j] = basis.pair(k);
    psi(k) = rho(j, i);
  }
  return psi;
}

}  // namespace

TEST_CASE("basis ordering for three excited levels") {
  const Basis basis(3);
  const std::vector<std::pair<int, int>> expected{{1, 1}, {2, 2}, {3, 3}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3},
                                                  {3, 2}, {1, 0}, {0, 1}, {2, 0}, {0, 2}, {3, 0}, {0, 3}, {0, 0}};
  CHECK(basis.dim() == 16);
  CHECK(basis.pairs() == expected);
  for (int k = 0; k < 16; ++k) CHECK(basis.index(expected[k].first, expected[k].second) == k);
  CHECK(code_of([&] { basis.index(4, 0); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { basis.index(-1, 0); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("basis covers every pair once for other sizes") {
  for (int n : {1, 2, 4, 5}) {
    const Basis basis(n);
    CHECK(basis.dim() == (n + 1) * (n + 1));
    std::vector<int> seen(static_cast<std::size_t>(basis.dim()), 0);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) ++seen[static_cast<std::size_t>(basis.index(i, j))];
    }
    for (int c : seen) CHECK(c == 1);
    CHECK(basis.pair(basis.dim() - 1) == std::pair{0, 0});
  }
}

TEST_CASE("build_model rejects invalid parameters") {
  SUBCASE("negative excitation rate") {
    auto params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.excitation[1] = -2.0;
    try {
      build_model(params);
      FAIL("expected NegativeRate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NegativeRate);
      CHECK(std::string(e.what()).find("excitation[1]") != std::string::npos);
    }
  }
  SUBCASE("negative radiative and nonradiative rates") {
    auto params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.gamma_rad[0] = -1.0;
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::NegativeRate);
    params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.gamma_nr = -0.1;
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::NegativeRate);
  }
  SUBCASE("interference outside [-1, 1]") {
    CHECK(code_of([] { build_model(fixture::v_system(0.05, 0.05, 5.0, 1.2)); }) ==
          ErrorCode::InterferenceOutOfRange);
    CHECK(code_of([] { build_model(fixture::v_system(0.05, 0.05, 5.0, -1.01)); }) ==
          ErrorCode::InterferenceOutOfRange);
  }
  SUBCASE("bad nonradiative channel") {
    auto params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.nr_channels = {{1, 2}};
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::BadChannel);
    params.nr_channels = {{4, 1}};
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::BadChannel);
    params.nr_channels = {{2, 0}};
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::BadChannel);
  }
  SUBCASE("length mismatch and non-finite values") {
    auto params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.omega.pop_back();
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::IndexOutOfRange);
    params = fixture::v_system(0.05, 0.05, 5.0, 0.0);
    params.omega[0] = std::nan("");
    CHECK(code_of([&] { build_model(params); }) == ErrorCode::NonFinite);
  }
}

TEST_CASE("pump matrix positivity") {
  // Equal rates: eigenvalues r(1 - p) (twice) and r(1 + 2p).
  SUBCASE("p = -0.8 fails with eigenvalue r(1 + 2p)") {
    try {
      build_model(fixture::v_system(0.05, 0.05, 5.0, -0.8));
      FAIL("expected PumpMatrixNotPSD");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PumpMatrixNotPSD);
      CHECK(std::string(e.what()).find("-3") != std::string::npos);
    }
  }
  SUBCASE("boundary p = -1/2 passes, just below fails") {
    CHECK_NOTHROW(build_model(fixture::v_system(0.05, 0.05, 5.0, -0.5)));
    CHECK(code_of([] { build_model(fixture::v_system(0.05, 0.05, 5.0, -0.51)); }) ==
          ErrorCode::PumpMatrixNotPSD);
  }
  SUBCASE("p = 1 with zero pump is valid") { CHECK_NOTHROW(build_model(fixture::v_system(0.05, 0.05, 0.0, 1.0))); }
  SUBCASE("pump rate entries") {
    auto params = fixture::v_system(0.05, 0.05, 5.0, 0.5);
    params.excitation = {1.0, 4.0, 9.0};
    const EmitterModel model = build_model(params);
    CHECK(model.pump_rate(1, 1) == doctest::Approx(1.0));
    CHECK(model.pump_rate(1, 3) == doctest::Approx(0.5 * 3.0));
    CHECK(model.pump_rate(2, 3) == doctest::Approx(0.5 * 6.0));
    CHECK(model.pump_matrix().isApprox(model.pump_matrix().transpose()));
  }
}

TEST_CASE("rotating-frame frequencies") {
  const auto w = v_system_frequencies(50.0, 0.05);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == -50.0);
  CHECK(w[1] == 0.0);
  CHECK(w[2] == 0.05);
  CHECK(default_nr_channels(3) == std::vector<std::pair<int, int>>{{3, 1}, {3, 2}, {2, 1}});
}

TEST_CASE("Liouvillian matches the operator-product master equation") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4;
    const EmitterModel model = build_model(fixture::random_params(n, rng, trial % 2 == 0));
    const Liouvillian l = build_liouvillian(model);
    const CMatrix rho = fixture::random_density(n + 1, rng);
    const CVector lhs = l.matrix() * psi_of(l.basis(), rho);
    const CVector rhs = psi_of(l.basis(), oracle::master_rhs(model, rho));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, l.matrix().cwiseAbs().maxCoeff()));
  }
  for (const auto& fig : fixture::figure_models()) {
    CAPTURE(fig.name);
    const EmitterModel model = build_model(fig.params);
    const Liouvillian l = build_liouvillian(model);
    const CMatrix rho = fixture::random_density(4, rng);
    const CVector diff = l.matrix() * psi_of(l.basis(), rho) - psi_of(l.basis(), oracle::master_rhs(model, rho));
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("trace functional annihilates M") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const EmitterModel model = build_model(fixture::random_params(1 + trial % 4, rng, true));
    const Liouvillian l = build_liouvillian(model);
    CHECK((l.trace_functional() * l.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("two-level generator entries") {
  ModelParams params;
  params.n_excited = 1;
  params.omega = {2.0};
  params.gamma_rad = {1.0};
  params.excitation = {5.0};
  const Liouvillian l = build_liouvillian(build_model(params));
  const Basis& b = l.basis();
  // d rho_11/dt = r rho_00 - (gamma + r) rho_11
  CHECK(l.matrix()(b.index(1, 1), b.index(0, 0)).real() == doctest::Approx(5.0));
  CHECK(l.matrix()(b.index(1, 1), b.index(1, 1)).real() == doctest::Approx(-6.0));
  // d<A_10>/dt = (i omega - (gamma + 2 r)/2) <A_10>
  const Complex diag = l.matrix()(b.index(1, 0), b.index(1, 0));
  CHECK(diag.real() == doctest::Approx(-5.5));
  CHECK(diag.imag() == doctest::Approx(2.0));
}

TEST_CASE("closed system has a purely oscillatory generator") {
  auto params = fixture::v_system(0.3, 0.7, 0.0, 0.0);
  params.gamma_rad = {0.0, 0.0, 0.0};
  params.gamma_nr = 0.0;
  const Liouvillian l = build_liouvillian(build_model(params));
  const Eigen::ComplexEigenSolver<CMatrix> es(l.matrix());
  CHECK(es.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-12);
  const Basis& b = l.basis();
  for (int i = 0; i <= 3; ++i) CHECK(l.matrix().row(b.index(i, i)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("p = 0 decouples populations from excited coherences") {
  const Liouvillian l = build_liouvillian(build_model(fixture::v_system(0.05, 0.05, 5.0, 0.0)));
  const Basis& b = l.basis();
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) {
      if (i == j) continue;
      for (int k = 0; k <= 3; ++k) CHECK(std::abs(l.matrix()(b.index(i, j), b.index(k, k))) == 0.0);
    }
  }
}

TEST_CASE("initial states") {
  auto basis = fixture::basis(3);
  SUBCASE("ground") {
    const StateVector s = initial_state(basis, "ground");
    CHECK(s.average(0, 0) == Complex(1.0));
    CHECK(s.entries().cwiseAbs().sum() == doctest::Approx(1.0));
  }
  SUBCASE("superposition of ground and level 1") {
    const StateVector s = initial_state(basis, "superposition-01");
    CHECK(s.rho(0, 0).real() == doctest::Approx(0.5));
    CHECK(s.rho(1, 1).real() == doctest::Approx(0.5));
    CHECK(s.rho(0, 1).real() == doctest::Approx(0.5));
    CHECK(s.rho(2, 2).real() == doctest::Approx(0.0));
  }
  SUBCASE("equal weights with a pi phase on level 3") {
    const StateVector s = initial_state(basis, "equal-pi");
    CHECK(std::abs(s.rho(1, 2) - Complex(0.25)) < 1e-15);
    CHECK(std::abs(s.rho(1, 3) - Complex(-0.25)) < 1e-15);
    CHECK(std::abs(s.rho(2, 3) - Complex(-0.25)) < 1e-15);
    CHECK(std::abs(s.rho(0, 3) - Complex(-0.25)) < 1e-15);
    for (int i = 0; i <= 3; ++i) CHECK(s.population(i) == doctest::Approx(0.25));
  }
  SUBCASE("explicit amplitudes and phases give rho_ij = c_i c_j e^{i(d_i - d_j)}") {
    const StateVector s = initial_state(basis, PureStateSpec{{0.5, 0.5, 0.5, 0.5}, {0.0, 0.3, 0.0, 1.1}});
    CHECK(std::abs(s.rho(1, 3) - 0.25 * std::exp(Complex(0, 0.3 - 1.1))) < 1e-15);
    CHECK(s.hermiticity_defect() < 1e-15);
    CHECK(std::abs(s.trace() - 1.0) < 1e-15);
    CHECK(s.min_eigenvalue() > -1e-12);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { initial_state(basis, PureStateSpec{{0.5, 0.5}, {}}); }) == ErrorCode::NotNormalized);
    CHECK(code_of([&] { initial_state(basis, PureStateSpec{{0, 0, 0, 0, 1}, {}}); }) ==
          ErrorCode::IndexOutOfRange);
    CHECK(code_of([&] { initial_state(basis, "excited-4"); }) == ErrorCode::IndexOutOfRange);
    CHECK_THROWS_AS(initial_state(basis, "no-such-state"), Error);
  }
}

TEST_CASE("density matrix round trip") {
  std::mt19937 rng(3);
  auto basis = fixture::basis(3);
  const CMatrix rho = fixture::random_density(4, rng);
  const StateVector s = StateVector::from_density_matrix(basis, rho);
  CHECK((s.density_matrix() - rho).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(s.rho(2, 1) - rho(2, 1)) < 1e-15);
  CHECK(std::abs(s.average(2, 1) - rho(1, 2)) < 1e-15);
}
