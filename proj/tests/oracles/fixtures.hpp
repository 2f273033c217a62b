#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "clemit/model.hpp"

namespace fixture {

/// Equal-rate V-system with gamma = 1 and gamma_nr = 3 on the default channels.
inline clemit::ModelParams v_system(double omega_21, double omega_32, double r, double p) {
  clemit::ModelParams params;
  params.n_excited = 3;
  params.omega = clemit::v_system_frequencies(omega_21, omega_32);
  params.gamma_rad = {1.0, 1.0, 1.0};
  params.excitation = {r, r, r};
  params.p_interf = p;
  params.gamma_nr = 3.0;
  params.nr_channels = clemit::default_nr_channels(3);
  return params;
}

struct Named {
  std::string name;
  clemit::ModelParams params;
};

/// Every parameter set used by the figure presets, for both p = 0 and p = 1.
inline std::vector<Named> figure_models() {
  std::vector<Named> out;
  for (double p : {0.0, 1.0}) {
    const std::string tag = p == 0.0 ? " p=0" : " p=1";
    out.push_back({"near-degenerate" + tag, v_system(0.05, 0.05, 5.0, p)});
    out.push_back({"w21=50" + tag, v_system(50.0, 0.05, 5.0, p)});
    out.push_back({"w21=w32=50" + tag, v_system(50.0, 50.0, 5.0, p)});
    out.push_back({"w21=100" + tag, v_system(100.0, 0.05, 5.0, p)});
    out.push_back({"w21=50 r=0.5" + tag, v_system(50.0, 0.05, 0.5, p)});
    out.push_back({"w21=50 r=1" + tag, v_system(50.0, 0.05, 1.0, p)});
  }
  return out;
}

inline std::shared_ptr<const clemit::Basis> basis(int n) { return std::make_shared<const clemit::Basis>(n); }

/// Random density matrix (normalised Gram matrix).
inline clemit::CMatrix random_density(int levels, std::mt19937& rng) {
  std::normal_distribution<double> g;
  clemit::CMatrix a(levels, levels);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) a(i, j) = {g(rng), g(rng)};
  }
  clemit::CMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

/// Random valid model: positive rates, p in [-0.5, 1] (PSD for equal rates
/// when p >= -1/(n-1)), random frequencies.
inline clemit::ModelParams random_params(int n, std::mt19937& rng, bool equal_pump) {
  std::uniform_real_distribution<double> rate(0.1, 6.0);
  std::uniform_real_distribution<double> freq(-60.0, 60.0);
  std::uniform_real_distribution<double> interf(-1.0 / std::max(1, n - 1), 1.0);
  clemit::ModelParams params;
  params.n_excited = n;
  const double r = rate(rng);
  for (int i = 0; i < n; ++i) {
    params.omega.push_back(freq(rng));
    params.gamma_rad.push_back(rate(rng));
    params.excitation.push_back(equal_pump ? r : rate(rng));
  }
  params.p_interf = equal_pump ? interf(rng) : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  params.gamma_nr = rate(rng);
  params.nr_channels = clemit::default_nr_channels(n);
  return params;
}

}  // namespace fixture
