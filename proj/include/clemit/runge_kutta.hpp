#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "clemit/types.hpp"

namespace clemit {

struct RkOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  std::size_t max_steps = 10'000'000;
};

struct RkStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of dy/dt = f(t, y), reporting y
/// at each of the monotone output `times` (the first of which is the
/// starting time). `State` is any Eigen dense type.
///
/// Verification integrator; production propagation uses the matrix
/// exponential.
template <class State, class Rhs>
std::vector<State> integrate_adaptive(Rhs&& f, State y0, std::span<const double> times,
                                      const RkOptions& opt = {}, RkStats* stats = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<State> out;
  if (times.empty()) return out;
  out.reserve(times.size());
  out.push_back(y0);

  State y = std::move(y0);
  double t = times[0];
  double h = opt.initial_step;
  State k1 = f(t, y);
  std::size_t steps = 0;

  for (std::size_t n = 1; n < times.size(); ++n) {
    const double target = times[n];
    while (t < target) {
      if (++steps > opt.max_steps) {
        throw Error(ErrorCode::ConvergenceFailure, "Runge-Kutta step budget exhausted");
      }
      bool last = false;
      const double h_free = h;
      if (t + h >= target) {
        h = target - t;
        last = true;
      }
      const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
      const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
      const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
      const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
      State next = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + h, next);
      const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const auto scale = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(next.cwiseAbs()).array()).eval();
      const double ratio = (err.cwiseAbs().array() / scale).maxCoeff();
      if (!std::isfinite(ratio)) {
        throw Error(ErrorCode::NonFinite, "Runge-Kutta error estimate is not finite");
      }

      const double factor = std::clamp(0.9 * std::pow(std::max(ratio, 1e-12), -0.2), 0.2, 5.0);
      if (ratio <= 1.0) {
        t = last ? target : t + h;
        y = std::move(next);
        k1 = k7;  // first-same-as-last
        if (stats) ++stats->accepted;
        h = last ? std::max(h_free, h * factor) : h * factor;
      } else {
        if (stats) ++stats->rejected;
        h *= factor;
        if (h < opt.min_step) {
          throw Error(ErrorCode::ConvergenceFailure, "Runge-Kutta step size underflow");
        }
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace clemit
