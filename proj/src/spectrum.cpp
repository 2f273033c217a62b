#include "clemit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "parallel.hpp"

namespace clemit {

namespace {

// Requested observation times as lattice indices k = t / h, sorted.
struct TimeLattice {
  double step = 0.0;
  std::vector<std::size_t> index;   // per requested time, in request order
  std::vector<std::size_t> order;   // request positions sorted by index
  std::size_t max_index = 0;
};

TimeLattice make_lattice(const SpectrumConfig& cfg) {
  TimeLattice lat;
  lat.step = cfg.step;
  for (const double t : cfg.times) {
    const double k = std::round(t / cfg.step);
    lat.index.push_back(static_cast<std::size_t>(k));
    lat.max_index = std::max(lat.max_index, lat.index.back());
  }
  lat.order.resize(cfg.times.size());
  for (std::size_t i = 0; i < lat.order.size(); ++i) lat.order[i] = i;
  std::stable_sort(lat.order.begin(), lat.order.end(),
                   [&](std::size_t a, std::size_t b) { return lat.index[a] < lat.index[b]; });
  return lat;
}

// g_j rows: G(j-1, index(i,0)) = gamma_ij, so that the spectral kernel is
// sum_j G.row(j-1) . Y^{0j}.
RMatrix emission_weights(const Basis& basis, const EmitterModel& model) {
  const RMatrix gamma = gamma_matrix(model);
  const int n = model.n_excited();
  RMatrix g = RMatrix::Zero(n, basis.dim());
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) g(j - 1, basis.index(i, 0)) = gamma(i - 1, j - 1);
  }
  return g;
}

SpectrumGrid empty_grid(const SpectrumConfig& cfg, std::string route) {
  SpectrumGrid grid;
  grid.omega = cfg.omega;
  grid.times = cfg.times;
  grid.values.assign(cfg.omega.size() * cfg.times.size(), 0.0);
  grid.route = std::move(route);
  return grid;
}

void check_trajectory(const Trajectory& traj, const TimeLattice& lat) {
  if (traj.size() < lat.max_index + 1 || traj.times().front() != 0.0) {
    throw Error(ErrorCode::GridMismatch, "trajectory must start at t = 0 and cover every requested time");
  }
  if (traj.size() > 1 && std::abs(traj.uniform_step() - lat.step) > 1e-12 * std::max(1.0, lat.step)) {
    throw Error(ErrorCode::GridMismatch, "trajectory step differs from the quadrature step");
  }
}

// Fills kernel[m] = sum_ij gamma_ij <A_i0(t2 + m h) A_0j(t2)> for t2 = l h and
// m = 0..kernel.size()-1.
using KernelSource = std::function<void(std::size_t l, std::vector<Complex>& kernel)>;

constexpr std::size_t kLanes = 16;
constexpr std::size_t kBlock = 8;

// Nested trapezoid over the triangle t2 + tau <= t. The t2 lattice is cut into
// blocks assigned round-robin to a fixed number of lanes; each lane sums its
// blocks in order and lanes are reduced in order, so the result does not
// depend on the thread count.
std::vector<Complex> trapezoid_accumulate(const SpectrumConfig& cfg, const TimeLattice& lat,
                                          const KernelSource& source) {
  const std::size_t n_w = cfg.omega.size();
  const std::size_t n_t = cfg.times.size();
  const double h = lat.step;
  const double big_gamma = cfg.filter_bandwidth;

  std::vector<double> decay(lat.max_index + 1);
  for (std::size_t m = 0; m < decay.size(); ++m) decay[m] = std::exp(-big_gamma * h * static_cast<double>(m));
  std::vector<Complex> phase_step(n_w);
  for (std::size_t w = 0; w < n_w; ++w) {
    phase_step[w] = std::exp(Complex(0.5 * big_gamma, -cfg.omega[w]) * h);
  }

  const std::size_t n_blocks = (lat.max_index + kBlock - 1) / kBlock;
  std::vector<std::vector<Complex>> lanes(kLanes, std::vector<Complex>(n_t * n_w));

  detail::parallel_for(kLanes, cfg.threads, [&](std::size_t lane) {
    auto& acc = lanes[lane];
    std::vector<Complex> kernel;
    for (std::size_t b = lane; b < n_blocks; b += kLanes) {
      const std::size_t l_end = std::min(lat.max_index, (b + 1) * kBlock);
      for (std::size_t l = b * kBlock; l < l_end; ++l) {
        kernel.assign(lat.max_index - l + 1, Complex(0.0));
        source(l, kernel);
        const double w_t2 = (l == 0 ? 0.5 : 1.0) * h;

        // first requested time strictly after t2
        std::size_t first = 0;
        while (first < lat.order.size() && lat.index[lat.order[first]] <= l) ++first;
        if (first == lat.order.size()) continue;

        for (std::size_t w = 0; w < n_w; ++w) {
          Complex phase = 1.0;
          Complex running = 0.0;
          std::size_t next = first;
          const std::size_t m_end = lat.index[lat.order.back()] - l;
          for (std::size_t m = 0; m <= m_end; ++m) {
            const Complex f = phase * kernel[m];
            running += f;
            while (next < lat.order.size() && lat.index[lat.order[next]] - l == m) {
              const Complex inner = h * (running - 0.5 * (kernel[0] + f));
              acc[lat.order[next] * n_w + w] += w_t2 * decay[m] * inner;
              ++next;
            }
            phase *= phase_step[w];
          }
        }
      }
    }
  });

  std::vector<Complex> total(n_t * n_w);
  for (const auto& lane : lanes) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += lane[k];
  }
  return total;
}

SpectrumGrid real_part(const SpectrumConfig& cfg, const std::vector<Complex>& acc, std::string route) {
  SpectrumGrid grid = empty_grid(cfg, std::move(route));
  for (std::size_t k = 0; k < acc.size(); ++k) grid.values[k] = acc[k].real();
  return grid;
}

// (exp(z L) - 1) / z, accurate for small |z L|.
Complex exp_integral(Complex z, double length) {
  const Complex x = z * length;
  if (std::abs(x) < 1e-4) {
    return length * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
  }
  return (std::exp(x) - 1.0) / z;
}

void check_same_axes(const SpectrumGrid& a, const SpectrumGrid& b) {
  if (a.omega != b.omega || a.times != b.times || a.values.size() != b.values.size()) {
    throw Error(ErrorCode::GridMismatch, "spectra do not share omega and time axes");
  }
}

}  // namespace

double SpectrumGrid::max_value() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const double v : values) {
    if (!std::isnan(v)) best = std::max(best, v);
  }
  return best;
}

void validate_spectrum_config(const SpectrumConfig& cfg) {
  if (!(cfg.filter_bandwidth > 0.0) || !std::isfinite(cfg.filter_bandwidth)) {
    throw Error(ErrorCode::ValidationFailed, "filter bandwidth must be positive");
  }
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) {
    throw Error(ErrorCode::ValidationFailed, "quadrature step must be positive");
  }
  if (cfg.omega.empty()) throw Error(ErrorCode::ValidationFailed, "omega grid is empty");
  if (cfg.times.empty()) throw Error(ErrorCode::ValidationFailed, "time grid is empty");
  double max_abs_omega = 0.0;
  for (std::size_t k = 0; k < cfg.omega.size(); ++k) {
    if (!std::isfinite(cfg.omega[k])) throw Error(ErrorCode::ValidationFailed, "omega grid has non-finite values");
    if (k > 0 && !(cfg.omega[k] > cfg.omega[k - 1])) {
      throw Error(ErrorCode::ValidationFailed, "omega grid must be strictly increasing");
    }
    max_abs_omega = std::max(max_abs_omega, std::abs(cfg.omega[k]));
  }
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    const double t = cfg.times[k];
    if (!std::isfinite(t) || t < 0.0) throw Error(ErrorCode::ValidationFailed, "times must be finite and >= 0");
    if (k > 0 && t < cfg.times[k - 1]) throw Error(ErrorCode::ValidationFailed, "times must be monotone");
    const double ratio = t / cfg.step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      std::ostringstream os;
      os << "time " << t << " is not a multiple of the step " << cfg.step;
      throw Error(ErrorCode::GridMismatch, os.str());
    }
  }
  const double limit = 1.0 / (10.0 * std::max({max_abs_omega, cfg.filter_bandwidth, 1.0}));
  if (cfg.step > limit * (1.0 + 1e-12) && !cfg.allow_coarse_grid) {
    std::ostringstream os;
    os << "step " << cfg.step << " exceeds " << limit << " = 1/(10 max(|omega|, Gamma, 1))";
    throw Error(ErrorCode::GridTooCoarse, os.str());
  }
}

RMatrix gamma_matrix(const EmitterModel& model) {
  const int n = model.n_excited();
  RMatrix g(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      g(i - 1, j - 1) = i == j ? 2.0 * model.gamma(i) : -std::sqrt(model.gamma(i) * model.gamma(j));
    }
  }
  return g;
}

Trajectory spectrum_trajectory(const Liouvillian& generator, const StateVector& psi0, const SpectrumConfig& cfg) {
  validate_spectrum_config(cfg);
  const TimeLattice lat = make_lattice(cfg);
  const auto grid = uniform_grid(cfg.step, lat.max_index + 1);
  return propagate(generator, psi0, grid);
}

SpectrumGrid spectrum_quadrature(const Liouvillian& generator, const Trajectory& traj, const SpectrumConfig& cfg,
                                 const EmitterModel& model) {
  validate_spectrum_config(cfg);
  const TimeLattice lat = make_lattice(cfg);
  if (lat.max_index == 0) return empty_grid(cfg, "quadrature");
  check_trajectory(traj, lat);

  const Basis& basis = generator.basis();
  const int n = basis.n_excited();
  const RMatrix weights = emission_weights(basis, model);
  std::vector<RegressionSeed> seeds;
  for (int j = 1; j <= n; ++j) seeds.push_back(regression_seed(basis, 0, j));
  const RegressionPropagator prop(generator, cfg.step);

  KernelSource source = [&](std::size_t l, std::vector<Complex>& kernel) {
    CMatrix block(basis.dim(), n);
    const CVector& psi = traj.at(l).entries();
    for (int j = 0; j < n; ++j) block.col(j) = seeds[static_cast<std::size_t>(j)].apply(psi);
    for (std::size_t m = 0; m < kernel.size(); ++m) {
      if (m > 0) prop.advance(block);
      Complex k = 0.0;
      for (int j = 0; j < n; ++j) k += (weights.row(j).transpose().cast<Complex>().cwiseProduct(block.col(j))).sum();
      kernel[m] = k;
    }
  };
  return real_part(cfg, trapezoid_accumulate(cfg, lat, source), "quadrature");
}

SpectrumGrid spectrum_quadrature(std::span<const CorrelationSlice> slices, const SpectrumConfig& cfg,
                                 const EmitterModel& model) {
  validate_spectrum_config(cfg);
  const TimeLattice lat = make_lattice(cfg);
  if (lat.max_index == 0) return empty_grid(cfg, "quadrature");

  const int n = model.n_excited();
  const RMatrix gamma = gamma_matrix(model);
  if (static_cast<int>(slices.size()) != n) {
    throw Error(ErrorCode::GridMismatch, "expected one correlation slice per excited level");
  }
  // positions[j][i]: entry position of (i+1, 0) in slice j
  std::vector<std::vector<std::size_t>> positions(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const CorrelationSlice& s = slices[static_cast<std::size_t>(j - 1)];
    if (s.m() != 0 || s.n() != j) {
      throw Error(ErrorCode::GridMismatch, "slice " + std::to_string(j - 1) + " is not the (0," +
                                               std::to_string(j) + ") seed");
    }
    if (s.t2_grid().size() < lat.max_index + 1 || s.tau_grid().size() < lat.max_index + 1) {
      throw Error(ErrorCode::GridMismatch, "correlation grids do not cover the requested times");
    }
    const double t2_step = uniform_grid_step(s.t2_grid());
    const double tau_step = uniform_grid_step(s.tau_grid());
    const double tol = 1e-12 * std::max(1.0, cfg.step);
    if (std::abs(t2_step - cfg.step) > tol || std::abs(tau_step - cfg.step) > tol) {
      throw Error(ErrorCode::GridMismatch, "correlation grid step differs from the quadrature step");
    }
    for (int i = 1; i <= n; ++i) {
      const int pos = s.entry_position(i, 0);
      if (pos < 0) throw Error(ErrorCode::GridMismatch, "slice lacks emission row (" + std::to_string(i) + ",0)");
      positions[static_cast<std::size_t>(j - 1)].push_back(static_cast<std::size_t>(pos));
    }
  }

  KernelSource source = [&](std::size_t l, std::vector<Complex>& kernel) {
    for (std::size_t m = 0; m < kernel.size(); ++m) {
      Complex k = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto& s = slices[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) {
          k += gamma(i, j) * s.at(l, m, positions[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        }
      }
      kernel[m] = k;
    }
  };
  return real_part(cfg, trapezoid_accumulate(cfg, lat, source), "quadrature");
}

SpectrumGrid spectrum_eigen(const Trajectory& traj, const Liouvillian& generator, const SpectrumConfig& cfg,
                            const EmitterModel& model, const EigenRouteOptions& opt) {
  validate_spectrum_config(cfg);
  const TimeLattice lat = make_lattice(cfg);
  if (lat.max_index == 0) return empty_grid(cfg, "eigen");
  check_trajectory(traj, lat);

  const Basis& basis = generator.basis();
  const int dim = basis.dim();
  const int n = basis.n_excited();

  Eigen::ComplexEigenSolver<CMatrix> es(generator.matrix());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigendecomposition of the Liouvillian failed");
  }
  const CMatrix& vecs = es.eigenvectors();
  const CVector& lambda = es.eigenvalues();
  const auto sv = Eigen::JacobiSVD<CMatrix>(vecs).singularValues();
  const double condition = sv(0) / sv(sv.size() - 1);
  if (!(condition <= opt.max_condition)) {
    if (opt.fallback) {
      SpectrumGrid grid = spectrum_quadrature(generator, traj, cfg, model);
      grid.route = "quadrature (eigenbasis fallback)";
      return grid;
    }
    std::ostringstream os;
    os << "eigenvector condition number " << condition << " exceeds " << opt.max_condition;
    throw Error(ErrorCode::IllConditionedEigenbasis, os.str());
  }
  const Eigen::PartialPivLU<CMatrix> lu(vecs);

  // Modal weights c(l, k) = sum_j (g_j^T V)_k (V^-1 T^{0j} Psi(t2_l))_k.
  const CMatrix weights_modal = emission_weights(basis, model).cast<Complex>() * vecs;  // n x dim
  std::vector<RegressionSeed> seeds;
  for (int j = 1; j <= n; ++j) seeds.push_back(regression_seed(basis, 0, j));
  CMatrix modal(dim, static_cast<Eigen::Index>(lat.max_index));
  for (std::size_t l = 0; l < lat.max_index; ++l) {
    CVector c = CVector::Zero(dim);
    const CVector& psi = traj.at(l).entries();
    for (int j = 0; j < n; ++j) {
      const CVector a = lu.solve(seeds[static_cast<std::size_t>(j)].apply(psi));
      c += weights_modal.row(j).transpose().cwiseProduct(a);
    }
    modal.col(static_cast<Eigen::Index>(l)) = c;
  }

  const double h = lat.step;
  const double big_gamma = cfg.filter_bandwidth;
  std::vector<double> decay(lat.max_index + 1);
  for (std::size_t m = 0; m < decay.size(); ++m) decay[m] = std::exp(-big_gamma * h * static_cast<double>(m));

  SpectrumGrid grid = empty_grid(cfg, "eigen");
  const std::size_t n_w = cfg.omega.size();
  detail::parallel_for(n_w, cfg.threads, [&](std::size_t w) {
    // inner[m](k) = int_0^{m h} exp(z_k tau) d tau
    CMatrix inner(dim, static_cast<Eigen::Index>(lat.max_index + 1));
    for (int k = 0; k < dim; ++k) {
      const Complex z = lambda(k) + Complex(0.5 * big_gamma, -cfg.omega[w]);
      for (std::size_t m = 0; m <= lat.max_index; ++m) {
        inner(k, static_cast<Eigen::Index>(m)) = exp_integral(z, h * static_cast<double>(m));
      }
    }
    for (std::size_t ti = 0; ti < cfg.times.size(); ++ti) {
      const std::size_t kt = lat.index[ti];
      Complex total = 0.0;
      for (std::size_t l = 0; l < kt; ++l) {
        const double w_t2 = (l == 0 ? 0.5 : 1.0) * h;
        const auto m = static_cast<Eigen::Index>(kt - l);
        const Complex mode_sum = modal.col(static_cast<Eigen::Index>(l)).cwiseProduct(inner.col(m)).sum();
        total += w_t2 * decay[kt - l] * mode_sum;
      }
      grid.at(ti, w) = total.real();
    }
  });
  return grid;
}

SpectrumGrid interference_contribution(const SpectrumGrid& with_interference, const SpectrumGrid& without) {
  check_same_axes(with_interference, without);
  SpectrumGrid out = with_interference;
  out.route = "interference";
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = std::abs(with_interference.values[k] - without.values[k]);
  }
  return out;
}

SpectrumGrid relative_intensity(const SpectrumGrid& numerator, const SpectrumGrid& denominator,
                                std::optional<double> floor) {
  check_same_axes(numerator, denominator);
  const double cut = floor.value_or(1e-6 * denominator.max_value());
  if (!(cut > 0.0)) throw Error(ErrorCode::ValidationFailed, "relative intensity floor must be positive");
  SpectrumGrid out = numerator;
  out.route = "ratio";
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = denominator.values[k] < cut ? std::numeric_limits<double>::quiet_NaN()
                                                : numerator.values[k] / denominator.values[k];
  }
  return out;
}

std::vector<std::size_t> local_maxima(const SpectrumGrid& grid, std::size_t t_index, double floor) {
  std::vector<std::size_t> peaks;
  const std::size_t n_w = grid.omega.size();
  for (std::size_t w = 1; w + 1 < n_w; ++w) {
    const double v = grid.at(t_index, w);
    if (v > floor && v > grid.at(t_index, w - 1) && v >= grid.at(t_index, w + 1)) peaks.push_back(w);
  }
  return peaks;
}

std::vector<PeakRatio> peak_ratios(const SpectrumGrid& numerator, const SpectrumGrid& denominator,
                                   std::optional<double> floor) {
  check_same_axes(numerator, denominator);
  const double cut = floor.value_or(1e-6 * denominator.max_value());
  std::vector<PeakRatio> out;
  for (std::size_t t = 0; t < denominator.times.size(); ++t) {
    for (const std::size_t w : local_maxima(denominator, t, cut)) {
      const double ref = denominator.at(t, w);
      const double val = numerator.at(t, w);
      out.push_back({denominator.times[t], denominator.omega[w], ref, val, val / ref});
    }
  }
  return out;
}

std::vector<double> coherence_ratio(const Trajectory& traj, int i, int j) {
  if (traj.size() == 0) return {};
  const int n = traj.at(0).basis().n_excited();
  if (i == j || i < 1 || j < 1 || i > n || j > n) {
    throw Error(ErrorCode::IndexOutOfRange, "coherence ratio needs two distinct excited levels, got (" +
                                                std::to_string(i) + "," + std::to_string(j) + ")");
  }
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& s : traj.states()) {
    const double denom = s.population(i) + s.population(j);
    out.push_back(denom < 1e-14 ? 0.0 : std::abs(s.rho(i, j)) / denom);
  }
  return out;
}

}  // namespace clemit
