#include "clemit/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "clemit/csv.hpp"

namespace clemit {

RegressionSeed regression_seed(const Basis& basis, int m, int n) {
  const int l = basis.levels();
  if (m < 0 || n < 0 || m >= l || n >= l) {
    throw Error(ErrorCode::IndexOutOfRange, "regression seed (" + std::to_string(m) + "," + std::to_string(n) +
                                                ") outside 0.." + std::to_string(l - 1));
  }
  RegressionSeed seed{m, n, CMatrix::Zero(basis.dim(), basis.dim())};
  for (int row = 0; row < basis.dim(); ++row) {
    const auto [i, j] = basis.pair(row);
    if (j == m) seed.transfer(row, basis.index(i, n)) = 1.0;
  }
  return seed;
}

CorrelationSlice::CorrelationSlice(int m, int n, std::vector<double> t2_grid, std::vector<double> tau_grid,
                                   std::vector<std::pair<int, int>> entries)
    : m_(m),
      n_(n),
      t2_grid_(std::move(t2_grid)),
      tau_grid_(std::move(tau_grid)),
      entries_(std::move(entries)),
      values_(t2_grid_.size() * tau_grid_.size() * entries_.size()) {}

int CorrelationSlice::entry_position(int i, int j) const {
  const auto it = std::find(entries_.begin(), entries_.end(), std::pair{i, j});
  return it == entries_.end() ? -1 : static_cast<int>(it - entries_.begin());
}

Complex CorrelationSlice::value(int i, int j, std::size_t t2, std::size_t tau) const {
  const int pos = entry_position(i, j);
  if (pos < 0) {
    throw Error(ErrorCode::IndexOutOfRange,
                "entry (" + std::to_string(i) + "," + std::to_string(j) + ") not stored in correlation slice");
  }
  return at(t2, tau, static_cast<std::size_t>(pos));
}

CorrelationSlice two_time_correlations(const Liouvillian& generator, const Trajectory& traj, int m, int n,
                                       std::span<const double> tau_grid,
                                       std::vector<std::pair<int, int>> entries) {
  const Basis& basis = generator.basis();
  const RegressionSeed seed = regression_seed(basis, m, n);
  if (entries.empty()) entries = basis.pairs();
  std::vector<int> rows;
  rows.reserve(entries.size());
  for (const auto& [i, j] : entries) rows.push_back(basis.index(i, j));

  if (tau_grid.empty() || tau_grid.front() != 0.0) {
    throw Error(ErrorCode::GridMismatch, "tau grid must start at 0");
  }
  double step = 0.0;
  if (tau_grid.size() > 1) {
    step = uniform_grid_step(tau_grid);
    if (step == 0.0) throw Error(ErrorCode::GridMismatch, "tau grid must be uniform");
    if (traj.size() > 1) {
      if (std::abs(traj.uniform_step() - step) > 1e-12 * std::max(1.0, step)) {
        throw Error(ErrorCode::GridMismatch, "trajectory and tau grid must share one uniform step");
      }
    }
  }

  CorrelationSlice slice(m, n, traj.times(), std::vector<double>(tau_grid.begin(), tau_grid.end()),
                         std::move(entries));
  const std::size_t n_tau = tau_grid.size();
  const std::size_t n_entries = rows.size();

  std::optional<RegressionPropagator> prop;
  if (n_tau > 1) prop.emplace(generator, step);

  CMatrix block(basis.dim(), 1);
  for (std::size_t t2 = 0; t2 < traj.size(); ++t2) {
    block.col(0) = seed.apply(traj.at(t2).entries());
    for (std::size_t k = 0; k < n_tau; ++k) {
      if (k > 0) prop->advance(block);
      for (std::size_t e = 0; e < n_entries; ++e) slice.at(t2, k, e) = block(rows[e], 0);
    }
  }
  return slice;
}

CorrelationSlice two_time_correlations(const Liouvillian& generator, const Trajectory& traj, int j,
                                       std::span<const double> tau_grid,
                                       std::vector<std::pair<int, int>> entries) {
  if (j < 1 || j > generator.basis().n_excited()) {
    throw Error(ErrorCode::IndexOutOfRange, "emission seed index j = " + std::to_string(j) + " is not excited");
  }
  if (entries.empty()) {
    for (int i = 1; i <= generator.basis().n_excited(); ++i) entries.emplace_back(i, 0);
  }
  return two_time_correlations(generator, traj, 0, j, tau_grid, std::move(entries));
}

void write_correlation_csv(const CorrelationSlice& slice, const std::filesystem::path& path, std::size_t stride) {
  stride = std::max<std::size_t>(stride, 1);
  CsvWriter csv(path, {"t2", "tau", "re", "im", "i", "j"});
  for (std::size_t t2 = 0; t2 < slice.t2_grid().size(); t2 += stride) {
    for (std::size_t k = 0; k < slice.tau_grid().size(); k += stride) {
      for (std::size_t e = 0; e < slice.entries().size(); ++e) {
        const Complex y = slice.at(t2, k, e);
        csv.cell(slice.t2_grid()[t2]).cell(slice.tau_grid()[k]).cell(y.real()).cell(y.imag());
        csv.cell(static_cast<long long>(slice.entries()[e].first))
            .cell(static_cast<long long>(slice.entries()[e].second));
        csv.end_row();
      }
    }
  }
  csv.close();
}

}  // namespace clemit
