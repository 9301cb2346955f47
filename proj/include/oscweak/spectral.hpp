#pragma once

// Discretized Rockland operators (Laplacian on R^n, sub-Laplacian on H^1) and
// their functional calculus.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oscweak/lattice.hpp"

namespace oscweak {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SpectralFunction = std::function<double(double)>;

class SpectralOperator {
 public:
  /// 4 pi^2 |xi|^2 on the periodic DFT lattice. Abelian grids only.
  static SpectralOperator laplacian(const Grid& grid);
  /// -(X^2 + Y^2), X = d_x - (y/2) d_t, Y = d_y + (x/2) d_t, Dirichlet
  /// truncation. A = sum over X, Y of (D+^T D+ + D-^T D-)/2.
  static SpectralOperator sublaplacian_h1(const Grid& grid, std::size_t max_nodes = 33 * 33 * 33);

  const Grid& grid() const noexcept { return *grid_; }
  int nu() const noexcept { return 2; }
  bool is_symbol() const noexcept { return !symbol_.empty(); }
  /// Symbol per frequency node (fftfreq order); empty for matrix realizations.
  const std::vector<double>& symbol() const noexcept { return symbol_; }
  const SparseMatrix& matrix() const;
  /// Max absolute row sum (matrix) or max symbol.
  double norm_bound() const;

  /// R f.
  SampledFunction apply(const SampledFunction& f) const;
  /// kappa(R) f. Matrix path: dense eigenexpansion when the grid has at most
  /// dense_limit() nodes, Lanczos otherwise.
  SampledFunction apply_function(const SpectralFunction& kappa, const SampledFunction& f) const;
  /// Always Lanczos on matrices; the symbol path multiplies in frequency.
  SampledFunction apply_function_krylov(const SpectralFunction& kappa, const SampledFunction& f) const;

  /// Full spectrum (dense matrices or symbols). Computed once.
  const std::vector<double>& eigenvalues() const;
  /// Ritz values from `steps` Lanczos steps started at a seeded vector.
  std::vector<double> ritz_values(std::size_t steps, std::uint64_t seed = 1) const;

  std::size_t dense_limit() const noexcept { return dense_limit_; }
  void set_dense_limit(std::size_t n) { dense_limit_ = n; }

  struct Eigen_;  // lazily built eigendecomposition

 private:
  SpectralOperator() = default;
  const Eigen_& eigen() const;

  std::shared_ptr<const Grid> grid_;
  std::vector<double> symbol_;
  std::shared_ptr<SparseMatrix> matrix_;
  std::shared_ptr<Eigen_> eigen_;
  std::size_t dense_limit_ = 1000;
};

/// (1 + R)^s f. s = 0 returns f unchanged.
SampledFunction apply_power(const SpectralOperator& op, double s, const SampledFunction& f);

struct BesselKernel {
  double theta = 0.0;
  SampledFunction values;
  std::string provenance;  // "symbol", "krylov" or "delta"
};

/// k_theta = (1 + R)^{-Q theta / (2 nu)} delta. theta = 0 gives the delta;
/// theta outside [0,1) is rejected. Fails if the kernel is not real to 1e-10.
BesselKernel bessel_kernel(const SpectralOperator& op, double theta);

/// Relative error between kappa(r^nu R) delta on `grid` and
/// r^{-Q} [kappa(R) delta](r^{-1} x) computed on the nested grid of spacing
/// h / r with the same node count. Abelian only; over nodes with |RHS| > 1e-8.
double dilation_identity_check(const Grid& grid, const SpectralFunction& kappa, double r);

struct MonotonicityResult {
  double lhs = 0.0;  // ||(a + R)^{-b} f||_2
  double rhs = 0.0;  // ||R^{-b} f||_2
  double slack = 0.0;
  bool holds = false;
};

/// Projects out eigenvalues below 1e-8 ||R||; rejects f inside that space.
MonotonicityResult spectral_monotonicity_check(const SpectralOperator& op, double a, double b,
                                               const SampledFunction& f);

}  // namespace oscweak
