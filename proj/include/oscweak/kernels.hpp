#pragma once

// Oscillating and test kernels, Hormander-type seminorm estimators, support
// truncation and Fourier decay fits.

#include <cstddef>
#include <span>
#include <vector>

#include "oscweak/lattice.hpp"

namespace oscweak {

/// K(x) = c |x|^{-n-lambda} exp(i c' |x|^{a'}) on R^n, with multiplier
/// psi(xi) exp(i |xi|^a) |xi|^{-n alpha / 2}.
struct WaingerKernel {
  int n = 1;
  double a = 0.5;
  double alpha = 0.5;
  double c = 1.0;
  double c_prime = 1.0;

  /// Rejects a outside (0,1), alpha < 0 or n < 1.
  void validate() const;
  /// n (a - alpha) / (2 (1 - a))
  double lambda() const { return n * (a - alpha) / (2.0 * (1.0 - a)); }
  /// a / (a - 1)
  double a_prime() const { return a / (a - 1.0); }
};

/// Pointwise spatial kernel. Rejects x = 0.
cplx wainger_spatial(const WaingerKernel& k, std::span<const double> x);

/// Smoothstep in |xi| from 0 at radius 1 to 1 at radius 2.
double smooth_cutoff(double r);
cplx wainger_multiplier(const WaingerKernel& k, std::span<const double> xi);

enum class KernelSampling {
  Pointwise,
  /// Exact average over each lattice cell. Needs n = 1 and a = alpha
  /// (closed form through Si and Ci).
  CellAverage,
};

/// Wainger kernel on an abelian grid of matching dimension, zero at e.
SampledFunction sample_wainger(const Grid& grid, const WaingerKernel& k,
                               KernelSampling mode = KernelSampling::Pointwise);

/// (1 - rho(x/r)^{2L})^4_+ with the smooth gauge rho^{2L} = sum x_i^{2L/nu_i},
/// L = lcm of the weights. On R^n this is (1 - |x|^2/r^2)^4_+.
SampledFunction smooth_bump(const Grid& grid, double radius);

/// Zero outside the quasi-ball |x| <= diam/2.
SampledFunction truncate_support(const SampledFunction& k, double diam);

/// Geometric grid 2^{-1}, ..., 2^{-k_max}.
std::vector<double> dyadic_radii(int k_max = 8, int k_min = 1);

struct SeminormOptions {
  std::size_t y_samples = 64;
  /// First Halton index used; shifting it gives an independent resample.
  std::size_t sequence_start = 1;
  /// Wrap translates periodically (abelian smoke tests only).
  bool periodic = false;
};

struct ThetaSeminormEstimate {
  double theta = 0.0;
  std::vector<double> R_values;
  std::vector<double> per_R;
  double value = 0.0;
};

/// For each R: sup over low-discrepancy y with |y| < R of
///   sum_{|x| >= max(2 R^{1-theta}, 2h)} |K(y^{-1} x) - K(x)| h^n.
/// Rejects grids that cannot hold y * supp(K) unless periodic.
ThetaSeminormEstimate hormander_theta_seminorm(const SampledFunction& k, double theta,
                                               std::span<const double> R_values,
                                               const SeminormOptions& opt = {});

/// theta = 0 through the same code path.
ThetaSeminormEstimate hormander_seminorm(const SampledFunction& k, std::span<const double> R_values,
                                         const SeminormOptions& opt = {});

/// Continuous Fourier transform approximation sum_x f(x) e^{-2 pi i x.xi} h^n
/// on the DFT frequency lattice (fftfreq order per axis). Abelian only.
std::vector<cplx> fourier_transform(const SampledFunction& f);

/// Inverse of fourier_transform for a symbol sampled on the frequency
/// lattice of `grid`.
SampledFunction from_symbol(const Grid& grid, const PointRule& symbol);

/// Frequency point of flat index q in fourier_transform's layout.
void frequency_point(const Grid& grid, std::size_t q, std::span<double> xi);

struct DecayFit {
  double exponent = 0.0;
  double constant = 0.0;
  double residual = 0.0;
  std::size_t bins_used = 0;
};

/// |FT K| averaged in geometric radial bins over [lo, hi], then a least
/// squares line in log-log coordinates.
DecayFit fourier_decay_fit(const SampledFunction& k, double lo = 4.0, double hi = 64.0,
                           std::size_t bins = 16);

/// Least squares fit log y = log c + p log x; the residual is the RMS in log y.
DecayFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace oscweak
