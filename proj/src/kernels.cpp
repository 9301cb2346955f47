#include "oscweak/kernels.hpp"

#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "oscweak/fft.hpp"
#include "oscweak/rng.hpp"

namespace oscweak {

namespace {

double euclid(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void require_abelian_match(const Grid& grid, int n, const char* who) {
  if (!grid.group().is_abelian()) throw Unsupported(std::string(who) + ": needs an abelian group");
  if (static_cast<int>(grid.dim()) != n) throw RejectedInput(std::string(who) + ": grid dimension differs from n");
}

// (1/h) * integral over [s - h/2, s + h/2] of c x^{-1} exp(i c' x^{a'}), s >= h, lambda = 0.
cplx cell_average_1d(const WaingerKernel& k, double s, double h) {
  const double x1 = s - 0.5 * h, x2 = s + 0.5 * h;
  if (k.c_prime == 0.0) return k.c * std::log(x2 / x1) / h;
  const double ap = k.a_prime();
  const double cp = std::abs(k.c_prime);
  const double v1 = cp * std::pow(x1, ap), v2 = cp * std::pow(x2, ap);
  const double re = gsl_sf_Ci(v1) - gsl_sf_Ci(v2);
  const double im = gsl_sf_Si(v1) - gsl_sf_Si(v2);
  const cplx integral(re, k.c_prime > 0 ? im : -im);
  return k.c * integral / (std::abs(ap) * h);
}

// Multilinear interpolation on the torus formed by the grid.
cplx periodic_interpolate(const SampledFunction& f, std::span<const double> p) {
  const Grid& g = f.grid();
  const std::size_t n = g.dim();
  std::vector<long> base(n);
  std::vector<double> frac(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = p[i] / g.spacing() + g.half_extent(i);
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) {
      base[i] = static_cast<long>(r);
      frac[i] = 0.0;
    } else {
      base[i] = static_cast<long>(std::floor(u));
      frac[i] = u - static_cast<double>(base[i]);
    }
  }
  cplx acc = 0.0;
  for (std::size_t c = 0; c < (std::size_t{1} << n); ++c) {
    double w = 1.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool up = c >> i & 1;
      if (up && frac[i] == 0.0) {
        w = 0.0;
        break;
      }
      w *= up ? frac[i] : 1.0 - frac[i];
      const long e = static_cast<long>(g.extent(i));
      const long ki = ((base[i] + (up ? 1 : 0)) % e + e) % e;
      idx += static_cast<std::size_t>(ki) * g.stride(i);
    }
    if (w != 0.0) acc += w * f[idx];
  }
  return acc;
}

}  // namespace

void WaingerKernel::validate() const {
  if (n < 1) throw RejectedInput("wainger: n must be >= 1");
  if (!(a > 0.0 && a < 1.0)) throw RejectedInput("wainger: a must lie in (0,1)");
  if (!(alpha >= 0.0)) throw RejectedInput("wainger: alpha must be >= 0");
}

cplx wainger_spatial(const WaingerKernel& k, std::span<const double> x) {
  k.validate();
  if (static_cast<int>(x.size()) != k.n) throw RejectedInput("wainger: point dimension differs from n");
  const double r = euclid(x);
  if (r == 0.0) throw RejectedInput("wainger: kernel is singular at x = 0");
  return k.c * std::pow(r, -k.n - k.lambda()) * std::exp(cplx(0.0, k.c_prime * std::pow(r, k.a_prime())));
}

double smooth_cutoff(double r) {
  if (r <= 1.0) return 0.0;
  if (r >= 2.0) return 1.0;
  const double t = r - 1.0;
  return t * t * (3.0 - 2.0 * t);
}

cplx wainger_multiplier(const WaingerKernel& k, std::span<const double> xi) {
  k.validate();
  const double r = euclid(xi);
  const double psi = smooth_cutoff(r);
  if (psi == 0.0) return 0.0;
  return psi * std::exp(cplx(0.0, std::pow(r, k.a))) * std::pow(r, -k.n * k.alpha / 2.0);
}

SampledFunction sample_wainger(const Grid& grid, const WaingerKernel& k, KernelSampling mode) {
  k.validate();
  require_abelian_match(grid, k.n, "sample_wainger");
  const std::size_t e = grid.identity_index();
  std::vector<cplx> v(grid.size());
  std::vector<double> x(grid.dim());
  if (mode == KernelSampling::CellAverage) {
    if (k.n != 1 || k.a != k.alpha) throw Unsupported("sample_wainger: cell averages need n = 1 and a = alpha");
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      if (idx == e) continue;
      grid.coords(idx, x);
      v[idx] = cell_average_1d(k, std::abs(x[0]), grid.spacing());
    }
  } else {
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      if (idx == e) continue;
      grid.coords(idx, x);
      v[idx] = wainger_spatial(k, x);
    }
  }
  return SampledFunction(grid, std::move(v));
}

SampledFunction smooth_bump(const Grid& grid, double radius) {
  if (!(radius > 0.0)) throw RejectedInput("smooth_bump: radius must be positive");
  const auto& w = grid.group().weights();
  int L = 1;
  for (std::size_t i = 0; i < w.size(); ++i) L = std::lcm(L, w[i]);
  return sample(grid, [&](std::span<const double> x) {
    double rho = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = x[i] / std::pow(radius, w[i]);
      rho += std::pow(u * u, static_cast<double>(L / w[i]));
    }
    if (rho >= 1.0) return cplx(0.0);
    const double b = 1.0 - rho;
    return cplx(b * b * b * b);
  });
}

SampledFunction truncate_support(const SampledFunction& k, double diam) {
  if (!(diam > 0.0)) throw RejectedInput("truncate_support: diameter must be positive");
  const Grid& g = k.grid();
  std::vector<cplx> v(k.values().begin(), k.values().end());
  std::vector<double> x(g.dim());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    g.coords(idx, x);
    if (g.group().quasi_norm(std::span<const double>(x)) > 0.5 * diam) v[idx] = 0.0;
  }
  return SampledFunction(g, std::move(v));
}

std::vector<double> dyadic_radii(int k_max, int k_min) {
  if (k_min < 1 || k_max < k_min) throw RejectedInput("dyadic_radii: need 1 <= k_min <= k_max");
  std::vector<double> r;
  for (int k = k_min; k <= k_max; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

ThetaSeminormEstimate hormander_theta_seminorm(const SampledFunction& k, double theta,
                                               std::span<const double> R_values,
                                               const SeminormOptions& opt) {
  if (!(theta >= 0.0 && theta < 1.0)) throw RejectedInput("seminorm: theta must lie in [0,1)");
  if (R_values.empty()) throw RejectedInput("seminorm: empty R grid");
  for (double R : R_values)
    if (!(R > 0.0 && R < 1.0)) throw RejectedInput("seminorm: R values must lie in (0,1)");
  if (opt.y_samples == 0 || opt.sequence_start == 0)
    throw RejectedInput("seminorm: need y_samples >= 1 and sequence_start >= 1");
  const Grid& g = k.grid();
  const HomogeneousGroup& grp = g.group();
  if (opt.periodic && !grp.is_abelian()) throw Unsupported("seminorm: periodic mode needs an abelian group");
  const std::size_t n = g.dim();
  const double h = g.spacing();
  const double cell = g.cell_measure();

  ThetaSeminormEstimate est;
  est.theta = theta;
  est.R_values.assign(R_values.begin(), R_values.end());
  const OffsetBox sb = k.support_box();
  if (sb.empty) {
    est.per_R.assign(R_values.size(), 0.0);
    return est;
  }

  // Interpolated K is nonzero within one cell of its node support.
  std::vector<double> klo(n), khi(n);
  for (std::size_t i = 0; i < n; ++i) {
    klo[i] = (sb.lo[i] - 1) * h;
    khi[i] = (sb.hi[i] + 1) * h;
  }

  for (double R : R_values) {
    std::vector<double> ylo(n), yhi(n), plo(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      yhi[i] = std::pow(R, grp.weights()[i]);
      ylo[i] = -yhi[i];
    }
    std::vector<int> xlo(n), xhi(n);
    if (opt.periodic) {
      for (std::size_t i = 0; i < n; ++i) {
        xlo[i] = -g.half_extent(i);
        xhi[i] = g.half_extent(i);
      }
    } else {
      product_box(grp, ylo, yhi, klo, khi, plo, phi);
      int need = 0;
      bool fits = true;
      for (std::size_t i = 0; i < n; ++i) {
        const int lo_k = static_cast<int>(std::floor(plo[i] / h)), hi_k = static_cast<int>(std::ceil(phi[i] / h));
        need = std::max({need, -lo_k, hi_k});
        if (-lo_k > g.half_extent(i) || hi_k > g.half_extent(i)) fits = false;
        xlo[i] = std::max(std::min(lo_k, sb.lo[i]), -g.half_extent(i));
        xhi[i] = std::min(std::max(hi_k, sb.hi[i]), g.half_extent(i));
      }
      if (!fits)
        throw RejectedInput("seminorm: grid cannot hold y * supp(K) for R = " + std::to_string(R) +
                            "; need half extent >= " + std::to_string(need) + " nodes (" +
                            std::to_string(need * h) + " in coordinates)");
    }
    const double threshold = std::max(2.0 * std::pow(R, 1.0 - theta), 2.0 * h);

    // Nodes of the integration region, fixed order.
    std::vector<std::size_t> region;
    {
      std::vector<int> kk(xlo);
      std::vector<double> x(n);
      for (;;) {
        for (std::size_t i = 0; i < n; ++i) x[i] = kk[i] * h;
        if (grp.quasi_norm(std::span<const double>(x)) >= threshold) region.push_back(g.index(kk));
        std::size_t i = n;
        while (i-- > 0) {
          if (++kk[i] <= xhi[i]) break;
          kk[i] = xlo[i];
        }
        if (i == static_cast<std::size_t>(-1)) break;
      }
    }

    double best = 0.0;
#pragma omp parallel for reduction(max : best) schedule(static)
    for (long s = 0; s < static_cast<long>(opt.y_samples); ++s) {
      const auto p = halton_point(opt.sequence_start + static_cast<std::size_t>(s), n);
      std::vector<double> y(n), x(n), z(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = yhi[i] * (2.0 * p[i] - 1.0);
      double sum = 0.0;
      for (std::size_t idx : region) {
        g.coords(idx, x);
        grp.left_quotient_into(y, x, z);
        const cplx ky = opt.periodic ? periodic_interpolate(k, z) : k.interpolate(z);
        sum += std::abs(ky - k[idx]);
      }
      best = std::max(best, sum * cell);
    }
    est.per_R.push_back(best);
  }
  est.value = *std::max_element(est.per_R.begin(), est.per_R.end());
  return est;
}

ThetaSeminormEstimate hormander_seminorm(const SampledFunction& k, std::span<const double> R_values,
                                         const SeminormOptions& opt) {
  return hormander_theta_seminorm(k, 0.0, R_values, opt);
}

void frequency_point(const Grid& grid, std::size_t q, std::span<double> xi) {
  for (std::size_t i = 0; i < grid.dim(); ++i) {
    const std::size_t N = grid.extent(i);
    const std::size_t j = q / grid.stride(i) % N;
    const long signed_j = j <= (N - 1) / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(N);
    xi[i] = static_cast<double>(signed_j) / (static_cast<double>(N) * grid.spacing());
  }
}

namespace {

// exp(s * 2 pi i m q'/N) per axis, with q' the signed frequency index.
std::vector<cplx> centering_phase(const Grid& g, double s) {
  std::vector<cplx> phase(g.size(), 1.0);
  std::vector<double> xi(g.dim());
  for (std::size_t q = 0; q < g.size(); ++q) {
    frequency_point(g, q, xi);
    double arg = 0.0;
    for (std::size_t i = 0; i < g.dim(); ++i) arg += xi[i] * g.half_extent(i) * g.spacing();
    phase[q] = std::exp(cplx(0.0, s * 2.0 * std::numbers::pi * arg));
  }
  return phase;
}

std::vector<std::size_t> dims_of(const Grid& g) {
  std::vector<std::size_t> d(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) d[i] = g.extent(i);
  return d;
}

}  // namespace

std::vector<cplx> fourier_transform(const SampledFunction& f) {
  const Grid& g = f.grid();
  if (!g.group().is_abelian()) throw Unsupported("fourier_transform: nonabelian groups have no FFT path");
  std::vector<cplx> data(f.values().begin(), f.values().end());
  fft::transform(data, dims_of(g), -1);
  const auto phase = centering_phase(g, 1.0);
  for (std::size_t q = 0; q < data.size(); ++q) data[q] *= phase[q] * g.cell_measure();
  return data;
}

SampledFunction from_symbol(const Grid& grid, const PointRule& symbol) {
  if (!grid.group().is_abelian()) throw Unsupported("from_symbol: nonabelian groups have no FFT path");
  std::vector<cplx> data(grid.size());
  std::vector<double> xi(grid.dim());
  const auto phase = centering_phase(grid, -1.0);
  double dxi = 1.0;
  for (std::size_t i = 0; i < grid.dim(); ++i) dxi /= static_cast<double>(grid.extent(i)) * grid.spacing();
  for (std::size_t q = 0; q < grid.size(); ++q) {
    frequency_point(grid, q, xi);
    const cplx m = symbol(xi);
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag()))
      throw RejectedInput("from_symbol: non-finite symbol value");
    data[q] = m * phase[q] * dxi;
  }
  fft::transform(data, dims_of(grid), +1);
  return SampledFunction(grid, std::move(data));
}

DecayFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw RejectedInput("loglog_fit: need at least two points");
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw RejectedInput("loglog_fit: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (den == 0.0) throw RejectedInput("loglog_fit: abscissae coincide");
  DecayFit fit;
  fit.exponent = (m * sxy - sx * sy) / den;
  const double intercept = (sy - fit.exponent * sx) / m;
  fit.constant = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = std::log(y[i]) - intercept - fit.exponent * std::log(x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  fit.bins_used = m;
  return fit;
}

DecayFit fourier_decay_fit(const SampledFunction& k, double lo, double hi, std::size_t bins) {
  if (!(lo > 0.0 && hi > lo) || bins == 0) throw RejectedInput("fourier_decay_fit: need 0 < lo < hi and bins >= 1");
  const Grid& g = k.grid();
  const auto ft = fourier_transform(k);
  std::vector<double> sum(bins, 0.0), logr(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> xi(g.dim());
  const double span = std::log(hi / lo);
  for (std::size_t q = 0; q < ft.size(); ++q) {
    frequency_point(g, q, xi);
    const double r = euclid(xi);
    if (r < lo || r > hi) continue;
    const std::size_t b = std::min(bins - 1, static_cast<std::size_t>(std::log(r / lo) / span * bins));
    sum[b] += std::abs(ft[q]);
    logr[b] += std::log(r);
    ++count[b];
  }
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0 || sum[b] == 0.0) continue;
    xs.push_back(std::exp(logr[b] / count[b]));
    ys.push_back(sum[b] / count[b]);
  }
  if (xs.size() < 2)
    throw RejectedInput("fourier_decay_fit: fewer than two populated bins in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]; refine the grid or widen the band");
  return loglog_fit(xs, ys);
}

}  // namespace oscweak
