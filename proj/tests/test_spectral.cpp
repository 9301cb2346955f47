#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oscweak/errors.hpp"
#include "oscweak/kernels.hpp"
#include "oscweak/rng.hpp"
#include "oscweak/spectral.hpp"

using namespace oscweak;

namespace {

constexpr double kPi = std::numbers::pi;

SampledFunction random_function(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<cplx> v(g.size());
  for (auto& z : v) z = rng.normal();
  return SampledFunction(g, std::move(v));
}

double max_diff(const SampledFunction& a, const SampledFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// C-infinity step: 0 for u <= 0, 1 for u >= 1.
double smooth_step(double u) {
  auto e = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
  return e(u) / (e(u) + e(1 - u));
}

bool interior(const Grid& g, std::size_t idx, int margin) {
  std::vector<int> k(g.dim());
  g.offsets(idx, k);
  for (std::size_t i = 0; i < g.dim(); ++i)
    if (std::abs(k[i]) > g.half_extent(i) - margin) return false;
  return true;
}

}  // namespace

TEST_CASE("Laplacian symbol") {
  const auto g = Grid::cube(HomogeneousGroup::abelian(2), 0.1, 20);
  const auto op = SpectralOperator::laplacian(g);
  const double L = g.extent(0) * g.spacing();
  const double xi0[] = {3 / L, -5 / L};
  const auto wave = sample(g, [&](auto x) { return std::exp(cplx(0, 2 * kPi * (xi0[0] * x[0] + xi0[1] * x[1]))); });
  const double lam = 4 * kPi * kPi * (xi0[0] * xi0[0] + xi0[1] * xi0[1]);
  CHECK(max_diff(op.apply(wave), wave.scaled(lam)) <= 1e-9 * lam);
  const auto one = sample(g, [](auto) { return cplx(1.0); });
  CHECK(lp_norm(op.apply(one), INFINITY) <= 1e-10);
  CHECK_THROWS_AS(SpectralOperator::laplacian(Grid::cube(HomogeneousGroup::heisenberg(1), 0.1, 2)), Unsupported);
}

TEST_CASE("Laplacian of a windowed quadratic") {
  const auto g = Grid::cube(HomogeneousGroup::abelian(1), 1.0 / 32, 256);
  const auto f = sample(g, [](auto x) {
    const double w = 1.0 - smooth_step((std::abs(x[0]) - 2.0) / 4.0);
    return cplx(x[0] * x[0] * w);
  });
  const auto rf = SpectralOperator::laplacian(g).apply(f);
  std::vector<double> x(1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.coords(i, x);
    if (std::abs(x[0]) <= 1.5) CHECK(std::abs(rf[i] + 2.0) <= 1e-6);
  }
}

TEST_CASE("sub-Laplacian matrix") {
  const auto g = Grid::cube(HomogeneousGroup::heisenberg(1), 0.25, 4);
  const auto op = SpectralOperator::sublaplacian_h1(g);
  const SparseMatrix& A = op.matrix();
  const SparseMatrix At = A.transpose();
  CHECK((A - At).norm() == 0.0);
  const auto one = sample(g, [](auto) { return cplx(1.0); });
  const auto a1 = op.apply(one);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (interior(g, i, 2)) CHECK(std::abs(a1[i]) <= 1e-12);

  // -(X^2 + Y^2) on quadratics, exact in the interior
  const auto t2 = sample(g, [](auto x) { return cplx(x[2] * x[2]); });
  const auto x2 = sample(g, [](auto x) { return cplx(x[0] * x[0] + x[0] * x[1]); });
  const auto at2 = op.apply(t2), ax2 = op.apply(x2);
  std::vector<double> x(3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!interior(g, i, 2)) continue;
    g.coords(i, x);
    CHECK(std::abs(at2[i] - cplx(-(x[0] * x[0] + x[1] * x[1]) / 2)) <= 1e-10);
    CHECK(std::abs(ax2[i] - cplx(-2.0)) <= 1e-10);
  }
  CHECK_THROWS_AS(SpectralOperator::sublaplacian_h1(Grid::cube(HomogeneousGroup::heisenberg(1), 0.1, 17)), RejectedInput);
  CHECK_THROWS_AS(SpectralOperator::sublaplacian_h1(Grid::cube(HomogeneousGroup::abelian(3), 0.1, 2)), Unsupported);
}

TEST_CASE("sub-Laplacian spectrum is positive and converges") {
  const auto grp = HomogeneousGroup::heisenberg(1);
  const auto coarse = SpectralOperator::sublaplacian_h1(Grid::cube(grp, 0.25, 4));
  const auto& ev = coarse.eigenvalues();
  CHECK(ev.front() >= -1e-8 * coarse.norm_bound());
  const auto fine = SpectralOperator::sublaplacian_h1(Grid::cube(grp, 0.125, 8));
  const auto ritz = fine.ritz_values(400);
  CHECK(ritz.front() > 0.0);
  // dense and Lanczos agree on the coarse grid
  const auto coarse_ritz = coarse.ritz_values(729);
  CHECK(std::abs(coarse_ritz.front() - ev.front()) <= 1e-8 * ev.front());
  // refinement: the increments of the lowest eigenvalue shrink (slow, boundary layers at the t faces)
  const double e5 = SpectralOperator::sublaplacian_h1(Grid::cube(grp, 0.5, 2)).eigenvalues().front();
  CHECK((ev.front() - e5) / ev.front() > (ritz.front() - ev.front()) / ritz.front());
  CHECK(ritz.front() > ev.front());
}

TEST_CASE("functional calculus") {
  const auto g1 = Grid::cube(HomogeneousGroup::abelian(1), 1.0 / 32, 128);
  const auto gh = Grid::cube(HomogeneousGroup::heisenberg(1), 0.25, 4);
  const auto ops = {SpectralOperator::laplacian(g1), SpectralOperator::sublaplacian_h1(gh)};
  for (const auto& op : ops) {
    const auto f = random_function(op.grid(), 3);
    CHECK(max_diff(apply_power(op, 0.0, f), f) == 0.0);
    const auto back = apply_power(op, -0.7, apply_power(op, 0.7, f));
    CHECK(max_diff(back, f) <= 1e-8 * lp_norm(f, INFINITY));
    const auto ab = apply_power(op, -0.3, apply_power(op, -0.4, f));
    const auto c = apply_power(op, -0.7, f);
    CHECK(max_diff(ab, c) <= 1e-8 * lp_norm(c, INFINITY));
    for (double s : {0.1, 0.5, 2.0}) CHECK(lp_norm(apply_power(op, -s, f), 2) <= lp_norm(f, 2) * (1 + 1e-12));
  }
}

TEST_CASE("dense and Krylov paths agree") {
  const auto gh = Grid::cube(HomogeneousGroup::heisenberg(1), 0.25, 4);
  const auto op = SpectralOperator::sublaplacian_h1(gh);
  const auto f = random_function(gh, 8);
  const auto kappa = [](double t) { return std::pow(1 + t, -0.5); };
  const auto a = op.apply_function(kappa, f);
  const auto b = op.apply_function_krylov(kappa, f);
  CHECK(max_diff(a, b) <= 1e-10 * lp_norm(a, INFINITY));
  const auto k = bessel_kernel(op, 0.5);
  CHECK(k.provenance == "krylov");
  const auto p = apply_power(op, -0.5, SampledFunction::delta(gh));
  CHECK(max_diff(k.values, p) <= 1e-10 * lp_norm(p, INFINITY));
}

TEST_CASE("Bessel kernel on R^1") {
  const double h = 1.0 / 1024;
  const auto g = Grid::cube(HomogeneousGroup::abelian(1), h, 16 * 1024);
  const auto op = SpectralOperator::laplacian(g);
  const auto k = bessel_kernel(op, 0.5);
  CHECK(k.provenance == "symbol");
  CHECK(std::abs(integrate(k.values) - 1.0) <= 1e-6);
  const auto p = apply_power(op, -0.125, SampledFunction::delta(g));
  CHECK(max_diff(k.values, p) <= 1e-10 * lp_norm(p, INFINITY));

  double mx = 0.0, mn = 0.0;
  for (const auto& v : k.values.values()) {
    mx = std::max(mx, v.real());
    mn = std::min(mn, v.real());
  }
  CHECK(mn >= -1e-8 * mx);

  std::vector<double> xs, ys;
  const std::size_t e = g.identity_index();
  for (std::size_t j = 4; j * h <= 0.2; j = j * 5 / 4 + 1) {
    xs.push_back(j * h);
    ys.push_back(k.values[e + j].real());
  }
  CHECK(std::abs(loglog_fit(xs, ys).exponent + 0.75) <= 0.15);

  const double at1 = std::abs(k.values[e + 1024]) * std::pow(2.0, 6);
  double far = 0.0;
  for (std::size_t j = 1024; j <= 16 * 1024; ++j) far = std::max(far, std::abs(k.values[e + j]) * std::pow(1 + j * h, 6));
  CHECK(far <= 10 * at1);

  const auto small = bessel_kernel(op, 1e-6);
  CHECK(lp_norm(small.values - SampledFunction::delta(g), 1) <= 1e-3);
  CHECK(bessel_kernel(op, 0.0).provenance == "delta");
  CHECK_THROWS_AS(bessel_kernel(op, 1.0), RejectedInput);
  CHECK_THROWS_AS(bessel_kernel(op, -0.1), RejectedInput);
}

TEST_CASE("dilation identity") {
  const auto g = Grid::cube(HomogeneousGroup::abelian(1), 1.0 / 64, 512);
  const auto kappa = [](double t) { return std::pow(1 + t, -0.5); };
  CHECK(dilation_identity_check(g, kappa, 1.0) == 0.0);
  CHECK(dilation_identity_check(g, [](double) { return 1.0; }, 2.0) <= 1e-15);
  CHECK(dilation_identity_check(g, kappa, 2.0) <= 1e-3);
  CHECK(dilation_identity_check(g, kappa, 0.5) <= 1e-3);
  CHECK_THROWS_AS(dilation_identity_check(g, kappa, 0.0), RejectedInput);
}

TEST_CASE("spectral monotonicity") {
  const auto g = Grid::cube(HomogeneousGroup::abelian(1), 1.0 / 16, 64);
  const auto op = SpectralOperator::laplacian(g);
  const double L = g.extent(0) * g.spacing();
  const auto wave = sample(g, [&](auto x) { return std::exp(cplx(0, 2 * kPi * 3 / L * x[0])); });
  const double lam = 4 * kPi * kPi * 9 / (L * L);
  const auto m = spectral_monotonicity_check(op, 2.0, 0.5, wave);
  const double n2 = lp_norm(wave, 2);
  CHECK(m.lhs == doctest::Approx(std::pow(2.0 + lam, -0.5) * n2).epsilon(1e-10));
  CHECK(m.rhs == doctest::Approx(std::pow(lam, -0.5) * n2).epsilon(1e-10));
  CHECK(m.holds);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = random_function(g, s);
    const auto r = spectral_monotonicity_check(op, 1.0, 0.75, f);
    CHECK(r.holds);
    CHECK(r.slack >= 0.0);
    const auto eq = spectral_monotonicity_check(op, 0.0, 0.75, f);
    CHECK(eq.lhs == eq.rhs);
  }
  CHECK_THROWS_AS(spectral_monotonicity_check(op, 1.0, 0.5, sample(g, [](auto) { return cplx(1.0); })), RejectedInput);

  const auto gh = Grid::cube(HomogeneousGroup::heisenberg(1), 0.25, 4);
  const auto oh = SpectralOperator::sublaplacian_h1(gh);
  CHECK(spectral_monotonicity_check(oh, 1.0, 1.0, random_function(gh, 2)).holds);
}
