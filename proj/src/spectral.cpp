#include "oscweak/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "oscweak/fft.hpp"
#include "oscweak/kernels.hpp"
#include "oscweak/rng.hpp"

namespace oscweak {

struct SpectralOperator::Eigen_ {
  std::once_flag once;
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // dense path only
};

namespace {

using Vec = Eigen::VectorXd;

std::vector<std::size_t> dims_of(const Grid& g) {
  std::vector<std::size_t> d(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) d[i] = g.extent(i);
  return d;
}

// kappa applied in frequency; values are periodic over the grid.
std::vector<cplx> symbol_apply(const Grid& g, const std::vector<double>& symbol, const SpectralFunction& kappa,
                               std::span<const cplx> f) {
  std::vector<cplx> data(f.begin(), f.end());
  const auto dims = dims_of(g);
  fft::transform(data, dims, -1);
  const double inv = 1.0 / static_cast<double>(data.size());
  for (std::size_t q = 0; q < data.size(); ++q) data[q] *= kappa(symbol[q]) * inv;
  fft::transform(data, dims, +1);
  return data;
}

struct Lanczos {
  Eigen::MatrixXd Q;
  std::vector<double> alpha, beta;
};

// One Lanczos step with full reorthogonalization; returns false on breakdown.
bool lanczos_step(const SparseMatrix& A, Lanczos& L, std::size_t j) {
  Vec w = A * L.Q.col(j);
  if (j > 0) w -= L.beta[j - 1] * L.Q.col(j - 1);
  const double a = L.Q.col(j).dot(w);
  w -= a * L.Q.col(j);
  for (int pass = 0; pass < 2; ++pass) {
    const Vec c = L.Q.leftCols(j + 1).transpose() * w;
    w -= L.Q.leftCols(j + 1) * c;
  }
  L.alpha.push_back(a);
  const double b = w.norm();
  L.beta.push_back(b);
  if (j + 1 < static_cast<std::size_t>(L.Q.cols())) {
    if (b <= 1e-14 * std::max(1.0, std::abs(a))) return false;
    L.Q.col(j + 1) = w / b;
  }
  return true;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_eigen(const Lanczos& L, std::size_t m) {
  Vec diag(static_cast<long>(m)), sub(static_cast<long>(m > 0 ? m - 1 : 0));
  for (std::size_t i = 0; i < m; ++i) {
    diag(static_cast<long>(i)) = L.alpha[i];
    if (i + 1 < m) sub(static_cast<long>(i)) = L.beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);
  return es;
}

// kappa(A) v by Lanczos, stopping when successive iterates agree to tol.
// Convergence is tested at geometrically spaced step counts.
Vec krylov_apply(const SparseMatrix& A, const Vec& v, const SpectralFunction& kappa, double tol = 1e-13) {
  const double nv = v.norm();
  if (nv == 0.0) return Vec::Zero(v.size());
  const std::size_t N = static_cast<std::size_t>(v.size());
  const std::size_t max_steps = std::min<std::size_t>(N, 1500);
  Lanczos L;
  L.Q.resize(v.size(), static_cast<long>(max_steps));
  L.Q.col(0) = v / nv;
  Vec prev;
  std::size_t next_check = 8;
  for (std::size_t j = 0; j < max_steps; ++j) {
    const bool ok = lanczos_step(A, L, j);
    const std::size_t m = j + 1;
    const bool last = !ok || m == max_steps;
    if (m < next_check && !last) continue;
    next_check = std::max(m + 8, m + m / 4);
    const auto es = tridiagonal_eigen(L, m);
    Vec coef = es.eigenvectors().row(0).transpose();
    for (long i = 0; i < coef.size(); ++i) coef(i) *= kappa(es.eigenvalues()(i));
    const Vec y = nv * (L.Q.leftCols(static_cast<long>(m)) * (es.eigenvectors() * coef));
    if (last) return y;
    if (prev.size() && (y - prev).norm() <= tol * std::max(y.norm(), 1e-300)) return y;
    prev = y;
  }
  throw NumericalFailure("krylov-convergence", "Lanczos did not converge");
}

template <class Fn>
SampledFunction per_component(const SampledFunction& f, Fn fn) {
  const std::size_t N = f.size();
  Vec re(static_cast<long>(N)), im(static_cast<long>(N));
  bool has_im = false;
  for (std::size_t i = 0; i < N; ++i) {
    re(static_cast<long>(i)) = f[i].real();
    im(static_cast<long>(i)) = f[i].imag();
    has_im = has_im || f[i].imag() != 0.0;
  }
  const Vec r = fn(re);
  const Vec s = has_im ? fn(im) : Vec::Zero(static_cast<long>(N));
  std::vector<cplx> out(N);
  for (std::size_t i = 0; i < N; ++i) out[i] = cplx(r(static_cast<long>(i)), s(static_cast<long>(i)));
  return SampledFunction(f.grid(), std::move(out));
}

}  // namespace

SpectralOperator SpectralOperator::laplacian(const Grid& grid) {
  if (!grid.group().is_abelian()) throw Unsupported("laplacian: needs an abelian grid");
  SpectralOperator op;
  op.grid_ = std::make_shared<const Grid>(grid);
  op.symbol_.resize(grid.size());
  std::vector<double> xi(grid.dim());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    frequency_point(grid, q, xi);
    double s = 0.0;
    for (double v : xi) s += v * v;
    op.symbol_[q] = 4.0 * std::numbers::pi * std::numbers::pi * s;
  }
  op.eigen_ = std::make_shared<Eigen_>();
  return op;
}

SpectralOperator SpectralOperator::sublaplacian_h1(const Grid& grid, std::size_t max_nodes) {
  if (!(grid.group() == HomogeneousGroup::heisenberg(1)))
    throw Unsupported("sublaplacian_h1: needs a grid on heisenberg:1");
  if (grid.size() > max_nodes)
    throw RejectedInput("sublaplacian_h1: " + std::to_string(grid.size()) + " nodes exceed the cap of " +
                        std::to_string(max_nodes));
  const std::size_t N = grid.size();
  const double h = grid.spacing();
  using Triplet = Eigen::Triplet<double>;
  SparseMatrix A(static_cast<long>(N), static_cast<long>(N));
  std::vector<int> k(3);
  std::vector<double> x(3);
  // field 0: X = d_x - (y/2) d_t, field 1: Y = d_y + (x/2) d_t
  for (int field = 0; field < 2; ++field) {
    for (int dir : {+1, -1}) {
      std::vector<Triplet> trips;
      for (std::size_t p = 0; p < N; ++p) {
        grid.offsets(p, k);
        grid.coords(p, x);
        const double c = field == 0 ? -0.5 * x[1] : 0.5 * x[0];
        const std::size_t axis = field == 0 ? 0 : 1;
        // dir=+1: (u(p+e) - u(p))/h ; dir=-1: (u(p) - u(p-e))/h
        auto add = [&](std::size_t ax, double coef) {
          std::vector<int> q = k;
          q[ax] += dir;
          if (std::abs(q[ax]) <= grid.half_extent(ax)) trips.emplace_back(static_cast<int>(p), static_cast<int>(grid.index(q)), dir * coef / h);
          trips.emplace_back(static_cast<int>(p), static_cast<int>(p), -dir * coef / h);
        };
        add(axis, 1.0);
        if (c != 0.0) add(2, c);
      }
      SparseMatrix D(static_cast<long>(N), static_cast<long>(N));
      D.setFromTriplets(trips.begin(), trips.end());
      SparseMatrix DtD = SparseMatrix(D.transpose()) * D;
      A += 0.5 * DtD;
    }
  }
  SparseMatrix At = A.transpose();
  A = 0.5 * (A + At);
  A.prune(0.0);
  SpectralOperator op;
  op.grid_ = std::make_shared<const Grid>(grid);
  op.matrix_ = std::make_shared<SparseMatrix>(std::move(A));
  op.eigen_ = std::make_shared<Eigen_>();
  return op;
}

const SparseMatrix& SpectralOperator::matrix() const {
  if (!matrix_) throw Unsupported("spectral: symbol realization has no matrix");
  return *matrix_;
}

double SpectralOperator::norm_bound() const {
  if (is_symbol()) return *std::max_element(symbol_.begin(), symbol_.end());
  double best = 0.0;
  for (long r = 0; r < matrix_->outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(*matrix_, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

SampledFunction SpectralOperator::apply(const SampledFunction& f) const {
  if (!(f.grid() == grid())) throw RejectedInput("spectral: function lives on another grid");
  if (is_symbol()) return SampledFunction(grid(), symbol_apply(grid(), symbol_, [](double t) { return t; }, f.values()));
  return per_component(f, [&](const Vec& v) { return Vec(*matrix_ * v); });
}

const SpectralOperator::Eigen_& SpectralOperator::eigen() const {
  std::call_once(eigen_->once, [&] {
    if (is_symbol()) {
      eigen_->values = symbol_;
      std::sort(eigen_->values.begin(), eigen_->values.end());
      return;
    }
    if (grid().size() > dense_limit_)
      throw Unsupported("spectral: full eigendecomposition is limited to " + std::to_string(dense_limit_) + " nodes");
    const Eigen::MatrixXd dense(*matrix_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigensolver", "dense eigendecomposition failed");
    eigen_->values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    eigen_->vectors = es.eigenvectors();
    const double tol = 1e-8 * norm_bound();
    if (eigen_->values.front() < -tol)
      throw NumericalFailure("positivity", "eigenvalue " + std::to_string(eigen_->values.front()) + " below -" +
                                               std::to_string(tol));
  });
  return *eigen_;
}

const std::vector<double>& SpectralOperator::eigenvalues() const { return eigen().values; }

std::vector<double> SpectralOperator::ritz_values(std::size_t steps, std::uint64_t seed) const {
  if (is_symbol()) return eigenvalues();
  const std::size_t N = grid().size();
  steps = std::min(steps, N);
  CounterRng rng(seed);
  Vec v(static_cast<long>(N));
  for (long i = 0; i < v.size(); ++i) v(i) = rng.normal();
  Lanczos L;
  L.Q.resize(static_cast<long>(N), static_cast<long>(steps));
  L.Q.col(0) = v / v.norm();
  std::size_t m = 0;
  for (std::size_t j = 0; j < steps; ++j) {
    m = j + 1;
    if (!lanczos_step(*matrix_, L, j)) break;
  }
  const auto es = tridiagonal_eigen(L, m);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + m);
  const double tol = 1e-8 * norm_bound();
  if (out.front() < -tol)
    throw NumericalFailure("positivity", "Ritz value " + std::to_string(out.front()) + " below -" + std::to_string(tol));
  return out;
}

SampledFunction SpectralOperator::apply_function(const SpectralFunction& kappa, const SampledFunction& f) const {
  if (!(f.grid() == grid())) throw RejectedInput("spectral: function lives on another grid");
  if (is_symbol()) return SampledFunction(grid(), symbol_apply(grid(), symbol_, kappa, f.values()));
  if (grid().size() > dense_limit_) return apply_function_krylov(kappa, f);
  const auto& e = eigen();
  Vec scale(static_cast<long>(e.values.size()));
  for (std::size_t i = 0; i < e.values.size(); ++i) scale(static_cast<long>(i)) = kappa(e.values[i]);
  return per_component(f, [&](const Vec& v) {
    const Vec c = e.vectors.transpose() * v;
    return Vec(e.vectors * c.cwiseProduct(scale));
  });
}

SampledFunction SpectralOperator::apply_function_krylov(const SpectralFunction& kappa, const SampledFunction& f) const {
  if (!(f.grid() == grid())) throw RejectedInput("spectral: function lives on another grid");
  if (is_symbol()) return SampledFunction(grid(), symbol_apply(grid(), symbol_, kappa, f.values()));
  return per_component(f, [&](const Vec& v) { return krylov_apply(*matrix_, v, kappa); });
}

SampledFunction apply_power(const SpectralOperator& op, double s, const SampledFunction& f) {
  if (!std::isfinite(s)) throw RejectedInput("apply_power: exponent must be finite");
  if (s == 0.0) return f;
  return op.apply_function([s](double t) { return std::pow(1.0 + t, s); }, f);
}

BesselKernel bessel_kernel(const SpectralOperator& op, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw RejectedInput("bessel_kernel: theta must lie in [0,1)");
  const Grid& g = op.grid();
  if (theta == 0.0) return {0.0, SampledFunction::delta(g), "delta"};
  const double s = -g.group().homogeneous_dimension() * theta / (2.0 * op.nu());
  BesselKernel k{theta, SampledFunction::zeros(g), ""};
  if (op.is_symbol()) {
    k.values = from_symbol(g, [s](std::span<const double> xi) {
      double r2 = 0.0;
      for (double v : xi) r2 += v * v;
      return cplx(std::pow(1.0 + 4.0 * std::numbers::pi * std::numbers::pi * r2, s));
    });
    k.provenance = "symbol";
  } else {
    k.values = op.apply_function_krylov([s](double t) { return std::pow(1.0 + t, s); }, SampledFunction::delta(g));
    k.provenance = "krylov";
  }
  double re = 0.0, im = 0.0;
  for (const auto& v : k.values.values()) {
    re = std::max(re, std::abs(v.real()));
    im = std::max(im, std::abs(v.imag()));
  }
  if (im > 1e-10 * re) throw NumericalFailure("real-kernel", "imaginary part " + std::to_string(im / re) + " of max");
  return k;
}

double dilation_identity_check(const Grid& grid, const SpectralFunction& kappa, double r) {
  if (!grid.group().is_abelian()) throw Unsupported("dilation_identity_check: needs an abelian grid");
  if (!(r > 0.0) || !std::isfinite(r)) throw RejectedInput("dilation_identity_check: r must be positive");
  const double nu = 2.0;
  const double rnu = std::pow(r, nu);
  const auto lhs = SpectralOperator::laplacian(grid).apply_function([&](double t) { return kappa(rnu * t); },
                                                                    SampledFunction::delta(grid));
  const Grid fine(grid.group(), grid.spacing() / r, grid.half_extent());
  const auto k1 = SpectralOperator::laplacian(fine).apply_function(kappa, SampledFunction::delta(fine));
  const double scale = std::pow(r, -grid.group().homogeneous_dimension());
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx rhs = scale * k1[i];
    if (std::abs(rhs) <= 1e-8) continue;
    err = std::max(err, std::abs(lhs[i] - rhs) / std::abs(rhs));
  }
  return err;
}

MonotonicityResult spectral_monotonicity_check(const SpectralOperator& op, double a, double b,
                                               const SampledFunction& f) {
  if (!(a >= 0.0) || !(b > 0.0)) throw RejectedInput("monotonicity: need a >= 0 and b > 0");
  const double tol = 1e-8 * op.norm_bound();
  const auto keep = [tol](double t) { return t >= tol ? 1.0 : 0.0; };
  const double f2 = lp_norm(f, 2);
  const double proj = lp_norm(op.apply_function(keep, f), 2);
  if (!(proj > 1e-12 * f2))
    throw RejectedInput("monotonicity: f lies in the excluded eigenspace (eigenvalues below " + std::to_string(tol) + ")");
  MonotonicityResult m;
  m.lhs = lp_norm(op.apply_function([&](double t) { return t >= tol ? std::pow(a + t, -b) : 0.0; }, f), 2);
  m.rhs = lp_norm(op.apply_function([&](double t) { return t >= tol ? std::pow(t, -b) : 0.0; }, f), 2);
  m.slack = m.rhs - m.lhs;
  m.holds = m.lhs <= m.rhs * (1 + 1e-12);
  return m;
}

}  // namespace oscweak
