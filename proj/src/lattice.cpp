#include "oscweak/lattice.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "oscweak/fft.hpp"

namespace oscweak {

namespace {

constexpr std::size_t kMaxDim = 8;
constexpr double kSnap = 1e-9;

}  // namespace

Grid::Grid(HomogeneousGroup group, double spacing, std::vector<int> half_extent)
    : group_(std::move(group)), h_(spacing), half_extent_(std::move(half_extent)) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw RejectedInput("grid: spacing must be positive");
  if (half_extent_.size() != group_.dim())
    throw RejectedInput("grid: need one half extent per coordinate of " + group_.name());
  if (dim() > kMaxDim) throw RejectedInput("grid: dimension above 8 is not supported");
  for (int m : half_extent_)
    if (m < 0) throw RejectedInput("grid: half extents must be >= 0");
  strides_.assign(dim(), 1);
  size_ = 1;
  for (std::size_t i = dim(); i-- > 0;) {
    strides_[i] = size_;
    size_ *= extent(i);
  }
  cell_ = std::pow(h_, static_cast<double>(dim()));
}

Grid Grid::cube(HomogeneousGroup group, double spacing, int half_extent) {
  const std::size_t n = group.dim();
  return Grid(std::move(group), spacing, std::vector<int>(n, half_extent));
}

std::size_t Grid::index(std::span<const int> k) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (k[i] < -half_extent_[i] || k[i] > half_extent_[i]) throw RejectedInput("grid: offset outside the lattice");
    idx += static_cast<std::size_t>(k[i] + half_extent_[i]) * strides_[i];
  }
  return idx;
}

void Grid::offsets(std::size_t idx, std::span<int> k) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    k[i] = static_cast<int>(idx / strides_[i]) - half_extent_[i];
    idx %= strides_[i];
  }
}

void Grid::coords(std::size_t idx, std::span<double> x) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    x[i] = h_ * (static_cast<int>(idx / strides_[i]) - half_extent_[i]);
    idx %= strides_[i];
  }
}

GroupElement Grid::node(std::size_t idx) const {
  GroupElement g{std::vector<double>(dim())};
  coords(idx, g.coords);
  return g;
}

std::size_t Grid::identity_index() const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dim(); ++i) idx += static_cast<std::size_t>(half_extent_[i]) * strides_[i];
  return idx;
}

bool Grid::same_lattice(const Grid& other) const { return group_ == other.group_ && h_ == other.h_; }

SampledFunction::SampledFunction(Grid grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw RejectedInput("sampled function: " + std::to_string(values_.size()) + " values for " +
                        std::to_string(grid_.size()) + " nodes");
}

SampledFunction SampledFunction::zeros(Grid grid) {
  const std::size_t n = grid.size();
  return SampledFunction(std::move(grid), std::vector<cplx>(n));
}

SampledFunction SampledFunction::delta(Grid grid) {
  std::vector<cplx> v(grid.size());
  v[grid.identity_index()] = 1.0 / grid.cell_measure();
  return SampledFunction(std::move(grid), std::move(v));
}

cplx SampledFunction::interpolate(std::span<const double> point) const {
  const std::size_t n = grid_.dim();
  std::array<long, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  std::array<std::size_t, kMaxDim> moving{};
  std::size_t nmoving = 0;
  const double inv_h = 1.0 / grid_.spacing();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = point[i] * inv_h + grid_.half_extent(i);
    const long hi = static_cast<long>(grid_.extent(i)) - 1;
    if (!(u > -1.0 + kSnap && u < hi + 1.0 - kSnap)) return 0.0;
    const double r = std::round(u);
    if (std::abs(u - r) < kSnap) {
      base[i] = static_cast<long>(r);
      frac[i] = 0.0;
    } else {
      base[i] = static_cast<long>(std::floor(u));
      frac[i] = u - static_cast<double>(base[i]);
      moving[nmoving++] = i;
    }
  }
  cplx acc = 0.0;
  const std::size_t corners = std::size_t{1} << nmoving;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t idx = 0;
    bool inside = true;
    std::array<long, kMaxDim> k = base;
    for (std::size_t b = 0; b < nmoving; ++b) {
      const std::size_t i = moving[b];
      if (c >> b & 1) {
        k[i] += 1;
        w *= frac[i];
      } else {
        w *= 1.0 - frac[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (k[i] < 0 || k[i] >= static_cast<long>(grid_.extent(i))) {
        inside = false;
        break;
      }
      idx += static_cast<std::size_t>(k[i]) * grid_.stride(i);
    }
    if (inside) acc += w * values_[idx];
  }
  return acc;
}

OffsetBox SampledFunction::support_box() const {
  const std::size_t n = grid_.dim();
  OffsetBox box;
  box.lo.assign(n, 0);
  box.hi.assign(n, 0);
  std::vector<int> k(n);
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    if (values_[idx] == cplx(0.0)) continue;
    grid_.offsets(idx, k);
    if (box.empty) {
      box.lo = k;
      box.hi = k;
      box.empty = false;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        box.lo[i] = std::min(box.lo[i], k[i]);
        box.hi[i] = std::max(box.hi[i], k[i]);
      }
    }
  }
  return box;
}

std::size_t SampledFunction::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](const cplx& v) { return v != cplx(0.0); }));
}

SampledFunction SampledFunction::scaled(cplx c) const {
  std::vector<cplx> v(values_);
  for (auto& x : v) x *= c;
  return SampledFunction(grid_, std::move(v));
}

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b) {
  if (!(a.grid_ == b.grid_)) throw RejectedInput("sampled function sum: grids differ");
  std::vector<cplx> v(a.values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.values_[i];
  return SampledFunction(a.grid_, std::move(v));
}

SampledFunction operator-(const SampledFunction& a, const SampledFunction& b) {
  if (!(a.grid_ == b.grid_)) throw RejectedInput("sampled function difference: grids differ");
  std::vector<cplx> v(a.values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b.values_[i];
  return SampledFunction(a.grid_, std::move(v));
}

SampledFunction sample(const Grid& grid, const PointRule& fn) {
  std::vector<cplx> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    grid.coords(idx, x);
    v[idx] = fn(x);
    if (!std::isfinite(v[idx].real()) || !std::isfinite(v[idx].imag())) {
      std::ostringstream os;
      os << "sample: non-finite value at node (";
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << ")";
      throw RejectedInput(os.str());
    }
  }
  return SampledFunction(grid, std::move(v));
}

cplx integrate(const SampledFunction& f) {
  // Mirror pairs x, x^{-1} = -x are added first; odd functions cancel exactly.
  const auto v = f.values();
  const std::size_t n = v.size();
  cplx s = v[n / 2];
  for (std::size_t i = 0; i < n / 2; ++i) s += v[i] + v[n - 1 - i];
  return s * f.grid().cell_measure();
}

double lp_norm(const SampledFunction& f, double p) {
  if (std::isinf(p) && p > 0) {
    double m = 0.0;
    for (const auto& v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw RejectedInput("lp_norm: p must be >= 1 or infinity");
  double s = 0.0;
  if (p == 1.0) {
    for (const auto& v : f.values()) s += std::abs(v);
    return s * f.grid().cell_measure();
  }
  if (p == 2.0) {
    for (const auto& v : f.values()) s += std::norm(v);
    return std::sqrt(s * f.grid().cell_measure());
  }
  for (const auto& v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().cell_measure(), 1.0 / p);
}

double weak_l1_quasinorm(const SampledFunction& f) {
  std::vector<double> mags;
  mags.reserve(f.size());
  for (const auto& v : f.values()) {
    const double a = std::abs(v);
    if (a > 0.0) mags.push_back(a);
  }
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double best = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    // Only the last node of a run of equal values sees the full count.
    if (i + 1 < mags.size() && mags[i + 1] == mags[i]) continue;
    best = std::max(best, mags[i] * static_cast<double>(i + 1));
  }
  return best * f.grid().cell_measure();
}

void product_box(const HomogeneousGroup& g, std::span<const double> alo, std::span<const double> ahi,
                 std::span<const double> blo, std::span<const double> bhi, std::span<double> out_lo,
                 std::span<double> out_hi) {
  const std::size_t n = g.dim();
  for (std::size_t k = 0; k < n; ++k) {
    out_lo[k] = alo[k] + blo[k];
    out_hi[k] = ahi[k] + bhi[k];
  }
  auto mul = [](double a0, double a1, double b0, double b1) {
    const double p[4] = {a0 * b0, a0 * b1, a1 * b0, a1 * b1};
    return std::pair{*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
  };
  for (const auto& br : g.brackets()) {
    const double s = 0.5 * br.c;
    auto [p0, p1] = mul(alo[br.i], ahi[br.i], blo[br.j], bhi[br.j]);
    auto [q0, q1] = mul(alo[br.j], ahi[br.j], blo[br.i], bhi[br.i]);
    // s * (p - q)
    const double d0 = p0 - q1, d1 = p1 - q0;
    out_lo[br.k] += std::min(s * d0, s * d1);
    out_hi[br.k] += std::max(s * d0, s * d1);
  }
}

namespace {

SampledFunction convolve_fft(const SampledFunction& f, const SampledFunction& kernel) {
  const Grid& fg = f.grid();
  const Grid& kg = kernel.grid();
  const std::size_t n = fg.dim();
  std::vector<std::size_t> dims(n);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    dims[i] = fg.extent(i) + kg.extent(i) - 1;
    total *= dims[i];
  }
  std::vector<cplx> a(total), b(total);
  std::vector<std::size_t> pstride(n, 1);
  for (std::size_t i = n - 1; i-- > 0;) pstride[i] = pstride[i + 1] * dims[i + 1];
  std::vector<int> k(n);
  auto scatter = [&](const SampledFunction& src, std::vector<cplx>& dst) {
    const Grid& g = src.grid();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      g.offsets(idx, k);
      std::size_t p = 0;
      for (std::size_t i = 0; i < n; ++i) p += static_cast<std::size_t>(k[i] + g.half_extent(i)) * pstride[i];
      dst[p] = src[idx];
    }
  };
  scatter(f, a);
  scatter(kernel, b);
  fft::transform(a, dims, -1);
  fft::transform(b, dims, -1);
  for (std::size_t i = 0; i < total; ++i) a[i] *= b[i];
  fft::transform(a, dims, +1);
  const double scale = fg.cell_measure() / static_cast<double>(total);
  std::vector<cplx> out(fg.size());
  for (std::size_t idx = 0; idx < fg.size(); ++idx) {
    fg.offsets(idx, k);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      p += static_cast<std::size_t>(k[i] + fg.half_extent(i) + kg.half_extent(i)) * pstride[i];
    out[idx] = a[p] * scale;
  }
  return SampledFunction(fg, std::move(out));
}

SampledFunction convolve_direct(const SampledFunction& f, const SampledFunction& kernel) {
  const Grid& fg = f.grid();
  const Grid& kg = kernel.grid();
  const HomogeneousGroup& g = fg.group();
  const std::size_t n = fg.dim();
  const double h = fg.spacing(), hk = kg.spacing();
  std::vector<cplx> out(fg.size());
  const OffsetBox fbox = f.support_box();
  const OffsetBox kbox = kernel.support_box();
  if (fbox.empty || kbox.empty) return SampledFunction(fg, std::move(out));

  // The interpolant of K is nonzero only within one cell of its support.
  std::vector<double> klo(n), khi(n), nklo(n), nkhi(n), flo(n), fhi(n), olo(n), ohi(n);
  for (std::size_t i = 0; i < n; ++i) {
    klo[i] = (kbox.lo[i] - 1) * hk;
    khi[i] = (kbox.hi[i] + 1) * hk;
    nklo[i] = -khi[i];
    nkhi[i] = -klo[i];
    flo[i] = fbox.lo[i] * h;
    fhi[i] = fbox.hi[i] * h;
  }
  product_box(g, flo, fhi, klo, khi, olo, ohi);

  std::vector<std::size_t> nz;
  for (std::size_t idx = 0; idx < f.size(); ++idx)
    if (f[idx] != cplx(0.0)) nz.push_back(idx);
  std::vector<double> ycoords(nz.size() * n);
  for (std::size_t q = 0; q < nz.size(); ++q) fg.coords(nz[q], std::span<double>(ycoords).subspan(q * n, n));

  // Output nodes inside the product box.
  std::vector<int> out_lo(n), out_hi(n);
  std::size_t count = 1;
  for (std::size_t i = 0; i < n; ++i) {
    out_lo[i] = std::max(-fg.half_extent(i), static_cast<int>(std::floor(olo[i] / h - kSnap)));
    out_hi[i] = std::min(fg.half_extent(i), static_cast<int>(std::ceil(ohi[i] / h + kSnap)));
    if (out_lo[i] > out_hi[i]) return SampledFunction(fg, std::move(out));
    count *= static_cast<std::size_t>(out_hi[i] - out_lo[i] + 1);
  }

  const double weight = fg.cell_measure();
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t c = 0; c < count; ++c) {
    std::array<int, kMaxDim> kx{};
    std::size_t rem = c;
    for (std::size_t i = n; i-- > 0;) {
      const std::size_t span_i = static_cast<std::size_t>(out_hi[i] - out_lo[i] + 1);
      kx[i] = out_lo[i] + static_cast<int>(rem % span_i);
      rem /= span_i;
    }
    std::array<double, kMaxDim> x{}, z{}, ylo{}, yhi{}, y{};
    std::size_t xidx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = kx[i] * h;
      xidx += static_cast<std::size_t>(kx[i] + fg.half_extent(i)) * fg.stride(i);
    }
    std::span<const double> xs(x.data(), n);
    // y = x * z^{-1} with z in the kernel box.
    g.translate_box(xs, nklo, nkhi, std::span<double>(ylo.data(), n), std::span<double>(yhi.data(), n));
    std::array<int, kMaxDim> ylo_k{}, yhi_k{};
    std::size_t yvol = 1;
    bool empty = false;
    for (std::size_t i = 0; i < n; ++i) {
      ylo_k[i] = std::max(fbox.lo[i], static_cast<int>(std::floor(ylo[i] / h - kSnap)));
      yhi_k[i] = std::min(fbox.hi[i], static_cast<int>(std::ceil(yhi[i] / h + kSnap)));
      if (ylo_k[i] > yhi_k[i]) {
        empty = true;
        break;
      }
      yvol *= static_cast<std::size_t>(yhi_k[i] - ylo_k[i] + 1);
    }
    if (empty) continue;
    cplx acc = 0.0;
    if (nz.size() < yvol) {
      for (std::size_t q = 0; q < nz.size(); ++q) {
        std::span<const double> ys(ycoords.data() + q * n, n);
        g.left_quotient_into(ys, xs, std::span<double>(z.data(), n));
        const cplx kv = kernel.interpolate(std::span<const double>(z.data(), n));
        if (kv != cplx(0.0)) acc += f[nz[q]] * kv;
      }
    } else {
      std::array<int, kMaxDim> ky = ylo_k;
      for (std::size_t v = 0; v < yvol; ++v) {
        std::size_t yidx = 0;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = ky[i] * h;
          yidx += static_cast<std::size_t>(ky[i] + fg.half_extent(i)) * fg.stride(i);
        }
        const cplx fv = f[yidx];
        if (fv != cplx(0.0)) {
          g.left_quotient_into(std::span<const double>(y.data(), n), xs, std::span<double>(z.data(), n));
          acc += fv * kernel.interpolate(std::span<const double>(z.data(), n));
        }
        for (std::size_t i = n; i-- > 0;) {
          if (++ky[i] <= yhi_k[i]) break;
          ky[i] = ylo_k[i];
        }
      }
    }
    out[xidx] = acc * weight;
  }
  return SampledFunction(fg, std::move(out));
}

}  // namespace

SampledFunction convolve(const SampledFunction& f, const SampledFunction& kernel, ConvolutionMethod method) {
  if (!(f.grid().group() == kernel.grid().group()))
    throw RejectedInput("convolve: function and kernel live on different groups");
  const bool fft_ok = f.grid().group().is_abelian() && f.grid().spacing() == kernel.grid().spacing();
  if (method == ConvolutionMethod::Fft && !fft_ok)
    throw Unsupported("convolve: FFT path needs an abelian group and equal spacings");
  if (method == ConvolutionMethod::Fft || (method == ConvolutionMethod::Auto && fft_ok))
    return convolve_fft(f, kernel);
  return convolve_direct(f, kernel);
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw RejectedInput("read_binary: truncated block");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_binary(const SampledFunction& f, std::ostream& out) {
  const Grid& g = f.grid();
  put_u64(out, g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) put_u64(out, static_cast<std::uint64_t>(g.group().weights()[i]));
  put_f64(out, g.spacing());
  for (std::size_t i = 0; i < g.dim(); ++i) put_u64(out, static_cast<std::uint64_t>(g.half_extent(i)));
  for (const auto& v : f.values()) {
    put_f64(out, v.real());
    put_f64(out, v.imag());
  }
}

SampledFunction read_binary(std::istream& in, const HomogeneousGroup& group) {
  const std::uint64_t dim = get_u64(in);
  if (dim != group.dim()) throw RejectedInput("read_binary: dimension does not match " + group.name());
  for (std::size_t i = 0; i < dim; ++i)
    if (get_u64(in) != static_cast<std::uint64_t>(group.weights()[i]))
      throw RejectedInput("read_binary: weights do not match " + group.name());
  const double h = get_f64(in);
  std::vector<int> m(dim);
  for (auto& v : m) v = static_cast<int>(get_u64(in));
  Grid grid(group, h, m);
  std::vector<cplx> values(grid.size());
  for (auto& v : values) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    v = {re, im};
  }
  return SampledFunction(std::move(grid), std::move(values));
}

void write_csv(const SampledFunction& f, std::ostream& out) {
  const Grid& g = f.grid();
  if (g.size() > 1'000'000) throw RejectedInput("write_csv: grid too large for CSV, use the binary block");
  for (std::size_t i = 0; i < g.dim(); ++i) out << "x" << i << ",";
  out << "re,im\n";
  std::vector<double> x(g.dim());
  char buf[64];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    g.coords(idx, x);
    for (double c : x) {
      std::snprintf(buf, sizeof buf, "%.17g,", c);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f[idx].real(), f[idx].imag());
    out << buf;
  }
}

}  // namespace oscweak
