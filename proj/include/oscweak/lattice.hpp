#pragma once

// Centered lattices on a homogeneous group, sampled functions with the Haar
// rectangle rule, norms, weak-L1 and group convolution.

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oscweak/errors.hpp"
#include "oscweak/group.hpp"

namespace oscweak {

using cplx = std::complex<double>;

/// Nodes h*k, k_i in [-m_i, m_i], in canonical coordinates. Node order is
/// row-major with coordinate 0 slowest.
class Grid {
 public:
  Grid(HomogeneousGroup group, double spacing, std::vector<int> half_extent);
  static Grid cube(HomogeneousGroup group, double spacing, int half_extent);

  const HomogeneousGroup& group() const noexcept { return group_; }
  std::size_t dim() const noexcept { return half_extent_.size(); }
  double spacing() const noexcept { return h_; }
  const std::vector<int>& half_extent() const noexcept { return half_extent_; }
  int half_extent(std::size_t i) const { return half_extent_[i]; }
  std::size_t extent(std::size_t i) const { return 2 * static_cast<std::size_t>(half_extent_[i]) + 1; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t i) const { return strides_[i]; }
  /// Haar weight of one node, h^n.
  double cell_measure() const noexcept { return cell_; }

  /// Index of the node with signed offsets k (k_i in [-m_i, m_i]).
  std::size_t index(std::span<const int> k) const;
  void offsets(std::size_t idx, std::span<int> k) const;
  void coords(std::size_t idx, std::span<double> x) const;
  GroupElement node(std::size_t idx) const;
  std::size_t identity_index() const;

  /// Same group and spacing; extents may differ.
  bool same_lattice(const Grid& other) const;
  friend bool operator==(const Grid& a, const Grid& b) {
    return a.same_lattice(b) && a.half_extent_ == b.half_extent_;
  }

 private:
  HomogeneousGroup group_;
  double h_;
  std::vector<int> half_extent_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double cell_ = 1.0;
};

/// Inclusive box of signed node offsets; empty when lo > hi somewhere.
struct OffsetBox {
  std::vector<int> lo, hi;
  bool empty = true;
};

class SampledFunction {
 public:
  SampledFunction(Grid grid, std::vector<cplx> values);
  static SampledFunction zeros(Grid grid);
  /// Discrete delta of unit mass at the identity: value h^{-n} at e.
  static SampledFunction delta(Grid grid);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Multilinear interpolation with zero extension beyond the outer nodes.
  /// Coordinates within 1e-9 cells of a node snap to it, so on-lattice
  /// queries return stored values exactly.
  cplx interpolate(std::span<const double> point) const;

  /// Bounding box of the nonzero nodes.
  OffsetBox support_box() const;
  std::size_t nonzero_count() const;

  SampledFunction scaled(cplx c) const;
  friend SampledFunction operator+(const SampledFunction& a, const SampledFunction& b);
  friend SampledFunction operator-(const SampledFunction& a, const SampledFunction& b);

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

using PointRule = std::function<cplx(std::span<const double>)>;

/// values[k] = fn(node_k). A non-finite value is rejected with its node.
SampledFunction sample(const Grid& grid, const PointRule& fn);

/// Rectangle rule with Haar weight h^n.
cplx integrate(const SampledFunction& f);

/// (sum |f|^p h^n)^{1/p}; p = infinity gives max |f|. p < 1 is rejected.
double lp_norm(const SampledFunction& f, double p);

/// sup_alpha alpha * |{ |f| > alpha }|. The supremum over alpha > 0 is the
/// left limit at an attained value v, so this returns max_v v * |{|f| >= v}|.
double weak_l1_quasinorm(const SampledFunction& f);

enum class ConvolutionMethod { Auto, Direct, Fft };

/// (f*K)(x) = sum_y f(y) K(y^{-1} x) h^n on f's grid. K is interpolated
/// multilinearly on its own grid and vanishes outside it. Auto takes the
/// FFT path on abelian groups when both grids share the spacing.
SampledFunction convolve(const SampledFunction& f, const SampledFunction& kernel,
                         ConvolutionMethod method = ConvolutionMethod::Auto);

/// Coordinate bounds (lo, hi) of {y * z : y in box_a, z in box_b}.
void product_box(const HomogeneousGroup& g, std::span<const double> alo, std::span<const double> ahi,
                 std::span<const double> blo, std::span<const double> bhi, std::span<double> out_lo,
                 std::span<double> out_hi);

// Binary block: little-endian int64 dim, int64 weights[dim], float64 h,
// int64 half_extent[dim], then N pairs (re, im) of float64, row-major.
void write_binary(const SampledFunction& f, std::ostream& out);
/// The group supplies the law; its dimension and weights must match the header.
SampledFunction read_binary(std::istream& in, const HomogeneousGroup& group);

/// Columns x0..x{n-1}, re, im. Grids above 1e6 nodes are rejected.
void write_csv(const SampledFunction& f, std::ostream& out);

}  // namespace oscweak
