#pragma once

// Homogeneous (graded, step <= 2) Lie groups in canonical exponential
// coordinates. The group law is x*y = x + y + [x,y]/2, which is the exact
// Baker-Campbell-Hausdorff product whenever all brackets are central.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oscweak {

/// Integer dilation exponents nu_1..nu_n (all >= 1).
class DilationWeights {
 public:
  DilationWeights() = default;
  explicit DilationWeights(std::vector<int> weights);

  /// Rescales positive rational weights (e.g. 0.5, 0.5, 1) to the smallest
  /// integer family with the same ratios.
  static DilationWeights from_rational(std::span<const double> weights);

  const std::vector<int>& values() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  int operator[](std::size_t i) const { return weights_[i]; }
  int max() const;

  /// Q = sum of the weights.
  int homogeneous_dimension() const;

  friend bool operator==(const DilationWeights&, const DilationWeights&) = default;

 private:
  std::vector<int> weights_;
};

/// Point of the group, coordinates in the exponential chart.
struct GroupElement {
  std::vector<double> coords;

  GroupElement() = default;
  explicit GroupElement(std::vector<double> c) : coords(std::move(c)) {}
  GroupElement(std::initializer_list<double> c) : coords(c) {}

  std::size_t size() const noexcept { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }
  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

/// One structure constant: [X_i, X_j] has coefficient c on X_k (i < j).
struct StructureConstant {
  std::size_t i = 0, j = 0, k = 0;
  double c = 0.0;
  friend bool operator==(const StructureConstant&, const StructureConstant&) = default;
};

/// Only the max-type gauge |x| = max_i |x_i|^{1/nu_i} ships today.
enum class QuasiNormKind { MaxType };

class HomogeneousGroup {
 public:
  /// Validates that brackets respect the grading (nu_k = nu_i + nu_j) and
  /// that the algebra has step <= 2, then measures the quasi-triangle
  /// constant (cached per descriptor for the process lifetime).
  HomogeneousGroup(std::string name, DilationWeights weights,
                   std::vector<StructureConstant> brackets,
                   QuasiNormKind norm = QuasiNormKind::MaxType);

  /// R^n with unit weights.
  static HomogeneousGroup abelian(std::size_t n);
  /// Heisenberg group H^n in coordinates (x_1..x_n, y_1..y_n, t).
  static HomogeneousGroup heisenberg(std::size_t n);
  /// "abelian:n" or "heisenberg:n".
  static HomogeneousGroup from_name(std::string_view name);
  /// Text descriptor, one item per line:
  ///   dim = 3
  ///   weights = 1, 1, 2
  ///   bracket = 0 1 2 1.0      (i j k c : [X_i,X_j] = c X_k)
  static HomogeneousGroup from_descriptor(std::string_view text);

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return weights_.size(); }
  const DilationWeights& weights() const noexcept { return weights_; }
  const std::vector<StructureConstant>& brackets() const noexcept { return brackets_; }
  bool is_abelian() const noexcept { return brackets_.empty(); }
  int homogeneous_dimension() const { return weights_.homogeneous_dimension(); }
  QuasiNormKind quasi_norm_kind() const noexcept { return norm_kind_; }

  GroupElement identity() const { return GroupElement(std::vector<double>(dim(), 0.0)); }
  GroupElement product(const GroupElement& x, const GroupElement& y) const;
  GroupElement inverse(const GroupElement& x) const;
  GroupElement dilate(double r, const GroupElement& x) const;
  double quasi_norm(const GroupElement& x) const;

  // Allocation-free forms used in the lattice kernels. Output may alias
  // neither input.
  void product_into(std::span<const double> x, std::span<const double> y,
                    std::span<double> out) const;
  /// out = x^{-1} * y.
  void left_quotient_into(std::span<const double> x, std::span<const double> y,
                          std::span<double> out) const;
  double quasi_norm(std::span<const double> x) const;

  /// Axis-aligned bounds of { x * z : lo <= z <= hi } for a fixed x.
  void translate_box(std::span<const double> x, std::span<const double> lo,
                     std::span<const double> hi, std::span<double> out_lo,
                     std::span<double> out_hi) const;

  /// Empirical sup of |x*y| / (|x| + |y|), measured at construction.
  double quasi_triangle_constant() const noexcept { return c_qn_; }

  /// Re-estimates the constant from `samples` pairs of the given seed.
  double estimate_quasi_triangle_constant(std::size_t samples, std::uint64_t seed) const;

  /// Canonical string identifying weights and brackets.
  std::string descriptor() const;

  friend bool operator==(const HomogeneousGroup& a, const HomogeneousGroup& b) {
    return a.weights_ == b.weights_ && a.brackets_ == b.brackets_;
  }

 private:
  void check_dim(std::size_t n) const;

  std::string name_;
  DilationWeights weights_;
  std::vector<StructureConstant> brackets_;
  QuasiNormKind norm_kind_;
  double c_qn_ = 1.0;
};

}  // namespace oscweak
