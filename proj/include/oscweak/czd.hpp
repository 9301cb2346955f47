#pragma once

// Calderon-Zygmund decomposition at level alpha*gamma on a lattice, built by
// a stopping time on anisotropic dyadic boxes.

#include <cstdint>
#include <vector>

#include "oscweak/lattice.hpp"

namespace oscweak {

struct CZLevel {
  double alpha = 1.0;
  double gamma = 1.0;
  double value() const { return alpha * gamma; }
};

/// Closed quasi-ball { x : |c^{-1} x| <= r }.
struct CZBall {
  GroupElement center;
  double radius = 0.0;
};

struct CZPiece {
  /// Stopping box in node offsets.
  OffsetBox cell;
  /// b_j on the box, row-major over the box.
  std::vector<cplx> values;
  CZBall ball;
  /// sum |b_j| h^n
  double l1 = 0.0;
};

struct CZDecomposition {
  SampledFunction good;
  std::vector<CZPiece> pieces;
  CZLevel level;
  /// Largest number of balls I_j sharing a lattice node.
  int M0 = 0;
  /// value_digest of the input; 0 skips the match check in verify_properties.
  std::uint64_t source_digest = 0;

  SampledFunction piece_function(std::size_t j) const;
  /// b = sum_j b_j.
  SampledFunction bad() const;
};

/// FNV-1a over the grid shape and the value bytes.
std::uint64_t value_digest(const SampledFunction& f);

/// Rejects ||f||_1 = 0, a non-positive level, and levels below the average
/// of |f| over the whole grid.
CZDecomposition cz_decompose(const SampledFunction& f, CZLevel level);

/// Measure of the ball counted on the unbounded lattice: (node count) h^n.
double ball_measure(const Grid& grid, const CZBall& ball);

/// Offsets of the unbounded-lattice nodes in the closed ball.
std::vector<std::vector<int>> ball_offsets(const Grid& grid, const CZBall& ball);

/// Largest number of balls containing a common lattice node.
int max_overlap(const Grid& grid, const std::vector<CZBall>& balls);

struct CZReport {
  double C1 = 0.0;  // ||g||_inf / (alpha gamma)
  double C2 = 0.0;  // max |I_j| / |box_j|
  double C3 = 0.0;  // max ||b_j||_1 / (alpha gamma |I_j|)
  double C4 = 0.0;  // alpha gamma sum |I_j| / ||f||_1
  double C5 = 0.0;  // sum ||b_j||_1 / ||f||_1
  double C6 = 0.0;  // M0
  int M0 = 0;
  std::size_t pieces = 0;
  double reconstruction_error = 0.0;  // max |g + sum b_j - f|
  double cancellation_residual = 0.0;  // max |integral b_j|
  double bad_l1 = 0.0;                 // ||b||_1
  double sum_piece_l1 = 0.0;           // sum ||b_j||_1
  double ball_measure_sum = 0.0;       // sum |I_j|
};

/// Throws NumericalFailure when reconstruction, cancellation, support or
/// ||b||_1 <= sum ||b_j||_1 fails; RejectedInput when f is not the source.
CZReport verify_properties(const CZDecomposition& d, const SampledFunction& f);

struct EnlargedUnion {
  /// Over the grid nodes.
  std::vector<char> mask;
  /// |I*| counted on the unbounded lattice.
  double measure = 0.0;
  /// |I*_j| / |I_j| per piece.
  std::vector<double> doubling_ratios;
};

/// I* = union of B(x_j, 2 r_j).
EnlargedUnion enlarged_union(const CZDecomposition& d);

}  // namespace oscweak
