#pragma once

// Mollified bad part, the replacement estimate, the F = F1 + F2 split of
// (1 + R)^{-Q theta / (2 nu)} b~ and the assembled weak-(1,1) bound.

#include <cstddef>
#include <optional>
#include <vector>

#include "oscweak/czd.hpp"
#include "oscweak/kernels.hpp"
#include "oscweak/lattice.hpp"
#include "oscweak/spectral.hpp"

namespace oscweak {

enum class MollifierPolicy {
  /// Any eps_j below resolution or reaching past the grid is an error naming the piece.
  Reject,
  /// phi_j = delta_h in those cases.
  DeltaBelowResolution,
};

struct Mollifier {
  double diam = 0.0;  // 2 r_j
  double eps = 0.0;   // (diam / 2)^{1 / (1 - theta)}
  bool kept = false;  // diam < max_diam
  bool delta = false;
  /// Resolved, but b_j * phi_j would leave the grid; replaced by delta.
  bool clipped = false;
  /// Normalized bump on a small grid around e; empty for delta or dropped pieces.
  std::optional<SampledFunction> phi;
};

struct MollifierFamily {
  double theta = 0.0;
  double max_diam = 1.0;
  std::vector<Mollifier> pieces;
  std::size_t kept_count() const;
};

/// eps_j = 2^{-1/(1-theta)} diam(I_j)^{1/(1-theta)}. The base bump is
/// smooth_bump of radius 1 normalized to unit mass on the lattice. A scale is
/// resolved when eps^{nu_i} > h for every i and I_j * supp phi_j stays on the
/// grid. Pieces with diam >= max_diam (capped at 1) are marked dropped.
MollifierFamily build_mollifiers(const CZDecomposition& d, double theta,
                                 MollifierPolicy policy = MollifierPolicy::DeltaBelowResolution,
                                 double max_diam = 1.0);

/// eps for a given diameter and theta.
double mollifier_radius(double diam, double theta);

struct SmoothedBadPart {
  SampledFunction b_tilde;
  /// b_j * phi_j per piece; zero for dropped pieces.
  std::vector<SampledFunction> pieces;
  double max_cancellation = 0.0;  // max |int b~_j| / ||b_j||_1
};

/// Sum over kept pieces. Throws NumericalFailure when |int b~_j| exceeds
/// 1e-10 ||b_j||_1 (mass lost at the grid edge, for instance).
SmoothedBadPart smooth_bad_part(const CZDecomposition& d, const MollifierFamily& m);

struct ReplacementEstimate {
  double outside_l1 = 0.0;  // ||(b - b~) * K||_{L1(G \ I*)}
  double seminorm = 0.0;    // [K]_{H, theta}
  double f_l1 = 0.0;
  double ratio = 0.0;       // outside_l1 / (seminorm f_l1); 0 when outside_l1 = 0, inf when only the seminorm is
};

ReplacementEstimate replacement_estimate(const CZDecomposition& d, const MollifierFamily& m,
                                         const SampledFunction& K, double theta,
                                         std::span<const double> R_values, const SeminormOptions& opt = {});

/// Same, reusing precomputed pieces of the computation.
ReplacementEstimate replacement_estimate(const CZDecomposition& d, const SmoothedBadPart& s,
                                         const EnlargedUnion& istar, const SampledFunction& K, double seminorm);

enum class AdjacencyRule {
  /// x ~ I_j: x in I_j or in some I_j' meeting I_j.
  Neighbourhood,
  /// x in I_j only.
  Ball,
};

struct F1Piece {
  std::size_t j = 0;
  std::vector<std::size_t> nodes;
  std::vector<cplx> values;
  double l2_squared() const;
};

struct SplitResult {
  SampledFunction F;
  std::vector<F1Piece> F1_pieces;
  SampledFunction F2;
  /// Per grid node, the pieces j with x ~ I_j.
  std::vector<std::vector<std::size_t>> adjacency;
  /// Per kept piece, the pieces whose balls share a lattice node with it.
  std::vector<std::vector<std::size_t>> overlaps;
  std::size_t max_incidence = 0;
  std::size_t max_degree = 0;  // max |overlaps[j]|, counting j itself
  SampledFunction F1() const;
};

struct SplitOptions {
  AdjacencyRule rule = AdjacencyRule::Neighbourhood;
  /// Reused when given; otherwise computed from the operator.
  const BesselKernel* kernel = nullptr;
};

/// F = apply_power(-Q theta / (2 nu), b~). F1^j is b~_j * k_theta on the
/// nodes x ~ I_j and F2 = F - sum F1^j. Asserts the per-node count of pieces
/// against M0 (Ball) or M0 times the largest overlap degree (Neighbourhood).
SplitResult split_F(const CZDecomposition& d, const MollifierFamily& m, const SmoothedBadPart& s,
                    const SpectralOperator& op, double theta, const SplitOptions& opt = {});
SplitResult split_F(const CZDecomposition& d, const MollifierFamily& m, const SpectralOperator& op,
                    double theta, const SplitOptions& opt = {});

struct SplitBounds {
  double C_F2 = 0.0;     // ||F2||^2 / (alpha gamma ||f||_1)
  double A_prime = 0.0;  // max_j ||F1^j||^2 / (alpha^2 |I_j|)
  std::vector<double> per_piece;
  double F1_l2_squared = 0.0;
  double sum_piece_l2_squared = 0.0;
};

/// Asserts ||F1||^2 <= n ||F1^j||^2 summed, n the largest per-node count.
SplitBounds split_bounds(const SplitResult& s, const CZDecomposition& d);

struct LevelTerms {
  double alpha = 0.0;
  double lhs = 0.0;      // alpha |{|Tf| > alpha}|
  double good = 0.0;     // 4 ||Tg||^2 / alpha
  double istar = 0.0;    // alpha |I*|
  double repl = 0.0;     // 4 ||T(b - b~)||_{L1(G \ I*)}
  double smooth = 0.0;   // 16 ||T b~||^2 / alpha
  double bound = 0.0;
  std::size_t pieces = 0;
  std::size_t kept = 0;
  std::size_t delta_mollifiers = 0;
  int M0 = 0;
  double C_F2 = 0.0;
  double A_prime = 0.0;
  double replacement_ratio = 0.0;
};

struct Weak11Options {
  double gamma = 1.0;
  int k_min = -6;
  int k_max = 6;
  /// Pieces with diam >= max_diam leave the split; the kernel support
  /// diameter is a natural choice.
  double max_diam = 1.0;
  MollifierPolicy policy = MollifierPolicy::DeltaBelowResolution;
  AdjacencyRule rule = AdjacencyRule::Neighbourhood;
  std::vector<double> R_values = dyadic_radii(6);
  SeminormOptions seminorm;
  bool with_split = true;
};

struct Weak11Report {
  double theta = 0.0;
  double f_l1 = 0.0;
  double weak_norm = 0.0;  // weak_l1_quasinorm(Tf)
  double grid_sup = 0.0;   // max over the alpha grid of alpha |{|Tf| > alpha}|
  double seminorm = 0.0;
  std::vector<LevelTerms> levels;
  // Maxima over levels, normalized by ||f||_1 where the bound term is.
  double C_good = 0.0;
  double C_Istar = 0.0;
  double C_repl = 0.0;
  double C_smooth = 0.0;
  double C_F2 = 0.0;
  double A_prime = 0.0;
  double weak11_ratio = 0.0;  // weak_norm / ||f||_1
  double bound_ratio = 0.0;   // max over levels of lhs / bound
};

/// alpha_k = 2^k ||f||_1 / |grid|, k = k_min..k_max.
std::vector<double> alpha_grid(const SampledFunction& f, int k_min = -6, int k_max = 6);

/// Tf = f * K directly. For each alpha on the grid whose level is accepted by
/// cz_decompose, assembles
///   alpha |{|Tf| > alpha}| <= 4 ||Tg||^2 / alpha + alpha |I*|
///                             + 4 ||T(b - b~)||_{L1(G \ I*)} + 16 ||T b~||^2 / alpha
/// from measured quantities and asserts each Chebyshev step.
Weak11Report weak11_certify(const SampledFunction& f, const SampledFunction& K, double theta,
                            const SpectralOperator& op, const Weak11Options& opt = {});

/// sup over the alpha grid of alpha |{|Tf| > alpha}| / ||f||_1.
double weak_ratio_on_grid(const SampledFunction& Tf, const SampledFunction& f, int k_min = -6, int k_max = 6);

}  // namespace oscweak
