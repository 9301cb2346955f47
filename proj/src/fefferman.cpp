#include "oscweak/fefferman.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "oscweak/errors.hpp"

namespace oscweak {

namespace {

struct OffsetHash {
  std::size_t operator()(const std::vector<int>& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int v : k) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

bool inside(const Grid& g, const std::vector<int>& k) {
  for (std::size_t i = 0; i < k.size(); ++i)
    if (std::abs(k[i]) > g.half_extent(i)) return false;
  return true;
}

double l2_squared(const SampledFunction& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s * f.grid().cell_measure();
}

double measure_above(const SampledFunction& f, double level) {
  std::size_t n = 0;
  for (const auto& v : f.values())
    if (std::abs(v) > level) ++n;
  return static_cast<double>(n) * f.grid().cell_measure();
}

SampledFunction reconstruct(const CZDecomposition& d) { return d.good + d.bad(); }

}  // namespace

std::size_t MollifierFamily::kept_count() const {
  return static_cast<std::size_t>(std::count_if(pieces.begin(), pieces.end(), [](const Mollifier& m) { return m.kept; }));
}

double mollifier_radius(double diam, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw RejectedInput("mollifier: theta must lie in [0,1)");
  if (!(diam > 0.0)) throw RejectedInput("mollifier: diameter must be positive");
  const double p = 1.0 / (1.0 - theta);
  return std::pow(2.0, -p) * std::pow(diam, p);
}

MollifierFamily build_mollifiers(const CZDecomposition& d, double theta, MollifierPolicy policy, double max_diam) {
  if (!(max_diam > 0.0)) throw RejectedInput("build_mollifiers: max_diam must be positive");
  const Grid& g = d.good.grid();
  const auto& w = g.group().weights();
  const double h = g.spacing();
  MollifierFamily fam;
  fam.theta = theta;
  fam.max_diam = std::min(max_diam, 1.0);
  fam.pieces.reserve(d.pieces.size());
  for (std::size_t j = 0; j < d.pieces.size(); ++j) {
    Mollifier m;
    m.diam = 2.0 * d.pieces[j].ball.radius;
    m.eps = mollifier_radius(m.diam, theta);
    m.kept = m.diam < fam.max_diam;
    if (m.kept) {
      bool resolved = true;
      std::vector<int> half(g.dim());
      for (std::size_t i = 0; i < g.dim(); ++i) {
        const double e = std::pow(m.eps, w[i]);
        if (!(e > h)) resolved = false;
        half[i] = static_cast<int>(std::ceil(e / h));
      }
      // b_j * phi_j must stay on the grid or its mass leaks.
      bool fits = true;
      if (resolved) {
        const std::size_t n = g.dim();
        std::vector<double> alo(n), ahi(n), plo(n), phi(n), olo(n), ohi(n);
        for (std::size_t i = 0; i < n; ++i) {
          alo[i] = d.pieces[j].cell.lo[i] * h;
          ahi[i] = d.pieces[j].cell.hi[i] * h;
          phi[i] = half[i] * h;
          plo[i] = -phi[i];
        }
        product_box(g.group(), alo, ahi, plo, phi, olo, ohi);
        for (std::size_t i = 0; i < n; ++i)
          if (olo[i] < -g.half_extent(i) * h - 1e-9 * h || ohi[i] > g.half_extent(i) * h + 1e-9 * h) fits = false;
      }
      if (!resolved || !fits) {
        if (policy == MollifierPolicy::Reject)
          throw RejectedInput("build_mollifiers: eps_" + std::to_string(j) + " = " + std::to_string(m.eps) +
                              (resolved ? " reaches past the grid edge" : " is below the grid resolution"));
        m.delta = true;
        m.clipped = resolved;
      } else {
        const Grid small(g.group(), h, half);
        const auto bump = smooth_bump(small, m.eps);
        const double mass = integrate(bump).real();
        m.phi = bump.scaled(1.0 / mass);
        const double err = std::abs(integrate(*m.phi).real() - 1.0);
        if (err > 1e-12) throw NumericalFailure("mollifier-mass", "piece " + std::to_string(j));
      }
    }
    fam.pieces.push_back(std::move(m));
  }
  return fam;
}

SmoothedBadPart smooth_bad_part(const CZDecomposition& d, const MollifierFamily& m) {
  if (m.pieces.size() != d.pieces.size())
    throw RejectedInput("smooth_bad_part: mollifier family does not match the decomposition");
  const Grid& g = d.good.grid();
  const std::size_t np = d.pieces.size();
  std::vector<SampledFunction> out(np, SampledFunction::zeros(g));
  std::vector<double> canc(np, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < np; ++j) {
    if (!m.pieces[j].kept) continue;
    const auto bj = d.piece_function(j);
    out[j] = m.pieces[j].delta ? bj : convolve(bj, *m.pieces[j].phi, ConvolutionMethod::Direct);
    const double l1 = d.pieces[j].l1;
    if (l1 > 0.0) canc[j] = std::abs(integrate(out[j])) / l1;
  }
  SmoothedBadPart s{SampledFunction::zeros(g), {}, 0.0};
  std::vector<cplx> sum(g.size());
  for (std::size_t j = 0; j < np; ++j) {
    if (!m.pieces[j].kept) continue;
    if (canc[j] > 1e-10)
      throw NumericalFailure("mollified-cancellation",
                             "piece " + std::to_string(j) + ": |int b~_j| / ||b_j||_1 = " + std::to_string(canc[j]));
    s.max_cancellation = std::max(s.max_cancellation, canc[j]);
    for (std::size_t i = 0; i < g.size(); ++i) sum[i] += out[j][i];
  }
  s.b_tilde = SampledFunction(g, std::move(sum));
  s.pieces = std::move(out);
  return s;
}

ReplacementEstimate replacement_estimate(const CZDecomposition& d, const SmoothedBadPart& s,
                                         const EnlargedUnion& istar, const SampledFunction& K, double seminorm) {
  const Grid& g = d.good.grid();
  ReplacementEstimate r;
  r.seminorm = seminorm;
  r.f_l1 = lp_norm(reconstruct(d), 1);
  const auto delta_b = d.bad() - s.b_tilde;
  if (delta_b.nonzero_count() == 0) return r;
  const auto diff = convolve(delta_b, K);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!istar.mask[i]) r.outside_l1 += std::abs(diff[i]);
  r.outside_l1 *= g.cell_measure();
  if (r.outside_l1 > 0.0) r.ratio = seminorm > 0.0 ? r.outside_l1 / (seminorm * r.f_l1) : INFINITY;
  return r;
}

ReplacementEstimate replacement_estimate(const CZDecomposition& d, const MollifierFamily& m, const SampledFunction& K,
                                         double theta, std::span<const double> R_values, const SeminormOptions& opt) {
  if (!K.grid().same_lattice(d.good.grid()))
    throw RejectedInput("replacement_estimate: kernel and decomposition live on different lattices");
  const auto s = smooth_bad_part(d, m);
  const auto u = enlarged_union(d);
  const double semi = hormander_theta_seminorm(K, theta, R_values, opt).value;
  return replacement_estimate(d, s, u, K, semi);
}

double F1Piece::l2_squared() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return s;
}

SampledFunction SplitResult::F1() const {
  std::vector<cplx> v(F.size());
  for (const auto& p : F1_pieces)
    for (std::size_t q = 0; q < p.nodes.size(); ++q) v[p.nodes[q]] += p.values[q];
  return SampledFunction(F.grid(), std::move(v));
}

SplitResult split_F(const CZDecomposition& d, const MollifierFamily& m, const SmoothedBadPart& s,
                    const SpectralOperator& op, double theta, const SplitOptions& opt) {
  const Grid& g = d.good.grid();
  if (!(op.grid() == g)) throw RejectedInput("split_F: operator grid differs from the decomposition grid");
  if (m.pieces.size() != d.pieces.size() || s.pieces.size() != d.pieces.size())
    throw RejectedInput("split_F: mollifiers do not match the decomposition");

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < d.pieces.size(); ++j)
    if (m.pieces[j].kept) kept.push_back(j);

  SplitResult r{SampledFunction::zeros(g), {}, SampledFunction::zeros(g), {}, {}, 0, 0};
  r.adjacency.assign(g.size(), {});
  r.overlaps.assign(d.pieces.size(), {});
  if (kept.empty()) return r;

  // Ball membership on the unbounded lattice and on the grid.
  std::unordered_map<std::vector<int>, std::vector<std::size_t>, OffsetHash> owners;
  std::vector<std::vector<std::size_t>> grid_nodes(d.pieces.size());
  for (std::size_t j : kept) {
    for (const auto& k : ball_offsets(g, d.pieces[j].ball)) {
      owners[k].push_back(j);
      if (inside(g, k)) grid_nodes[j].push_back(g.index(k));
    }
  }
  for (const auto& [k, js] : owners)
    for (std::size_t a : js)
      for (std::size_t b : js) r.overlaps[a].push_back(b);
  for (std::size_t j : kept) {
    auto& o = r.overlaps[j];
    o.push_back(j);
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    r.max_degree = std::max(r.max_degree, o.size());
  }

  for (std::size_t j : kept) {
    if (opt.rule == AdjacencyRule::Ball) {
      for (std::size_t idx : grid_nodes[j]) r.adjacency[idx].push_back(j);
    } else {
      for (std::size_t jp : r.overlaps[j])
        for (std::size_t idx : grid_nodes[jp]) r.adjacency[idx].push_back(j);
    }
  }
  std::vector<std::vector<std::size_t>> piece_nodes(d.pieces.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto& a = r.adjacency[idx];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    r.max_incidence = std::max(r.max_incidence, a.size());
    for (std::size_t j : a) piece_nodes[j].push_back(idx);
  }
  const std::size_t cap = static_cast<std::size_t>(d.M0) * (opt.rule == AdjacencyRule::Ball ? 1 : r.max_degree);
  if (r.max_incidence > cap)
    throw NumericalFailure("overlap-bound", std::to_string(r.max_incidence) + " pieces at one node, bound " +
                                                std::to_string(cap));

  std::optional<BesselKernel> own;
  if (!opt.kernel) own = bessel_kernel(op, theta);
  const BesselKernel& k = opt.kernel ? *opt.kernel : *own;
  if (!(k.values.grid() == g)) throw RejectedInput("split_F: Bessel kernel grid differs");

  const double sexp = -g.group().homogeneous_dimension() * theta / (2.0 * op.nu());
  r.F = apply_power(op, sexp, s.b_tilde);

  r.F1_pieces.resize(kept.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t q = 0; q < kept.size(); ++q) {
    const std::size_t j = kept[q];
    const auto c = convolve(s.pieces[j], k.values);
    F1Piece p;
    p.j = j;
    p.nodes = piece_nodes[j];
    p.values.reserve(p.nodes.size());
    for (std::size_t idx : p.nodes) p.values.push_back(c[idx]);
    r.F1_pieces[q] = std::move(p);
  }

  const auto F1 = r.F1();
  r.F2 = r.F - F1;
  double err = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    err = std::max(err, std::abs(F1[i] + r.F2[i] - r.F[i]));
    scale = std::max(scale, std::abs(r.F[i]));
  }
  if (err > 1e-12 * scale) throw NumericalFailure("split-reconstruction", "residual " + std::to_string(err));
  return r;
}

SplitResult split_F(const CZDecomposition& d, const MollifierFamily& m, const SpectralOperator& op, double theta,
                    const SplitOptions& opt) {
  return split_F(d, m, smooth_bad_part(d, m), op, theta, opt);
}

SplitBounds split_bounds(const SplitResult& s, const CZDecomposition& d) {
  const Grid& g = d.good.grid();
  const double hn = g.cell_measure();
  SplitBounds b;
  const double alpha = d.level.alpha;
  const double f_l1 = lp_norm(reconstruct(d), 1);
  b.C_F2 = l2_squared(s.F2) / (d.level.value() * f_l1);
  for (const auto& p : s.F1_pieces) {
    const double e = p.l2_squared() * hn;
    b.sum_piece_l2_squared += e;
    const double ratio = e / (alpha * alpha * ball_measure(g, d.pieces[p.j].ball));
    b.per_piece.push_back(ratio);
    b.A_prime = std::max(b.A_prime, ratio);
  }
  b.F1_l2_squared = l2_squared(s.F1());
  const double n = static_cast<double>(s.max_incidence);
  if (b.F1_l2_squared > n * b.sum_piece_l2_squared * (1.0 + 1e-12) + 1e-300)
    throw NumericalFailure("finite-overlap",
                           "||F1||^2 = " + std::to_string(b.F1_l2_squared) + " exceeds " + std::to_string(n) +
                               " * sum ||F1^j||^2 = " + std::to_string(n * b.sum_piece_l2_squared));
  return b;
}

std::vector<double> alpha_grid(const SampledFunction& f, int k_min, int k_max) {
  const double avg = lp_norm(f, 1) / (static_cast<double>(f.size()) * f.grid().cell_measure());
  std::vector<double> a;
  for (int k = k_min; k <= k_max; ++k) a.push_back(std::ldexp(avg, k));
  return a;
}

double weak_ratio_on_grid(const SampledFunction& Tf, const SampledFunction& f, int k_min, int k_max) {
  double best = 0.0;
  for (double a : alpha_grid(f, k_min, k_max)) best = std::max(best, a * measure_above(Tf, a));
  return best / lp_norm(f, 1);
}

Weak11Report weak11_certify(const SampledFunction& f, const SampledFunction& K, double theta,
                            const SpectralOperator& op, const Weak11Options& opt) {
  const Grid& g = f.grid();
  if (!(op.grid() == g)) throw RejectedInput("weak11_certify: operator grid differs from the input grid");
  if (!K.grid().same_lattice(g)) throw RejectedInput("weak11_certify: kernel lattice differs from the input lattice");
  const double hn = g.cell_measure();

  Weak11Report rep;
  rep.theta = theta;
  rep.f_l1 = lp_norm(f, 1);
  if (!(rep.f_l1 > 0.0)) throw RejectedInput("weak11_certify: f vanishes");
  const auto Tf = convolve(f, K);
  rep.weak_norm = weak_l1_quasinorm(Tf);
  rep.weak11_ratio = rep.weak_norm / rep.f_l1;
  rep.grid_sup = weak_ratio_on_grid(Tf, f, opt.k_min, opt.k_max) * rep.f_l1;
  rep.seminorm = hormander_theta_seminorm(K, theta, opt.R_values, opt.seminorm).value;

  std::optional<BesselKernel> kth;
  if (opt.with_split) kth = bessel_kernel(op, theta);

  for (double alpha : alpha_grid(f, opt.k_min, opt.k_max)) {
    std::optional<CZDecomposition> dd;
    try {
      dd = cz_decompose(f, {alpha, opt.gamma});
    } catch (const RejectedInput&) {
      continue;
    }
    const CZDecomposition& d = *dd;
    LevelTerms t;
    t.alpha = alpha;
    t.pieces = d.pieces.size();
    t.M0 = d.M0;
    t.lhs = alpha * measure_above(Tf, alpha);

    const auto m = build_mollifiers(d, theta, opt.policy, opt.max_diam);
    t.kept = m.kept_count();
    for (const auto& p : m.pieces) t.delta_mollifiers += p.kept && p.delta;
    const auto s = smooth_bad_part(d, m);
    const auto u = enlarged_union(d);

    const auto Tg = convolve(d.good, K);
    const auto Tb = Tf - Tg;
    const auto Tbt = convolve(s.b_tilde, K);
    const auto D = Tb - Tbt;

    // Good part: Chebyshev, then ||g||_2^2 <= ||g||_inf ||g||_1.
    const double tg2 = l2_squared(Tg);
    const double cheb = measure_above(Tg, alpha / 2);
    if (cheb > 4.0 * tg2 / (alpha * alpha) * (1.0 + 1e-12))
      throw NumericalFailure("chebyshev-good", "alpha = " + std::to_string(alpha));
    const double g2 = l2_squared(d.good);
    if (g2 > lp_norm(d.good, INFINITY) * lp_norm(d.good, 1) * (1.0 + 1e-12))
      throw NumericalFailure("good-l2-interpolation", "alpha = " + std::to_string(alpha));

    double outside = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!u.mask[i]) outside += std::abs(D[i]);
    outside *= hn;

    t.good = 4.0 * tg2 / alpha;
    t.istar = alpha * u.measure;
    t.repl = 4.0 * outside;
    t.smooth = 16.0 * l2_squared(Tbt) / alpha;
    t.bound = t.good + t.istar + t.repl + t.smooth;
    if (t.lhs > t.bound * (1.0 + 1e-12))
      throw NumericalFailure("weak11-bound", "alpha = " + std::to_string(alpha) + ": " + std::to_string(t.lhs) +
                                                 " > " + std::to_string(t.bound));
    if (outside > 0.0) t.replacement_ratio = outside / (rep.seminorm * rep.f_l1);

    if (opt.with_split) {
      SplitOptions so;
      so.rule = opt.rule;
      so.kernel = &*kth;
      const auto sp = split_F(d, m, s, op, theta, so);
      const auto lb = split_bounds(sp, d);
      t.C_F2 = lb.C_F2;
      t.A_prime = lb.A_prime;
    }

    rep.C_good = std::max(rep.C_good, t.good / rep.f_l1);
    rep.C_Istar = std::max(rep.C_Istar, t.istar / rep.f_l1);
    rep.C_repl = std::max(rep.C_repl, t.repl / rep.f_l1);
    rep.C_smooth = std::max(rep.C_smooth, t.smooth / rep.f_l1);
    rep.C_F2 = std::max(rep.C_F2, t.C_F2);
    rep.A_prime = std::max(rep.A_prime, t.A_prime);
    if (t.bound > 0.0) rep.bound_ratio = std::max(rep.bound_ratio, t.lhs / t.bound);
    rep.levels.push_back(t);
  }
  return rep;
}

}  // namespace oscweak
