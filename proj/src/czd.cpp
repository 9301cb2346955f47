#include "oscweak/czd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>

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

std::size_t box_volume(const OffsetBox& b) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < b.lo.size(); ++i) v *= static_cast<std::size_t>(b.hi[i] - b.lo[i] + 1);
  return v;
}

// Calls fn(offsets, grid index) over the box; box must lie inside the grid.
template <class Fn>
void for_each_in_box(const Grid& g, const OffsetBox& b, Fn fn) {
  const std::size_t n = g.dim();
  std::vector<int> k = b.lo;
  for (;;) {
    fn(k, g.index(k));
    std::size_t i = n;
    while (i-- > 0) {
      if (++k[i] <= b.hi[i]) break;
      k[i] = b.lo[i];
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

// Calls fn(offsets) for every node of the unbounded lattice in the closed ball.
template <class Fn>
void for_each_ball_node(const Grid& g, const CZBall& ball, Fn fn) {
  const HomogeneousGroup& grp = g.group();
  const std::size_t n = g.dim();
  const double h = g.spacing();
  const double r = ball.radius * (1.0 + 1e-12);
  std::vector<double> lo(n), hi(n), olo(n), ohi(n);
  for (std::size_t i = 0; i < n; ++i) {
    hi[i] = std::pow(r, grp.weights()[i]);
    lo[i] = -hi[i];
  }
  grp.translate_box(ball.center.coords, lo, hi, olo, ohi);
  std::vector<int> klo(n), khi(n);
  for (std::size_t i = 0; i < n; ++i) {
    klo[i] = static_cast<int>(std::ceil(olo[i] / h - 1e-9));
    khi[i] = static_cast<int>(std::floor(ohi[i] / h + 1e-9));
    if (klo[i] > khi[i]) return;
  }
  std::vector<int> k = klo;
  std::vector<double> x(n), z(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) x[i] = k[i] * h;
    grp.left_quotient_into(ball.center.coords, x, z);
    if (grp.quasi_norm(std::span<const double>(z)) <= r) fn(k);
    std::size_t i = n;
    while (i-- > 0) {
      if (++k[i] <= khi[i]) break;
      k[i] = klo[i];
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

// Children of a box: coordinate i split into min(2^nu_i, length) near-equal parts.
std::vector<OffsetBox> children(const OffsetBox& b, const DilationWeights& w) {
  const std::size_t n = b.lo.size();
  std::vector<std::vector<std::pair<int, int>>> parts(n);
  bool splits = false;
  for (std::size_t i = 0; i < n; ++i) {
    const int len = b.hi[i] - b.lo[i] + 1;
    const int p = std::min(1 << w[i], len);
    if (p > 1) splits = true;
    for (int q = 0; q < p; ++q)
      parts[i].emplace_back(b.lo[i] + (len * q) / p, b.lo[i] + (len * (q + 1)) / p - 1);
  }
  std::vector<OffsetBox> out;
  if (!splits) return out;
  std::vector<std::size_t> sel(n, 0);
  for (;;) {
    OffsetBox c;
    c.lo.resize(n);
    c.hi.resize(n);
    c.empty = false;
    for (std::size_t i = 0; i < n; ++i) std::tie(c.lo[i], c.hi[i]) = parts[i][sel[i]];
    out.push_back(std::move(c));
    std::size_t i = n;
    while (i-- > 0) {
      if (++sel[i] < parts[i].size()) break;
      sel[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

CZBall circumscribed_ball(const Grid& g, const OffsetBox& b) {
  const std::size_t n = g.dim();
  const double h = g.spacing();
  CZBall ball;
  ball.center.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) ball.center[i] = 0.5 * (b.lo[i] + b.hi[i]) * h;
  // center^{-1} x is affine in x, so each coordinate peaks at a corner.
  std::vector<double> x(n), z(n);
  double r = 0.0;
  for (std::size_t c = 0; c < (std::size_t{1} << n); ++c) {
    for (std::size_t i = 0; i < n; ++i) x[i] = ((c >> i & 1) ? b.hi[i] : b.lo[i]) * h;
    g.group().left_quotient_into(ball.center.coords, x, z);
    r = std::max(r, g.group().quasi_norm(std::span<const double>(z)));
  }
  ball.radius = std::max(r, 0.5 * h);
  return ball;
}

}  // namespace

std::uint64_t value_digest(const SampledFunction& f) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t len) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  };
  const double sp = f.grid().spacing();
  mix(&sp, sizeof sp);
  for (int m : f.grid().half_extent()) mix(&m, sizeof m);
  mix(f.values().data(), f.values().size() * sizeof(cplx));
  return h == 0 ? 1 : h;
}

SampledFunction CZDecomposition::piece_function(std::size_t j) const {
  const Grid& g = good.grid();
  const CZPiece& p = pieces.at(j);
  std::vector<cplx> v(g.size());
  std::size_t q = 0;
  for_each_in_box(g, p.cell, [&](const std::vector<int>&, std::size_t idx) { v[idx] = p.values[q++]; });
  return SampledFunction(g, std::move(v));
}

SampledFunction CZDecomposition::bad() const {
  const Grid& g = good.grid();
  std::vector<cplx> v(g.size());
  for (const auto& p : pieces) {
    std::size_t q = 0;
    for_each_in_box(g, p.cell, [&](const std::vector<int>&, std::size_t idx) { v[idx] += p.values[q++]; });
  }
  return SampledFunction(g, std::move(v));
}

double ball_measure(const Grid& grid, const CZBall& ball) {
  std::size_t count = 0;
  for_each_ball_node(grid, ball, [&](const std::vector<int>&) { ++count; });
  return static_cast<double>(count) * grid.cell_measure();
}

std::vector<std::vector<int>> ball_offsets(const Grid& grid, const CZBall& ball) {
  std::vector<std::vector<int>> out;
  for_each_ball_node(grid, ball, [&](const std::vector<int>& k) { out.push_back(k); });
  return out;
}

int max_overlap(const Grid& grid, const std::vector<CZBall>& balls) {
  std::unordered_map<std::vector<int>, int, OffsetHash> count;
  int best = 0;
  for (const auto& b : balls)
    for_each_ball_node(grid, b, [&](const std::vector<int>& k) { best = std::max(best, ++count[k]); });
  return best;
}

CZDecomposition cz_decompose(const SampledFunction& f, CZLevel level) {
  const double lv = level.value();
  if (!(level.alpha > 0.0 && level.gamma > 0.0) || !std::isfinite(lv))
    throw RejectedInput("cz_decompose: alpha and gamma must be positive");
  const Grid& g = f.grid();
  const double l1 = lp_norm(f, 1);
  if (!(l1 > 0.0)) throw RejectedInput("cz_decompose: ||f||_1 must be positive");
  const double root_mean = l1 / (static_cast<double>(g.size()) * g.cell_measure());
  if (root_mean > lv)
    throw RejectedInput("cz_decompose: level " + std::to_string(lv) + " is below the grid average of |f| (" +
                        std::to_string(root_mean) + "); the root cell already stops");

  std::vector<cplx> good(f.values().begin(), f.values().end());
  CZDecomposition d{SampledFunction::zeros(g), {}, level, 0, value_digest(f)};

  OffsetBox root;
  root.empty = false;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    root.lo.push_back(-g.half_extent(i));
    root.hi.push_back(g.half_extent(i));
  }
  std::deque<OffsetBox> queue;
  for (auto& c : children(root, g.group().weights())) queue.push_back(std::move(c));
  while (!queue.empty()) {
    OffsetBox cell = std::move(queue.front());
    queue.pop_front();
    double mass = 0.0;
    for_each_in_box(g, cell, [&](const std::vector<int>&, std::size_t idx) { mass += std::abs(f[idx]); });
    if (mass == 0.0) continue;
    const double count = static_cast<double>(box_volume(cell));
    if (mass / count > lv) {
      CZPiece p;
      p.cell = cell;
      cplx sum = 0.0;
      for_each_in_box(g, cell, [&](const std::vector<int>&, std::size_t idx) { sum += f[idx]; });
      const cplx mean = sum / count;
      for_each_in_box(g, cell, [&](const std::vector<int>&, std::size_t idx) { p.values.push_back(f[idx] - mean); });
      // second pass removes the rounding left in the mean
      cplx resid = 0.0;
      for (const auto& v : p.values) resid += v;
      resid /= count;
      for (auto& v : p.values) v -= resid;
      std::size_t q = 0;
      for_each_in_box(g, cell, [&](const std::vector<int>&, std::size_t idx) { good[idx] = f[idx] - p.values[q++]; });
      for (const auto& v : p.values) p.l1 += std::abs(v);
      p.l1 *= g.cell_measure();
      p.ball = circumscribed_ball(g, cell);
      d.pieces.push_back(std::move(p));
    } else {
      for (auto& c : children(cell, g.group().weights())) queue.push_back(std::move(c));
    }
  }
  d.good = SampledFunction(g, std::move(good));
  std::vector<CZBall> balls;
  for (const auto& p : d.pieces) balls.push_back(p.ball);
  d.M0 = max_overlap(g, balls);
  return d;
}

CZReport verify_properties(const CZDecomposition& d, const SampledFunction& f) {
  const Grid& g = f.grid();
  if (!(d.good.grid() == g)) throw RejectedInput("verify_properties: decomposition lives on another grid");
  if (d.source_digest != 0 && d.source_digest != value_digest(f))
    throw RejectedInput("verify_properties: f is not the function this decomposition was built from");
  const double lv = d.level.value();
  const double l1 = lp_norm(f, 1);
  const double eps = std::numeric_limits<double>::epsilon();
  CZReport r;
  r.pieces = d.pieces.size();

  // reconstruction, up to a few ulps of the operands
  std::vector<cplx> sum(d.good.values().begin(), d.good.values().end());
  std::vector<double> scale(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) scale[i] = std::abs(f[i]) + std::abs(d.good[i]);
  double ball_sum = 0.0;
  for (std::size_t j = 0; j < d.pieces.size(); ++j) {
    const auto& p = d.pieces[j];
    if (p.values.size() != box_volume(p.cell)) throw RejectedInput("verify_properties: piece size does not match its box");
    cplx integral = 0.0;
    double pl1 = 0.0;
    std::size_t q = 0;
    for_each_in_box(g, p.cell, [&](const std::vector<int>& k, std::size_t idx) {
      const cplx v = p.values[q++];
      sum[idx] += v;
      scale[idx] += std::abs(v);
      integral += v;
      pl1 += std::abs(v);
      if (v != cplx(0.0)) {
        std::vector<double> x(k.size()), z(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) x[i] = k[i] * g.spacing();
        g.group().left_quotient_into(p.ball.center.coords, x, z);
        if (g.group().quasi_norm(std::span<const double>(z)) > p.ball.radius * (1 + 1e-12))
          throw NumericalFailure("support", "piece " + std::to_string(j) + " is nonzero outside its ball");
      }
    });
    pl1 *= g.cell_measure();
    const double res = std::abs(integral) * g.cell_measure();
    r.cancellation_residual = std::max(r.cancellation_residual, res);
    if (res > 1e-12 * std::max(1.0, pl1))
      throw NumericalFailure("cancellation", "piece " + std::to_string(j) + " has integral " + std::to_string(res));
    const double bm = ball_measure(g, p.ball);
    ball_sum += bm;
    r.sum_piece_l1 += pl1;
    r.C2 = std::max(r.C2, bm / (static_cast<double>(box_volume(p.cell)) * g.cell_measure()));
    r.C3 = std::max(r.C3, pl1 / (lv * bm));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double e = std::abs(sum[i] - f[i]);
    r.reconstruction_error = std::max(r.reconstruction_error, e);
    if (e > 8 * eps * scale[i])
      throw NumericalFailure("reconstruction", "g + sum b_j differs from f by " + std::to_string(e) + " at node " +
                                                   std::to_string(i));
  }
  r.bad_l1 = lp_norm(d.bad(), 1);
  if (r.bad_l1 > r.sum_piece_l1 * (1 + 1e-12))
    throw NumericalFailure("triangle", "||b||_1 exceeds sum ||b_j||_1");
  r.ball_measure_sum = ball_sum;
  r.C1 = lp_norm(d.good, INFINITY) / lv;
  r.C4 = lv * ball_sum / l1;
  r.C5 = r.sum_piece_l1 / l1;
  std::vector<CZBall> balls;
  for (const auto& p : d.pieces) balls.push_back(p.ball);
  r.M0 = max_overlap(g, balls);
  r.C6 = r.M0;
  return r;
}

EnlargedUnion enlarged_union(const CZDecomposition& d) {
  const Grid& g = d.good.grid();
  EnlargedUnion u;
  u.mask.assign(g.size(), 0);
  std::unordered_set<std::vector<int>, OffsetHash> nodes;
  for (const auto& p : d.pieces) {
    CZBall big{p.ball.center, 2.0 * p.ball.radius};
    std::size_t count = 0;
    for_each_ball_node(g, big, [&](const std::vector<int>& k) {
      ++count;
      nodes.insert(k);
      bool inside = true;
      for (std::size_t i = 0; i < k.size(); ++i)
        if (std::abs(k[i]) > g.half_extent(i)) inside = false;
      if (inside) u.mask[g.index(k)] = 1;
    });
    u.doubling_ratios.push_back(static_cast<double>(count) * g.cell_measure() / ball_measure(g, p.ball));
  }
  u.measure = static_cast<double>(nodes.size()) * g.cell_measure();
  return u;
}

}  // namespace oscweak
