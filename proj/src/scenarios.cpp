#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "oscweak/czd.hpp"
#include "oscweak/experiments.hpp"
#include "oscweak/fefferman.hpp"
#include "oscweak/kernels.hpp"
#include "oscweak/spectral.hpp"

namespace oscweak {

namespace {

using PT = ParamType;

std::vector<ParamSpec> with_common(std::vector<ParamSpec> specs) {
  specs.insert(specs.begin(), {{"scenario", "name", PT::Text, "", "scenario name"},
                               {"scenario", "seed", PT::Int, "1", "seed for every random draw"}});
  return specs;
}

std::vector<ParamSpec> grid_specs(const char* group, const char* h, const char* m, const char* refinements) {
  return {{"grid", "group", PT::Text, group, "group name", {"abelian:1", "abelian:2", "abelian:3", "heisenberg:1"}},
          {"grid", "spacing", PT::Real, h, "lattice spacing h"},
          {"grid", "half_extent", PT::Int, m, "nodes per half axis"},
          {"grid", "refinements", PT::Int, refinements, "extra levels with h/2, 2m each"}};
}

std::vector<ParamSpec> kernel_specs(const char* recipe, const char* support, const char* radius) {
  return {{"kernel", "recipe", PT::Text, recipe, "kernel family", {"wainger", "wainger-cell", "bump", "delta"}},
          {"kernel", "a", PT::Real, "0.5", "Wainger a"},
          {"kernel", "alpha", PT::Real, "0.5", "Wainger alpha"},
          {"kernel", "support", PT::Real, support, "support diameter of the truncated Wainger kernel"},
          {"kernel", "radius", PT::Real, radius, "bump radius"}};
}

Grid grid_at(const Params& p, int level) {
  const auto group = HomogeneousGroup::from_name(p.text("grid.group"));
  const double h = p.real("grid.spacing");
  const long long m = p.integer("grid.half_extent");
  if (!(h > 0.0) || m < 1) throw RejectedInput("grid: spacing and half_extent must be positive");
  return Grid::cube(group, std::ldexp(h, -level), static_cast<int>(m << level));
}

int refinements(const Params& p) {
  const long long r = p.integer("grid.refinements");
  if (r < 0 || r > 6) throw RejectedInput("grid.refinements must lie in [0, 6]");
  return static_cast<int>(r);
}

bool singular_recipe(const std::string& r) { return r == "wainger" || r == "wainger-cell"; }

SampledFunction make_kernel(const Params& p, const Grid& g) {
  const std::string r = p.text("kernel.recipe");
  if (singular_recipe(r)) {
    const WaingerKernel w{static_cast<int>(g.dim()), p.real("kernel.a"), p.real("kernel.alpha")};
    const auto mode = r == "wainger-cell" ? KernelSampling::CellAverage : KernelSampling::Pointwise;
    return truncate_support(sample_wainger(g, w, mode), p.real("kernel.support"));
  }
  if (r == "bump") return smooth_bump(g, p.real("kernel.radius"));
  if (r == "delta") return SampledFunction::delta(g);
  throw RejectedInput("kernel.recipe: unknown recipe '" + r + "'");
}

double kernel_diameter(const Params& p) {
  const std::string r = p.text("kernel.recipe");
  if (singular_recipe(r)) return p.real("kernel.support");
  if (r == "bump") return 2.0 * p.real("kernel.radius");
  return 1.0;
}

SpectralOperator operator_for(const Grid& g) {
  return g.group().is_abelian() ? SpectralOperator::laplacian(g) : SpectralOperator::sublaplacian_h1(g);
}

std::uint64_t seed_of(const Params& p) { return static_cast<std::uint64_t>(p.integer("scenario.seed")); }

double spread(const std::vector<double>& v) {
  if (v.empty()) return NAN;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : INFINITY;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? NAN : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Corpus: `spikes` unit spikes at seeded positions fixed in space across
// refinements, then `noise` lognormal fields.
struct Input {
  std::string kind;
  SampledFunction f;
};

std::vector<Input> corpus(const Grid& coarse, const Grid& g, int level, std::uint64_t seed, long long spikes,
                          long long noise) {
  std::vector<Input> out;
  for (long long i = 0; i < spikes; ++i) {
    auto k = random_offsets(coarse, seed * 1000 + i);
    for (auto& v : k) v <<= level;
    out.push_back({"spike", unit_spike(g, k)});
  }
  for (long long i = 0; i < noise; ++i) out.push_back({"noise", lognormal_field(g, seed * 1000 + 500 + i)});
  return out;
}

std::vector<ParamSpec> weak11_specs(bool heisenberg) {
  auto s = with_common(heisenberg ? grid_specs("heisenberg:1", "0.125", "8", "1")
                                  : grid_specs("abelian:1", "0.00390625", "512", "1"));
  for (auto& k : heisenberg ? kernel_specs("bump", "0.5", "0.5") : kernel_specs("wainger", "0.5", "0.5"))
    s.push_back(k);
  s.push_back({"run", "theta", PT::Real, "0.5", "oscillation parameter"});
  s.push_back({"run", "spikes", PT::Int, "10", "spike inputs"});
  s.push_back({"run", "noise", PT::Int, "10", "lognormal inputs"});
  s.push_back({"run", "gamma", PT::Real, "1", "CZ gamma"});
  s.push_back({"run", "k_min", PT::Int, "-6", "alpha grid start"});
  s.push_back({"run", "k_max", PT::Int, "6", "alpha grid end"});
  s.push_back({"run", "R", PT::RealList, heisenberg ? "0.5, 0.25, 0.125" : "0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625",
               "seminorm radii"});
  s.push_back({"run", "spread_max", PT::Real, "10", "max/min of the weak ratio across inputs"});
  s.push_back({"run", "drift_max", PT::Real, "0.25", "relative drift of the largest weak ratio under h/2"});
  s.push_back({"run", "strong_growth_min", PT::Real, "2", "growth of ||Tf||_1 / ||f||_1 for spikes under h/2"});
  return s;
}

ScenarioResult run_weak11(const Params& p) {
  const double theta = p.real("run.theta");
  const int levels = refinements(p);
  const int kmin = static_cast<int>(p.integer("run.k_min")), kmax = static_cast<int>(p.integer("run.k_max"));
  const Grid coarse = grid_at(p, 0);
  const bool singular = singular_recipe(p.text("kernel.recipe"));

  Weak11Options opt;
  opt.gamma = p.real("run.gamma");
  opt.k_min = kmin;
  opt.k_max = kmax;
  opt.R_values = p.reals("run.R");
  opt.max_diam = std::min(1.0, kernel_diameter(p));
  opt.seminorm.sequence_start = 1 + (seed_of(p) - 1) * opt.seminorm.y_samples;

  Table cert{"certification",
             {"input", "kind", "f_l1", "grid_sup_ratio", "weak11_ratio", "bound_ratio", "seminorm", "C_good",
              "C_Istar", "C_repl", "C_smooth", "C_F2", "A_prime"},
             {}};
  Table lv{"levels",
           {"input", "alpha", "lhs", "good", "istar", "repl", "smooth", "bound", "pieces", "kept", "delta_mollifiers",
            "M0"},
           {}};
  Table ref{"refinement", {"level", "h", "input", "kind", "grid_sup_ratio", "strong_ratio"}, {}};

  std::vector<double> sup0, supN, strong0, strongN;
  double bound_max = 0.0;
  for (int level = 0; level <= levels; ++level) {
    const Grid g = grid_at(p, level);
    const auto K = make_kernel(p, g);
    const auto op = operator_for(g);
    const auto inputs = corpus(coarse, g, level, seed_of(p), p.integer("run.spikes"), p.integer("run.noise"));
    if (inputs.empty()) throw RejectedInput("run: empty corpus");
    std::vector<double> sups;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto& in = inputs[i];
      const auto Tf = convolve(in.f, K);
      const double fl1 = lp_norm(in.f, 1);
      const double sup = weak_ratio_on_grid(Tf, in.f, kmin, kmax);
      const double strong = lp_norm(Tf, 1) / fl1;
      sups.push_back(sup);
      ref.rows.push_back({static_cast<long long>(level), g.spacing(), static_cast<long long>(i), in.kind, sup, strong});
      if (in.kind == "spike") (level == 0 ? strong0 : strongN).push_back(strong);
      if (level != 0) continue;
      const auto rep = weak11_certify(in.f, K, theta, op, opt);
      bound_max = std::max(bound_max, rep.bound_ratio);
      cert.rows.push_back({static_cast<long long>(i), in.kind, rep.f_l1, rep.grid_sup / rep.f_l1, rep.weak11_ratio,
                           rep.bound_ratio, rep.seminorm, rep.C_good, rep.C_Istar, rep.C_repl, rep.C_smooth, rep.C_F2,
                           rep.A_prime});
      for (const auto& t : rep.levels)
        lv.rows.push_back({static_cast<long long>(i), t.alpha, t.lhs, t.good, t.istar, t.repl, t.smooth, t.bound,
                           static_cast<long long>(t.pieces), static_cast<long long>(t.kept),
                           static_cast<long long>(t.delta_mollifiers), static_cast<long long>(t.M0)});
    }
    if (level == 0) sup0 = sups;
    if (level == levels) supN = sups;
    if (level != levels) strongN.clear();
  }

  ScenarioResult r;
  r.tables = {cert, lv, ref};
  r.metrics.push_back(make_metric("weak_ratio_spread", spread(sup0), 0.0, p.real("run.spread_max"),
                                  "fefferman.weak11: sup_alpha alpha|{|Tf|>alpha}| <= C ||f||_1 across inputs"));
  r.metrics.push_back(make_metric("bound_ratio_max", bound_max, 0.0, 1.0,
                                  "fefferman.weak11: lhs <= assembled four-term bound at every level"));
  if (levels > 0) {
    const double a = *std::max_element(sup0.begin(), sup0.end());
    const double b = *std::max_element(supN.begin(), supN.end());
    r.metrics.push_back(make_metric("weak_ratio_drift", std::abs(b - a) / a, 0.0, p.real("run.drift_max"),
                                    "fefferman.weak11: weak ratio bounded under grid refinement"));
    if (singular && !strong0.empty())
      r.metrics.push_back(make_metric("strong_ratio_growth", mean(strongN) / mean(strong0),
                                      p.real("run.strong_growth_min"), INFINITY,
                                      "kernels: L1 -> L1 ratio of spikes grows for the singular kernel"));
  }
  return r;
}

std::vector<ParamSpec> seminorm_specs() {
  auto s = with_common(grid_specs("abelian:1", "0.00006103515625", "32768", "0"));
  for (auto& k : kernel_specs("wainger-cell", "1.5", "0.5")) s.push_back(k);
  s.push_back({"run", "thetas", PT::RealList, "0, 0.5", "theta values"});
  s.push_back({"run", "R", PT::RealList, "0.125, 0.0625, 0.03125, 0.015625", "radii"});
  s.push_back({"run", "samples", PT::Int, "64", "translates y per R"});
  s.push_back({"run", "spread_max", PT::Real, "5", "max/min per-R value for theta > 0"});
  s.push_back({"run", "exponent_target", PT::Real, "-1", "fitted R exponent expected at theta = 0"});
  s.push_back({"run", "exponent_tol", PT::Real, "0.15", "tolerance on that exponent"});
  return s;
}

ScenarioResult run_seminorm(const Params& p) {
  const Grid g = grid_at(p, 0);
  const auto K = make_kernel(p, g);
  const auto R = p.reals("run.R");
  SeminormOptions opt;
  opt.y_samples = static_cast<std::size_t>(std::max<long long>(1, p.integer("run.samples")));
  opt.sequence_start = 1 + (seed_of(p) - 1) * opt.y_samples;
  Table t{"seminorm", {"theta", "R", "value"}, {}};
  ScenarioResult r;
  for (double theta : p.reals("run.thetas")) {
    const auto e = hormander_theta_seminorm(K, theta, R, opt);
    for (std::size_t i = 0; i < R.size(); ++i) t.rows.push_back({theta, R[i], e.per_R[i]});
    if (theta > 0.0) {
      r.metrics.push_back(make_metric("spread_theta_" + num(theta), spread(e.per_R), 0.0, p.real("run.spread_max"),
                                      "kernels: oscillating seminorm bounded over the R grid"));
    } else {
      const auto fit = loglog_fit(R, e.per_R);
      const double target = p.real("run.exponent_target"), tol = p.real("run.exponent_tol");
      r.metrics.push_back(make_metric("exponent_theta_" + num(theta), fit.exponent, target - tol, target + tol,
                                      "kernels: classical seminorm diverges as R decreases"));
    }
  }
  r.tables.push_back(std::move(t));
  return r;
}

std::vector<ParamSpec> decay_specs() {
  auto s = with_common(grid_specs("abelian:1", "0.0000038146972656250", "262144", "0"));
  for (auto& k : kernel_specs("wainger-cell", "1.5", "0.5")) s.push_back(k);
  s.push_back({"run", "lo", PT::Real, "4", "band start"});
  s.push_back({"run", "hi", PT::Real, "64", "band end"});
  s.push_back({"run", "bins", PT::Int, "16", "radial bins"});
  s.push_back({"run", "tolerance", PT::Real, "0.2", "on the fitted exponent"});
  return s;
}

ScenarioResult run_decay(const Params& p) {
  const Grid g = grid_at(p, 0);
  const auto K = make_kernel(p, g);
  const double lo = p.real("run.lo"), hi = p.real("run.hi");
  const auto ft = fourier_transform(K);
  Table spec{"spectrum", {"xi", "modulus"}, {}};
  std::vector<double> xi(g.dim());
  for (std::size_t q = 0; q < ft.size(); ++q) {
    frequency_point(g, q, xi);
    double r = 0.0;
    for (double v : xi) r += v * v;
    r = std::sqrt(r);
    if (r >= lo && r <= hi) spec.rows.push_back({r, std::abs(ft[q])});
  }
  std::sort(spec.rows.begin(), spec.rows.end(),
            [](const auto& a, const auto& b) { return std::get<double>(a[0]) < std::get<double>(b[0]); });
  const auto fit = fourier_decay_fit(K, lo, hi, static_cast<std::size_t>(p.integer("run.bins")));
  Table f{"fit", {"exponent", "constant", "residual", "bins_used"},
          {{fit.exponent, fit.constant, fit.residual, static_cast<long long>(fit.bins_used)}}};
  const double target = -static_cast<double>(g.dim()) * p.real("kernel.alpha") / 2.0;
  const double tol = p.real("run.tolerance");
  ScenarioResult r;
  r.tables = {spec, f};
  r.metrics.push_back(make_metric("decay_exponent", fit.exponent, target - tol, target + tol,
                                  "kernels: |FT K| ~ |xi|^{-n alpha / 2} on the band"));
  return r;
}

std::vector<ParamSpec> cz_specs() {
  auto s = with_common(grid_specs("abelian:1", "0.000244140625", "2048", "0"));
  s.push_back({"run", "inputs", PT::Int, "20", "lognormal inputs"});
  s.push_back({"run", "level", PT::Real, "1.5", "alpha as a multiple of the grid average of |f|"});
  s.push_back({"run", "gamma", PT::Real, "1", "CZ gamma"});
  s.push_back({"run", "spread_max", PT::Real, "3", "max/min of each constant across inputs"});
  return s;
}

ScenarioResult run_cz(const Params& p) {
  const Grid g = grid_at(p, 0);
  const int Q = g.group().homogeneous_dimension();
  Table t{"properties",
          {"input", "pieces", "M0", "C1", "C2", "C3", "C4", "C5", "C6", "reconstruction_error",
           "cancellation_residual", "doubling_ratio_mean"},
          {}};
  std::vector<std::vector<double>> C(6);
  double recon = 0.0, cancel = 0.0;
  const long long n = p.integer("run.inputs");
  if (n < 1) throw RejectedInput("run.inputs must be positive");
  for (long long i = 0; i < n; ++i) {
    const auto f = lognormal_field(g, seed_of(p) * 1000 + i);
    const double avg = lp_norm(f, 1) / (g.size() * g.cell_measure());
    const auto d = cz_decompose(f, {p.real("run.level") * avg, p.real("run.gamma")});
    const auto rep = verify_properties(d, f);
    const auto u = enlarged_union(d);
    const double c[6] = {rep.C1, rep.C2, rep.C3, rep.C4, rep.C5, rep.C6};
    for (int k = 0; k < 6; ++k) C[k].push_back(c[k]);
    recon = std::max(recon, rep.reconstruction_error / std::max(1.0, lp_norm(f, INFINITY)));
    cancel = std::max(cancel, rep.cancellation_residual);
    t.rows.push_back({i, static_cast<long long>(rep.pieces), static_cast<long long>(rep.M0), rep.C1, rep.C2, rep.C3,
                      rep.C4, rep.C5, rep.C6, rep.reconstruction_error, rep.cancellation_residual,
                      mean(u.doubling_ratios)});
  }
  const double twoQ = std::ldexp(1.0, Q);
  auto cmax = [&](int k) { return *std::max_element(C[k].begin(), C[k].end()); };
  ScenarioResult r;
  r.tables.push_back(std::move(t));
  r.metrics.push_back(make_metric("reconstruction", recon, 0.0, 1e-12, "czd: g + sum b_j = f"));
  r.metrics.push_back(make_metric("cancellation", cancel, 0.0, 1e-12, "czd: integral of each b_j vanishes"));
  r.metrics.push_back(make_metric("C1_max", cmax(0), 0.0, twoQ, "czd (1): ||g||_inf <= C alpha gamma"));
  r.metrics.push_back(make_metric("C2_max", cmax(1), 0.0, INFINITY, "czd (2): b_j supported in I_j"));
  r.metrics.push_back(make_metric("C3_max", cmax(2), 0.0, 2.0 * twoQ, "czd (3): ||b_j||_1 <= C alpha gamma |I_j|"));
  r.metrics.push_back(make_metric("C4_max", cmax(3), 0.0, INFINITY, "czd (4): sum |I_j| <= C ||f||_1 / (alpha gamma)"));
  r.metrics.push_back(make_metric("C5_max", cmax(4), 0.0, 2.0, "czd (5): sum ||b_j||_1 <= 2 ||f||_1"));
  r.metrics.push_back(make_metric("C6_max", cmax(5), 1.0, INFINITY, "czd (6): at most M0 balls share a point"));
  const char* names[6] = {"C1", "C2", "C3", "C4", "C5", "C6"};
  for (int k = 0; k < 6; ++k)
    r.metrics.push_back(make_metric(std::string(names[k]) + "_spread", spread(C[k]), 0.0, p.real("run.spread_max"),
                                    "czd: realized constants independent of f"));
  return r;
}

std::vector<ParamSpec> dilation_specs() {
  auto s = with_common(grid_specs("abelian:1", "0.015625", "256", "1"));
  s.push_back({"run", "power", PT::Real, "-0.5", "kappa(t) = (1 + t)^power"});
  s.push_back({"run", "r", PT::RealList, "2", "dilation factors"});
  s.push_back({"run", "error_max", PT::Real, "1e-3", "max relative error at the coarsest grid"});
  s.push_back({"run", "rate_lo", PT::Real, "3", "error ratio under h/2, lower end"});
  s.push_back({"run", "rate_hi", PT::Real, "5", "upper end"});
  return s;
}

ScenarioResult run_dilation(const Params& p) {
  const double power = p.real("run.power");
  const auto kappa = [power](double t) { return std::pow(1.0 + t, power); };
  const int levels = refinements(p);
  Table t{"dilation", {"r", "level", "h", "error"}, {}};
  ScenarioResult r;
  for (double rr : p.reals("run.r")) {
    std::vector<double> err;
    for (int level = 0; level <= levels; ++level) {
      const Grid g = grid_at(p, level);
      err.push_back(dilation_identity_check(g, kappa, rr));
      t.rows.push_back({rr, static_cast<long long>(level), g.spacing(), err.back()});
    }
    r.metrics.push_back(make_metric("error_r_" + num(rr), err.front(), 0.0, p.real("run.error_max"),
                                    "spectral: kappa(r^nu R) delta = r^{-Q} [kappa(R) delta](r^{-1} x)"));
    if (levels > 0 && err.front() > 1e-14)
      r.metrics.push_back(make_metric("rate_r_" + num(rr), err[0] / err[1], p.real("run.rate_lo"),
                                      p.real("run.rate_hi"), "spectral: discretization error O(h^2)"));
  }
  r.tables.push_back(std::move(t));
  return r;
}

std::vector<ParamSpec> split_specs() {
  auto s = with_common(grid_specs("abelian:1", "0.001953125", "2048", "1"));
  s.push_back({"run", "theta", PT::Real, "0.5", "oscillation parameter"});
  s.push_back({"run", "seeds", PT::Int, "20", "lognormal inputs"});
  s.push_back({"run", "levels", PT::RealList, "2, 4", "alpha as multiples of the grid average; the first two form the doubling pair"});
  s.push_back({"run", "gamma", PT::Real, "1", "CZ gamma"});
  s.push_back({"run", "max_diam", PT::Real, "1", "pieces at least this wide leave the split"});
  s.push_back({"run", "rule", PT::Text, "neighbourhood", "adjacency rule of the split", {"neighbourhood", "ball"}});
  s.push_back({"run", "seed_spread_max", PT::Real, "3", "max/min across seeds"});
  s.push_back({"run", "doubling_max", PT::Real, "2", "per-seed ratio under alpha doubling"});
  s.push_back({"run", "drift_max", PT::Real, "0.5", "relative drift of the seed mean under h/2"});
  return s;
}

ScenarioResult run_split(const Params& p) {
  const double theta = p.real("run.theta");
  const auto mults = p.reals("run.levels");
  const long long seeds = p.integer("run.seeds");
  if (seeds < 1) throw RejectedInput("run.seeds must be positive");
  SplitOptions so;
  const std::string rule = p.text("run.rule");
  if (rule == "ball") so.rule = AdjacencyRule::Ball;
  else if (rule != "neighbourhood") throw RejectedInput("run.rule: expected neighbourhood or ball");
  const int levels = refinements(p);

  Table t{"constants", {"level", "h", "multiple", "seed", "pieces", "kept", "M0", "max_incidence", "C_F2", "A_prime"}, {}};
  // [level][multiple][seed]
  std::vector<std::vector<std::vector<double>>> cf(levels + 1), ap(levels + 1);
  for (int level = 0; level <= levels; ++level) {
    const Grid g = grid_at(p, level);
    const auto op = operator_for(g);
    const auto k = bessel_kernel(op, theta);
    so.kernel = &k;
    cf[level].assign(mults.size(), {});
    ap[level].assign(mults.size(), {});
    for (long long s = 0; s < seeds; ++s) {
      const auto f = lognormal_field(g, seed_of(p) * 1000 + s);
      const double avg = lp_norm(f, 1) / (g.size() * g.cell_measure());
      for (std::size_t mi = 0; mi < mults.size(); ++mi) {
        const auto d = cz_decompose(f, {mults[mi] * avg, p.real("run.gamma")});
        const auto m = build_mollifiers(d, theta, MollifierPolicy::DeltaBelowResolution, p.real("run.max_diam"));
        const auto sp = split_F(d, m, op, theta, so);
        const auto b = split_bounds(sp, d);
        cf[level][mi].push_back(b.C_F2);
        ap[level][mi].push_back(b.A_prime);
        t.rows.push_back({static_cast<long long>(level), g.spacing(), mults[mi], s,
                          static_cast<long long>(d.pieces.size()), static_cast<long long>(m.kept_count()),
                          static_cast<long long>(d.M0), static_cast<long long>(sp.max_incidence), b.C_F2,
                          b.A_prime});
      }
    }
  }

  ScenarioResult r;
  r.tables.push_back(std::move(t));
  auto emit = [&](const std::string& name, const std::vector<std::vector<std::vector<double>>>& v) {
    r.metrics.push_back(make_metric(name + "_seed_spread", spread(v[0][0]), 0.0, p.real("run.seed_spread_max"),
                                    "fefferman.split: constant independent of f"));
    // The realized constant at a given alpha and h is the largest value over the corpus.
    auto top = [](const std::vector<double>& x) { return *std::max_element(x.begin(), x.end()); };
    if (mults.size() > 1) {
      const double a = top(v[0][0]), b = top(v[0][1]);
      r.metrics.push_back(make_metric(name + "_alpha_doubling", std::max(a / b, b / a), 0.0,
                                      p.real("run.doubling_max"), "fefferman.split: constant independent of alpha"));
    }
    if (levels > 0) {
      const double a = top(v[0][0]), b = top(v[levels][0]);
      r.metrics.push_back(make_metric(name + "_h_drift", std::abs(b - a) / a, 0.0, p.real("run.drift_max"),
                                      "fefferman.split: constant stable under refinement"));
    }
  };
  emit("C_F2", cf);
  emit("A_prime", ap);
  return r;
}

}  // namespace

const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> all = {
      {"weak11-euclidean", "weak-(1,1) certification of a truncated Wainger kernel on R^1", weak11_specs(false),
       run_weak11},
      {"weak11-heisenberg", "weak-(1,1) certification of a smooth kernel on H^1", weak11_specs(true), run_weak11},
      {"seminorm-table", "per-R Hormander seminorms for several theta", seminorm_specs(), run_seminorm},
      {"kernel-decay", "Fourier decay fit of a sampled kernel", decay_specs(), run_decay},
      {"cz-verify", "CZ properties (1)-(6) over a lognormal corpus", cz_specs(), run_cz},
      {"dilation-identity", "dilation identity of the functional calculus", dilation_specs(), run_dilation},
      {"lemma32-constants", "realized constants of the F1/F2 split", split_specs(), run_split},
  };
  return all;
}

}  // namespace oscweak
