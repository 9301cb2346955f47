#include "oscweak/group.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <tuple>

#include "oscweak/errors.hpp"
#include "oscweak/rng.hpp"

namespace oscweak {

DilationWeights::DilationWeights(std::vector<int> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw RejectedInput("dilation weights: empty weight list");
  for (int w : weights_)
    if (w < 1) throw RejectedInput("dilation weights: weights must be integers >= 1");
}

DilationWeights DilationWeights::from_rational(std::span<const double> weights) {
  if (weights.empty()) throw RejectedInput("dilation weights: empty weight list");
  long long lcm_den = 1;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw RejectedInput("dilation weights: weights must be positive");
    long long den = 1;
    while (den <= 720 && std::abs(w * den - std::round(w * den)) > 1e-9 * std::max(1.0, w * den)) ++den;
    if (den > 720) throw RejectedInput("dilation weights: weight is not a small rational");
    lcm_den = std::lcm(lcm_den, den);
  }
  std::vector<long long> ints;
  for (double w : weights) ints.push_back(std::llround(w * static_cast<double>(lcm_den)));
  long long g = 0;
  for (long long v : ints) g = std::gcd(g, v);
  std::vector<int> out;
  for (long long v : ints) out.push_back(static_cast<int>(v / g));
  return DilationWeights(std::move(out));
}

int DilationWeights::max() const { return *std::max_element(weights_.begin(), weights_.end()); }

int DilationWeights::homogeneous_dimension() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0);
}

namespace {

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, double>& c_qn_cache() {
  static std::map<std::string, double> cache;
  return cache;
}

constexpr std::size_t kQuasiTriangleSamples = 1'000'000;
constexpr std::uint64_t kQuasiTriangleSeed = 0x51a7c0deULL;

}  // namespace

HomogeneousGroup::HomogeneousGroup(std::string name, DilationWeights weights,
                                   std::vector<StructureConstant> brackets, QuasiNormKind norm)
    : name_(std::move(name)), weights_(std::move(weights)), norm_kind_(norm) {
  const std::size_t n = weights_.size();
  if (n == 0) throw RejectedInput("group: dimension must be positive");
  for (auto b : brackets) {
    if (b.i >= n || b.j >= n || b.k >= n) throw RejectedInput("group: bracket index out of range");
    if (b.i == b.j) throw RejectedInput("group: [X_i, X_i] must vanish");
    if (b.c == 0.0) continue;
    if (b.i > b.j) {
      std::swap(b.i, b.j);
      b.c = -b.c;
    }
    if (weights_[b.k] != weights_[b.i] + weights_[b.j])
      throw RejectedInput("group: bracket [X_" + std::to_string(b.i) + ", X_" + std::to_string(b.j) +
                          "] -> X_" + std::to_string(b.k) + " does not respect the grading");
    brackets_.push_back(b);
  }
  for (const auto& b : brackets_)
    for (const auto& o : brackets_)
      if (o.i == b.k || o.j == b.k)
        throw RejectedInput("group: step > 2 (bracket target X_" + std::to_string(b.k) +
                            " is not central); only step-2 laws are supported");
  std::sort(brackets_.begin(), brackets_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.k, a.i, a.j) < std::tie(b.k, b.i, b.j);
  });

  const std::string key = descriptor();
  std::lock_guard lock(cache_mutex());
  auto& cache = c_qn_cache();
  if (auto it = cache.find(key); it != cache.end()) {
    c_qn_ = it->second;
  } else {
    c_qn_ = estimate_quasi_triangle_constant(kQuasiTriangleSamples, kQuasiTriangleSeed);
    cache.emplace(key, c_qn_);
  }
}

HomogeneousGroup HomogeneousGroup::abelian(std::size_t n) {
  if (n == 0) throw RejectedInput("group: dimension must be positive");
  return HomogeneousGroup("abelian:" + std::to_string(n), DilationWeights(std::vector<int>(n, 1)), {});
}

HomogeneousGroup HomogeneousGroup::heisenberg(std::size_t n) {
  if (n == 0) throw RejectedInput("group: dimension must be positive");
  std::vector<int> w(2 * n + 1, 1);
  w.back() = 2;
  std::vector<StructureConstant> br;
  for (std::size_t i = 0; i < n; ++i) br.push_back({i, n + i, 2 * n, 1.0});
  return HomogeneousGroup("heisenberg:" + std::to_string(n), DilationWeights(std::move(w)), std::move(br));
}

HomogeneousGroup HomogeneousGroup::from_name(std::string_view name) {
  const auto colon = name.find(':');
  if (colon == std::string_view::npos) throw RejectedInput("group: unknown name '" + std::string(name) + "'");
  const std::string family(name.substr(0, colon));
  std::size_t n = 0;
  try {
    std::size_t used = 0;
    const std::string num(name.substr(colon + 1));
    n = static_cast<std::size_t>(std::stoul(num, &used));
    if (used != num.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw RejectedInput("group: bad dimension in '" + std::string(name) + "'");
  }
  if (family == "abelian") return abelian(n);
  if (family == "heisenberg") return heisenberg(n);
  throw RejectedInput("group: unknown family '" + family + "'");
}

HomogeneousGroup HomogeneousGroup::from_descriptor(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<StructureConstant> brackets;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw RejectedInput("group descriptor line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(value.begin(), value.end(), ',', ' ');
    std::istringstream vs(value);
    if (key == "dim") {
      if (!(vs >> dim)) throw RejectedInput("group descriptor line " + std::to_string(lineno) + ": bad dim");
    } else if (key == "weights") {
      double w;
      while (vs >> w) weights.push_back(w);
    } else if (key == "bracket") {
      StructureConstant b;
      if (!(vs >> b.i >> b.j >> b.k >> b.c))
        throw RejectedInput("group descriptor line " + std::to_string(lineno) + ": bracket needs i j k c");
      brackets.push_back(b);
    } else {
      throw RejectedInput("group descriptor line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (dim == 0 || weights.size() != dim)
    throw RejectedInput("group descriptor: weights must list exactly dim entries");
  return HomogeneousGroup("custom:" + std::to_string(dim), DilationWeights::from_rational(weights), std::move(brackets));
}

void HomogeneousGroup::check_dim(std::size_t n) const {
  if (n != dim())
    throw RejectedInput("group " + name_ + ": element has " + std::to_string(n) + " coordinates, expected " +
                        std::to_string(dim()));
}

void HomogeneousGroup::product_into(std::span<const double> x, std::span<const double> y,
                                    std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  for (const auto& b : brackets_) out[b.k] += 0.5 * b.c * (x[b.i] * y[b.j] - x[b.j] * y[b.i]);
}

void HomogeneousGroup::left_quotient_into(std::span<const double> x, std::span<const double> y,
                                          std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] - x[i];
  for (const auto& b : brackets_) out[b.k] -= 0.5 * b.c * (x[b.i] * y[b.j] - x[b.j] * y[b.i]);
}

double HomogeneousGroup::quasi_norm(std::span<const double> x) const {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    const int w = weights_[i];
    const double v = w == 1 ? a : (w == 2 ? std::sqrt(a) : std::pow(a, 1.0 / w));
    m = std::max(m, v);
  }
  return m;
}

void HomogeneousGroup::translate_box(std::span<const double> x, std::span<const double> lo,
                                     std::span<const double> hi, std::span<double> out_lo,
                                     std::span<double> out_hi) const {
  const std::size_t n = dim();
  for (std::size_t k = 0; k < n; ++k) {
    out_lo[k] = x[k] + lo[k];
    out_hi[k] = x[k] + hi[k];
  }
  // (x*z)_k picks up sum over brackets of c/2 (x_i z_j - x_j z_i); affine in z.
  for (const auto& b : brackets_) {
    const double cj = 0.5 * b.c * x[b.i];   // coefficient on z_j
    const double ci = -0.5 * b.c * x[b.j];  // coefficient on z_i
    out_lo[b.k] += std::min(cj * lo[b.j], cj * hi[b.j]) + std::min(ci * lo[b.i], ci * hi[b.i]);
    out_hi[b.k] += std::max(cj * lo[b.j], cj * hi[b.j]) + std::max(ci * lo[b.i], ci * hi[b.i]);
  }
}

GroupElement HomogeneousGroup::product(const GroupElement& x, const GroupElement& y) const {
  check_dim(x.size());
  check_dim(y.size());
  GroupElement out{std::vector<double>(dim())};
  product_into(x.coords, y.coords, out.coords);
  return out;
}

GroupElement HomogeneousGroup::inverse(const GroupElement& x) const {
  check_dim(x.size());
  GroupElement out = x;
  for (auto& c : out.coords) c = -c;
  return out;
}

GroupElement HomogeneousGroup::dilate(double r, const GroupElement& x) const {
  check_dim(x.size());
  if (!(r > 0.0) || !std::isfinite(r)) throw RejectedInput("dilate: r must be a positive real");
  GroupElement out = x;
  for (std::size_t i = 0; i < dim(); ++i) out[i] *= std::pow(r, weights_[i]);
  return out;
}

double HomogeneousGroup::quasi_norm(const GroupElement& x) const {
  check_dim(x.size());
  return quasi_norm(std::span<const double>(x.coords));
}

double HomogeneousGroup::estimate_quasi_triangle_constant(std::size_t samples, std::uint64_t seed) const {
  const std::size_t n = dim();
  CounterRng rng(seed);
  std::vector<double> x(n), y(n), xy(n);
  // Points on the unit sphere: one coordinate pinned to +-1, the rest free in
  // the unit ball. Homogeneity lets y carry the relative scale.
  auto unit = [&](std::vector<double>& v) {
    const std::size_t pin = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    v[pin] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  };
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    unit(x);
    unit(y);
    const double scale = std::exp2(rng.uniform(-4.0, 4.0));
    for (std::size_t i = 0; i < n; ++i) y[i] *= std::pow(scale, weights_[i]);
    product_into(x, y, xy);
    best = std::max(best, quasi_norm(std::span<const double>(xy)) / (1.0 + scale));
  }
  return best;
}

std::string HomogeneousGroup::descriptor() const {
  std::ostringstream os;
  os.precision(17);
  os << "dim = " << dim() << "\nweights = ";
  for (std::size_t i = 0; i < dim(); ++i) os << (i ? ", " : "") << weights_[i];
  os << "\n";
  for (const auto& b : brackets_) os << "bracket = " << b.i << " " << b.j << " " << b.k << " " << b.c << "\n";
  return os.str();
}

}  // namespace oscweak
