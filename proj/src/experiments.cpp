#include "oscweak/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oscweak/rng.hpp"

namespace oscweak {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, long long& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_stamp(std::chrono::system_clock::time_point t, const char* fmt) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

json metric_json(const Metric& m) {
  json j;
  j["name"] = m.name;
  j["value"] = std::isfinite(m.value) ? json(m.value) : json(nullptr);
  j["lo"] = std::isfinite(m.lo) ? json(m.lo) : json(nullptr);
  j["hi"] = std::isfinite(m.hi) ? json(m.hi) : json(nullptr);
  j["pass"] = m.pass;
  j["invariant"] = m.invariant;
  return j;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, const std::string& msg)
    : RejectedInput(line > 0 ? source + ":" + std::to_string(line) + ": " + msg : source + ": " + msg), line_(line) {}

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      if (s.back() != ']') throw ConfigError(source, line, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      const bool ok = !section.empty() && std::all_of(section.begin(), section.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
      });
      if (!ok) throw ConfigError(source, line, "bad section name '" + section + "'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    if (section.empty()) throw ConfigError(source, line, "key outside any section");
    Entry e{section, trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)), line};
    if (const auto hash = e.value.find(" #"); hash != std::string::npos) e.value = trim(e.value.substr(0, hash));
    if (e.key.empty()) throw ConfigError(source, line, "empty key");
    if (const Entry* prev = c.find(e.section, e.key))
      throw ConfigError(source, line,
                        "duplicate key '" + e.key + "' (first set on line " + std::to_string(prev->line) + ")");
    c.entries_.push_back(std::move(e));
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open");
  return parse(in, path.string());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

long long Params::integer(const std::string& name) const {
  long long v = 0;
  parse_int(values_.at(name), v);
  return v;
}

double Params::real(const std::string& name) const {
  double v = 0.0;
  parse_real(values_.at(name), v);
  return v;
}

const std::string& Params::text(const std::string& name) const { return values_.at(name); }

std::vector<double> Params::reals(const std::string& name) const {
  std::vector<double> out;
  for (const auto& item : split_list(values_.at(name))) {
    double v = 0.0;
    parse_real(item, v);
    out.push_back(v);
  }
  return out;
}

Params validate(const Config& cfg, const std::vector<ParamSpec>& specs) {
  auto check = [&](const ParamSpec& s, const std::string& value, int line) {
    const std::string where = "[" + s.section + "] " + s.key;
    switch (s.type) {
      case ParamType::Int: {
        long long v;
        if (!parse_int(value, v)) throw ConfigError(cfg.source(), line, where + ": expected an integer, got '" + value + "'");
        break;
      }
      case ParamType::Real: {
        double v;
        if (!parse_real(value, v)) throw ConfigError(cfg.source(), line, where + ": expected a number, got '" + value + "'");
        break;
      }
      case ParamType::RealList: {
        const auto items = split_list(value);
        if (items.empty()) throw ConfigError(cfg.source(), line, where + ": empty list");
        for (const auto& it : items) {
          double v;
          if (!parse_real(it, v)) throw ConfigError(cfg.source(), line, where + ": bad list item '" + it + "'");
        }
        break;
      }
      case ParamType::Text:
        if (value.empty()) throw ConfigError(cfg.source(), line, where + ": empty value");
        if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), value) == s.choices.end()) {
          std::string all;
          for (const auto& c : s.choices) all += (all.empty() ? "" : ", ") + c;
          throw ConfigError(cfg.source(), line, where + ": '" + value + "' is not one of " + all);
        }
        break;
    }
  };
  Params p;
  for (const auto& e : cfg.entries()) {
    const auto it = std::find_if(specs.begin(), specs.end(),
                                 [&](const ParamSpec& s) { return s.section == e.section && s.key == e.key; });
    if (it == specs.end()) throw ConfigError(cfg.source(), e.line, "unknown key '" + e.key + "' in [" + e.section + "]");
    check(*it, e.value, e.line);
    p.values_[e.section + "." + e.key] = e.value;
  }
  for (const auto& s : specs) {
    const std::string name = s.section + "." + s.key;
    if (p.values_.count(name)) continue;
    if (s.fallback.empty()) throw ConfigError(cfg.source(), 0, "missing required key [" + s.section + "] " + s.key);
    check(s, s.fallback, 0);
    p.values_[name] = s.fallback;
  }
  return p;
}

void write_table_csv(const Table& t, std::ostream& out) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out << format_double(v);
            else out << v;
          },
          row[i]);
    }
    out << '\n';
  }
}

Metric make_metric(std::string name, double value, double lo, double hi, std::string invariant) {
  Metric m{std::move(name), value, lo, hi, false, std::move(invariant)};
  m.pass = std::isfinite(value) && value >= lo && value <= hi;
  return m;
}

bool ScenarioResult::all_pass() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
}

const ScenarioInfo& find_scenario(const Config& cfg) {
  const auto* e = cfg.find("scenario", "name");
  if (!e) throw ConfigError(cfg.source(), 0, "missing [scenario] name");
  for (const auto& s : scenarios())
    if (s.name == e->value) return s;
  throw ConfigError(cfg.source(), e->line, "unknown scenario '" + e->value + "'");
}

fs::path default_results_root() {
  const char* env = std::getenv("OSCWEAK_RESULTS");
  return env && *env ? fs::path(env) : fs::path("results");
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RejectedInput("sha256: cannot open " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

ScenarioResult run_scenario(const Config& cfg) {
  const ScenarioInfo& info = find_scenario(cfg);
  return info.run(validate(cfg, info.params));
}

RunOutcome run_config(const Config& cfg, const fs::path& results_root) {
  const ScenarioInfo& info = find_scenario(cfg);
  const Params params = validate(cfg, info.params);

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.result = info.run(params);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(results_root);
  const std::string stem = info.name + "-" + utc_stamp(started, "%Y%m%dT%H%M%SZ");
  fs::path dir = results_root / stem;
  for (int k = 2; fs::exists(dir); ++k) dir = results_root / (stem + "-" + std::to_string(k));
  fs::create_directory(dir);
  out.directory = dir;

  json files = json::object();
  for (const auto& t : out.result.tables) {
    const auto path = dir / (t.name + ".csv");
    std::ofstream f(path, std::ios::binary);
    write_table_csv(t, f);
    f.close();
    files[t.name + ".csv"] = sha256_file(path);
  }

  json summary;
  summary["scenario"] = info.name;
  summary["pass"] = out.result.all_pass();
  summary["metrics"] = json::array();
  for (const auto& m : out.result.metrics) summary["metrics"].push_back(metric_json(m));
  {
    std::ofstream f(dir / "summary.json", std::ios::binary);
    f << summary.dump(2) << '\n';
  }
  files["summary.json"] = sha256_file(dir / "summary.json");

  json manifest;
  manifest["scenario"] = info.name;
  manifest["parameters"] = params.values();
  manifest["config_source"] = cfg.source();
  manifest["toolkit_version"] = kToolkitVersion;
  manifest["started_utc"] = utc_stamp(started, "%Y-%m-%dT%H:%M:%SZ");
  manifest["wall_seconds"] = wall;
  manifest["files"] = files;
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  f << manifest.dump(2) << '\n';
  return out;
}

DriftReport compare_runs(const fs::path& a, const fs::path& b) {
  auto load = [](const fs::path& d) {
    std::ifstream in(d / "summary.json");
    if (!in) throw RejectedInput("compare: no summary.json in " + d.string());
    try {
      return json::parse(in);
    } catch (const json::exception& e) {
      throw RejectedInput("compare: " + (d / "summary.json").string() + ": " + e.what());
    }
  };
  const json ja = load(a), jb = load(b);
  const std::string sa = ja.value("scenario", ""), sb = jb.value("scenario", "");
  if (sa != sb) throw RejectedInput("compare: scenarios differ ('" + sa + "' vs '" + sb + "')");
  DriftReport r;
  r.scenario = sa;
  std::map<std::string, double> mb;
  for (const auto& m : jb["metrics"])
    if (m["value"].is_number()) mb[m["name"].get<std::string>()] = m["value"].get<double>();
  for (const auto& m : ja["metrics"]) {
    const std::string name = m["name"].get<std::string>();
    if (!m["value"].is_number()) continue;
    const auto it = mb.find(name);
    if (it == mb.end()) continue;
    DriftReport::Row row{name, m["value"].get<double>(), it->second, 0.0};
    const double scale = std::max(std::abs(row.a), std::abs(row.b));
    row.drift = scale > 0.0 ? std::abs(row.b - row.a) / scale : 0.0;
    r.rows.push_back(row);
  }
  return r;
}

SampledFunction lognormal_field(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<cplx> v(g.size());
  for (auto& z : v) z = std::exp(rng.normal());
  SampledFunction f(g, std::move(v));
  return f.scaled(1.0 / lp_norm(f, 1));
}

SampledFunction unit_spike(const Grid& g, std::span<const int> offsets) {
  std::vector<cplx> v(g.size());
  v[g.index(offsets)] = 1.0 / g.cell_measure();
  return SampledFunction(g, std::move(v));
}

std::vector<int> random_offsets(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed, 1);
  std::vector<int> k(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) {
    const int m = g.half_extent(i) / 2;
    k[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * m + 1))) - m;
  }
  return k;
}

}  // namespace oscweak
