#pragma once

// Scenario runner: flat sectioned config, validated parameters, CSV tables,
// manifest and summary files, and run comparison.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "oscweak/errors.hpp"
#include "oscweak/lattice.hpp"

namespace oscweak {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Bad configuration; `line` is 0 when no single line is to blame.
class ConfigError : public RejectedInput {
 public:
  ConfigError(std::string source, int line, const std::string& msg);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
class Config {
 public:
  struct Entry {
    std::string section, key, value;
    int line = 0;
  };

  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry* find(const std::string& section, const std::string& key) const;

 private:
  std::string source_;
  std::vector<Entry> entries_;
};

enum class ParamType { Int, Real, Text, RealList };

struct ParamSpec {
  std::string section, key;
  ParamType type = ParamType::Real;
  std::string fallback;  // default, as config text
  std::string help;
  /// Allowed values for Text parameters; empty means any.
  std::vector<std::string> choices = {};
};

/// Validated parameter values keyed "section.key".
class Params {
 public:
  long long integer(const std::string& name) const;
  double real(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;
  /// Snapshot in config syntax, defaults filled in.
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  friend Params validate(const Config&, const std::vector<ParamSpec>&);
  std::map<std::string, std::string> values_;
};

/// Every key must be declared; values must parse. Throws ConfigError naming the line.
Params validate(const Config& cfg, const std::vector<ParamSpec>& specs);

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Doubles as %.17g, one header line.
void write_table_csv(const Table& t, std::ostream& out);

struct Metric {
  std::string name;
  double value = 0.0;
  double lo = -INFINITY;
  double hi = INFINITY;
  bool pass = false;
  std::string invariant;
};

Metric make_metric(std::string name, double value, double lo, double hi, std::string invariant);

struct ScenarioResult {
  std::vector<Table> tables;
  std::vector<Metric> metrics;
  bool all_pass() const;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::function<ScenarioResult(const Params&)> run;
};

const std::vector<ScenarioInfo>& scenarios();
const ScenarioInfo& find_scenario(const Config& cfg);

/// Validate and run without writing anything.
ScenarioResult run_scenario(const Config& cfg);

struct RunOutcome {
  std::filesystem::path directory;
  ScenarioResult result;
};

/// Writes <root>/<name>-<timestamp>[-k]/ with manifest.json, summary.json and
/// one CSV per table. Validation happens before any computation.
RunOutcome run_config(const Config& cfg, const std::filesystem::path& results_root);

/// $OSCWEAK_RESULTS or ./results.
std::filesystem::path default_results_root();

struct DriftReport {
  std::string scenario;
  struct Row {
    std::string metric;
    double a = 0.0, b = 0.0, drift = 0.0;
  };
  std::vector<Row> rows;
};

/// Per-metric relative drift |b - a| / max(|a|, |b|); 0 when both vanish.
/// Different scenario names are rejected.
DriftReport compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

std::string sha256_file(const std::filesystem::path& p);

// Seeded test inputs shared by the scenarios and the acceptance suite.

/// exp(N(0,1)) per node from CounterRng(seed), unit L1 norm.
SampledFunction lognormal_field(const Grid& g, std::uint64_t seed);
/// Unit mass at the node with the given offsets.
SampledFunction unit_spike(const Grid& g, std::span<const int> offsets);
/// Node offsets drawn uniformly from the inner half of each axis, CounterRng(seed, 1).
std::vector<int> random_offsets(const Grid& g, std::uint64_t seed);

}  // namespace oscweak
