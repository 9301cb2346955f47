#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "oscweak/errors.hpp"
#include "oscweak/experiments.hpp"

using namespace oscweak;

namespace {

int cmd_run(const std::string& path) {
  const auto cfg = Config::load(path);
  const auto out = run_config(cfg, default_results_root());
  for (const auto& m : out.result.metrics)
    std::printf("%-4s %-28s %.6g  [%s]\n", m.pass ? "PASS" : "FAIL", m.name.c_str(), m.value, m.invariant.c_str());
  std::printf("results: %s\n", out.directory.string().c_str());
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto r = compare_runs(a, b);
  std::printf("scenario %s\n%-28s %14s %14s %10s\n", r.scenario.c_str(), "metric", "a", "b", "drift");
  for (const auto& row : r.rows)
    std::printf("%-28s %14.6g %14.6g %10.3g\n", row.metric.c_str(), row.a, row.b, row.drift);
  return 0;
}

int cmd_list() {
  for (const auto& s : scenarios()) {
    std::printf("%s\n  %s\n", s.name.c_str(), s.description.c_str());
    for (const auto& p : s.params) {
      if (p.section == "scenario" && p.key == "name") continue;
      std::printf("    [%s] %-18s = %-14s %s\n", p.section.c_str(), p.key.c_str(), p.fallback.c_str(), p.help.c_str());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-type verification runner"};
  app.require_subcommand(1);
  std::string config, dir_a, dir_b;
  auto* run = app.add_subcommand("run", "run the scenario described by a config file");
  run->add_option("config", config, "config path")->required();
  auto* cmp = app.add_subcommand("compare", "relative drift of summary metrics between two runs");
  cmp->add_option("run_a", dir_a, "result directory")->required();
  cmp->add_option("run_b", dir_b, "result directory")->required();
  auto* list = app.add_subcommand("list-scenarios", "scenarios and their parameters");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(config);
    if (*cmp) return cmd_compare(dir_a, dir_b);
    if (*list) return cmd_list();
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: invariant '%s': %s\n", e.invariant().c_str(), e.what());
    return 3;
  } catch (const RejectedInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Unsupported& e) {
    std::fprintf(stderr, "unsupported: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
