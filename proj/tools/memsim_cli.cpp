// memsim command line: single runs, port sweeps and arbitration comparisons.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "memsim/config.hpp"
#include "memsim/engine.hpp"
#include "memsim/report.hpp"
#include "memsim/workloads.hpp"

namespace fs = std::filesystem;
using namespace memsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;  // simulation error or incomplete sweep
constexpr int kExitUsage = 2;   // bad config, unknown workload, I/O

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cycle_cap;
  std::string out_dir = "results";
  unsigned jobs = 1;
  std::string trace_path;
  bool no_svg = false;
  std::string workload;
};

void add_common(CLI::App& cmd, Common& c, bool sweep) {
  cmd.add_option("--config", c.config_path, "JSON config file (defaults when omitted)");
  cmd.add_option("--seed", c.seed, "workload seed, overrides MEMSIM_SEED and the config");
  cmd.add_option("--cycle-cap", c.cycle_cap, "abort a run after this many cycles");
  cmd.add_option("--out-dir", c.out_dir, "directory for CSV/markdown/SVG output")
      ->capture_default_str();
  if (sweep) {
    cmd.add_option("--workload", c.workload, "comma separated subset of the suite");
    cmd.add_option("--jobs", c.jobs, "simulations run in parallel")->check(CLI::PositiveNumber);
    cmd.add_flag("--no-svg", c.no_svg, "skip the SVG chart");
  } else {
    cmd.add_option("--workload", c.workload, "workload name")->required();
    cmd.add_option("--trace", c.trace_path, "write the request trace CSV here");
  }
}

struct Loaded {
  HierarchyConfig config;
  std::vector<WorkloadSpec> workloads;  // from the config file, may be empty
};

Loaded load(const Common& c) {
  Loaded l;
  if (c.config_path.empty()) {
    l.config = default_config();
  } else {
    l.config = load_config(c.config_path);
    l.workloads = load_workloads(c.config_path);
  }
  if (const char* env = std::getenv("MEMSIM_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      l.config.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError(ConfigErrc::ParseError,
                        fmt::format("MEMSIM_SEED='{}' is not an unsigned integer", env));
    }
  }
  if (c.seed) l.config.seed = *c.seed;
  if (c.cycle_cap) l.config.cycle_cap = *c.cycle_cap;
  return l;
}

std::string valid_names(const std::vector<WorkloadSpec>& extra) {
  std::string out;
  for (const auto& n : builtin_names()) out += (out.empty() ? "" : ", ") + n;
  for (const auto& w : extra) out += ", " + w.name;
  return out;
}

std::optional<WorkloadSpec> find_workload(const std::string& name,
                                          const std::vector<WorkloadSpec>& extra) {
  for (const auto& w : extra) {
    if (w.name == name) return w;
  }
  return find_builtin(name);
}

std::vector<WorkloadSpec> pick_suite(const Common& c, const Loaded& l) {
  std::vector<WorkloadSpec> base = l.workloads.empty() ? builtin_suite() : l.workloads;
  if (c.workload.empty()) return base;
  std::vector<WorkloadSpec> out;
  std::size_t start = 0;
  while (start <= c.workload.size()) {
    auto end = c.workload.find(',', start);
    if (end == std::string::npos) end = c.workload.size();
    const auto name = c.workload.substr(start, end - start);
    auto w = find_workload(name, l.workloads);
    if (!w)
      throw WorkloadError(
          fmt::format("unknown workload '{}'; valid names: {}", name, valid_names(l.workloads)));
    out.push_back(*w);
    start = end + 1;
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
}

int cmd_run(const Common& c) {
  const auto l = load(c);
  const auto workload = find_workload(c.workload, l.workloads);
  if (!workload) {
    std::cerr << fmt::format("error: unknown workload '{}'; valid names: {}\n", c.workload,
                             valid_names(l.workloads));
    return kExitUsage;
  }
  const auto cfg = validate(l.config);
  fs::create_directories(c.out_dir);

  std::ofstream trace;
  RunOptions opts;
  if (!c.trace_path.empty()) {
    trace.open(c.trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error(fmt::format("cannot write {}", c.trace_path));
    opts.trace = &trace;
  }

  const fs::path csv = fs::path(c.out_dir) / fmt::format("run_{}.csv", workload->name);
  try {
    const auto stats = run(cfg, *workload, opts);
    std::cout << summary(workload->name, l.config, stats);
    const auto row = csv_row("run", workload->name, l.config, stats);
    std::cout << csv_header() << '\n' << row << '\n';
    write_file(csv, fmt::format("{}\n{}\n", csv_header(), row));
    return kExitOk;
  } catch (const SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_file(csv, fmt::format("{}\n# failed: {}: {}\n{}\n", csv_header(), workload->name,
                                e.what(), kIncompleteMarker));
    return kExitFailed;
  }
}

int finish_sweep(const std::vector<SweepRow>& rows) {
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.stats) {
      ++failed;
      std::cerr << fmt::format("error: {} at {}: {}\n", r.workload, r.point, r.error);
    }
  }
  return failed == 0 ? kExitOk : kExitFailed;
}

int cmd_sweep_ports(const Common& c) {
  const auto l = load(c);
  const auto suite = pick_suite(c, l);
  SweepAxis axis{"mem_ports", {"1", "2", "4", "8"}};
  const auto rows = sweep(l.config, axis, suite, {c.jobs, c.cycle_cap});

  const auto table = port_table(rows);
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  write_file(dir / "ports_raw.csv", sweep_csv("sweep-ports", rows));
  write_file(dir / "ports_relative.csv", relative_csv(table));
  const auto md = port_markdown(table);
  write_file(dir / "ports.md", md);
  if (!c.no_svg) write_file(dir / "ports.svg", port_svg(table));
  std::cout << md;
  return finish_sweep(rows);
}

int cmd_sweep_arb(const Common& c) {
  auto l = load(c);
  if (!l.config.l3.enabled) {
    std::cerr << "warning: L3 disabled in the config; enabling it for the arbitration sweep\n";
    l.config.l3.enabled = true;
  }
  if (l.config.memory.num_channels != 4) {
    std::cerr << fmt::format("warning: using 4 memory ports instead of {}\n",
                             l.config.memory.num_channels);
    l.config = apply_axis_value(l.config, "mem_ports", "4");
  }
  const auto suite = pick_suite(c, l);
  SweepAxis axis{"arbitration", {"crossbar", "source_rr", "distributed_rr"}};
  const auto rows = sweep(l.config, axis, suite, {c.jobs, c.cycle_cap});

  const auto table = arb_table(rows);
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  write_file(dir / "arb_raw.csv", sweep_csv("sweep-arb", rows));
  const auto md = arb_markdown(table);
  write_file(dir / "arb.md", md);
  if (!c.no_svg) write_file(dir / "arb.svg", arb_svg(table));
  std::cout << md;
  return finish_sweep(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memsim: multiport GPU memory hierarchy simulator"};
  app.require_subcommand(1);

  Common run_opts, ports_opts, arb_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one workload and print a summary");
  add_common(*run_cmd, run_opts, false);
  auto* ports_cmd = app.add_subcommand("sweep-ports", "suite across 1, 2, 4 and 8 memory ports");
  add_common(*ports_cmd, ports_opts, true);
  auto* arb_cmd = app.add_subcommand("sweep-arb", "suite across the three arbitration policies");
  add_common(*arb_cmd, arb_opts, true);
  auto* defaults_cmd = app.add_subcommand("defaults", "print the default config as JSON");
  auto* list_cmd = app.add_subcommand("workloads", "list the builtin workloads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_opts);
    if (*ports_cmd) return cmd_sweep_ports(ports_opts);
    if (*arb_cmd) return cmd_sweep_arb(arb_opts);
    if (*defaults_cmd) {
      std::cout << serialize_config(default_config()) << '\n';
      return kExitOk;
    }
    if (*list_cmd) {
      for (const auto& w : builtin_suite())
        std::cout << fmt::format("{:<10} {:<11} compute/mem {}\n", w.name,
                                 pattern_name(w.pattern), w.compute_per_mem);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const WorkloadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitUsage;
}
