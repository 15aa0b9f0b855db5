#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/engine.hpp"

namespace memsim {

// CSV columns, in order:
//   experiment,workload,mem_ports,arbitration,seed,cycles,retired,ipc,
//   l1d_hit_rate,l2_hit_rate,l3_hit_rate,channel_util_mean,max_outstanding
// Rates and means use six decimals. A file that misses any point ends with a
// line starting with "# incomplete".
std::string_view csv_header();
std::string csv_row(std::string_view experiment, std::string_view workload,
                    const HierarchyConfig& config, const SimStats& stats);
std::string sweep_csv(std::string_view experiment, const std::vector<SweepRow>& rows);

inline constexpr std::string_view kIncompleteMarker = "# incomplete";

/// Human readable block printed by `memsim run`.
std::string summary(std::string_view workload, const HierarchyConfig& config,
                    const SimStats& stats);

double geometric_mean(const std::vector<double>& values);

/// IPC per (workload, port count), relative to the first port count.
struct PortTable {
  std::vector<std::string> workloads;
  std::vector<std::string> points;                     // port counts as given
  std::vector<std::vector<std::optional<double>>> ipc;  // [workload][point]
  std::vector<std::vector<std::optional<double>>> relative;
  std::vector<std::optional<double>> geomean;          // per point, over all workloads

  bool complete() const;
};

PortTable port_table(const std::vector<SweepRow>& rows);
std::string relative_csv(const PortTable& table);
std::string port_markdown(const PortTable& table);
std::string port_svg(const PortTable& table);

/// IPC per (policy, workload) with the max/min spread of every workload.
struct ArbTable {
  std::vector<std::string> policies;
  std::vector<std::string> workloads;
  std::vector<std::vector<std::optional<double>>> ipc;  // [policy][workload]
  std::vector<std::optional<double>> spread;            // (max - min) / min per workload

  bool complete() const;
};

ArbTable arb_table(const std::vector<SweepRow>& rows);
std::string arb_markdown(const ArbTable& table);
std::string arb_svg(const ArbTable& table);

}  // namespace memsim
