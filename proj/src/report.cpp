#include "memsim/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace memsim {

std::string_view csv_header() {
  return "experiment,workload,mem_ports,arbitration,seed,cycles,retired,ipc,l1d_hit_rate,"
         "l2_hit_rate,l3_hit_rate,channel_util_mean,max_outstanding";
}

std::string csv_row(std::string_view experiment, std::string_view workload,
                    const HierarchyConfig& config, const SimStats& s) {
  return fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}", experiment,
                     workload, config.memory.num_channels, to_string(config.arbitration.policy),
                     config.seed, s.cycles, s.retired, s.ipc, s.l1d.hit_rate(), s.l2.hit_rate(),
                     s.l3.hit_rate(), s.channel_util_mean(), s.max_outstanding);
}

std::string sweep_csv(std::string_view experiment, const std::vector<SweepRow>& rows) {
  std::string out{csv_header()};
  out += '\n';
  std::vector<const SweepRow*> failed;
  for (const auto& r : rows) {
    if (!r.stats) {
      failed.push_back(&r);
      continue;
    }
    out += csv_row(experiment, r.workload, r.config, *r.stats);
    out += '\n';
  }
  if (!failed.empty()) {
    for (const auto* r : failed)
      out += fmt::format("# failed: {} {}: {}\n", r->workload, r->point, r->error);
    out += fmt::format("{}: {} of {} points failed\n", kIncompleteMarker, failed.size(),
                       rows.size());
  }
  return out;
}

std::string summary(std::string_view workload, const HierarchyConfig& config,
                    const SimStats& s) {
  std::string out;
  out += fmt::format("workload        {}\n", workload);
  out += fmt::format("mem_ports       {}\n", config.memory.num_channels);
  out += fmt::format("arbitration     {}\n", to_string(config.arbitration.policy));
  out += fmt::format("l3              {}\n", config.l3.enabled ? "on" : "off");
  out += fmt::format("seed            {}\n", config.seed);
  out += fmt::format("cycles          {}\n", s.cycles);
  out += fmt::format("retired         {}\n", s.retired);
  out += fmt::format("ipc             {:.4f}\n", s.ipc);
  out += fmt::format("l1i hit rate    {:.4f}\n", s.l1i.hit_rate());
  out += fmt::format("l1d hit rate    {:.4f}\n", s.l1d.hit_rate());
  out += fmt::format("l2 hit rate     {:.4f}\n", s.l2.hit_rate());
  if (config.l3.enabled) out += fmt::format("l3 hit rate     {:.4f}\n", s.l3.hit_rate());
  out += fmt::format("requests        {} issued, {} completed, peak {} outstanding\n",
                     s.issued_requests, s.completed_requests, s.max_outstanding);
  out += "channel util   ";
  for (const auto& c : s.channels) out += fmt::format(" {:.3f}", c.utilization);
  out += fmt::format("  (mean {:.3f})\n", s.channel_util_mean());
  return out;
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double log_sum = 0.0;
  for (double v : values) log_sum += std::log(v);
  return std::exp(log_sum / static_cast<double>(values.size()));
}

namespace {

template <class T>
std::size_t index_of(std::vector<T>& list, const T& value) {
  auto it = std::find(list.begin(), list.end(), value);
  if (it != list.end()) return static_cast<std::size_t>(it - list.begin());
  list.push_back(value);
  return list.size() - 1;
}

bool all_set(const std::vector<std::vector<std::optional<double>>>& m) {
  for (const auto& row : m) {
    for (const auto& v : row) {
      if (!v) return false;
    }
  }
  return true;
}

std::string cell(const std::optional<double>& v, int precision = 3) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string("n/a");
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* const kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

// Grouped bars: one group per label, one bar per series.
std::string grouped_bars(std::string_view title, std::string_view y_label,
                         const std::vector<std::string>& groups,
                         const std::vector<std::string>& series,
                         const std::vector<std::vector<std::optional<double>>>& value) {
  const double width = 120.0 + 90.0 * static_cast<double>(groups.size());
  const double height = 360.0, top = 40.0, bottom = 300.0, left = 60.0;
  double vmax = 0.0;
  for (const auto& g : value) {
    for (const auto& v : g) {
      if (v) vmax = std::max(vmax, *v);
    }
  }
  if (vmax <= 0.0) vmax = 1.0;
  const double scale = (bottom - top) / (vmax * 1.1);
  const double group_w = 90.0;
  const double bar_w = (group_w - 20.0) / static_cast<double>(std::max<std::size_t>(1, series.size()));

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  out += fmt::format("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  out += fmt::format("<text x=\"{:.0f}\" y=\"20\" font-size=\"14\">{}</text>\n", left,
                     escape_xml(title));
  out += fmt::format(
      "<text x=\"14\" y=\"{:.0f}\" transform=\"rotate(-90 14 {:.0f})\">{}</text>\n",
      (top + bottom) / 2, (top + bottom) / 2, escape_xml(y_label));
  out += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{0:.0f}\" y2=\"{2:.0f}\" "
                     "stroke=\"black\"/>\n",
                     left, top, bottom);
  out += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{2:.0f}\" y2=\"{1:.0f}\" "
                     "stroke=\"black\"/>\n",
                     left, bottom, width - 20);
  for (int t = 0; t <= 4; ++t) {
    const double v = vmax * 1.1 * t / 4.0;
    const double y = bottom - v * scale;
    out += fmt::format("<text x=\"{:.0f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n",
                       left - 4, y + 4, v);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = left + 10.0 + group_w * static_cast<double>(g);
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& v = value[g][s];
      if (!v) continue;
      const double h = *v * scale;
      out += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
          gx + bar_w * static_cast<double>(s), bottom - h, bar_w - 1.0, h,
          kPalette[s % std::size(kPalette)]);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.0f}\" text-anchor=\"middle\">{}</text>\n",
                       gx + (group_w - 20.0) / 2, bottom + 16, escape_xml(groups[g]));
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = bottom + 36 + 14.0 * static_cast<double>(s);
    out += fmt::format("<rect x=\"{:.0f}\" y=\"{:.0f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                       left, y - 9, kPalette[s % std::size(kPalette)]);
    out += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\">{}</text>\n", left + 14, y,
                       escape_xml(series[s]));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

bool PortTable::complete() const { return all_set(ipc); }

PortTable port_table(const std::vector<SweepRow>& rows) {
  PortTable t;
  for (const auto& r : rows) {
    index_of(t.workloads, r.workload);
    index_of(t.points, r.point);
  }
  const auto np = t.points.size();
  t.ipc.assign(t.workloads.size(), std::vector<std::optional<double>>(np));
  t.relative = t.ipc;
  for (const auto& r : rows) {
    if (!r.stats) continue;
    const auto w = index_of(t.workloads, r.workload);
    const auto p = index_of(t.points, r.point);
    t.ipc[w][p] = r.stats->ipc;
  }
  for (std::size_t w = 0; w < t.workloads.size(); ++w) {
    const auto& base = t.ipc[w][0];
    for (std::size_t p = 0; p < np; ++p) {
      if (base && *base > 0.0 && t.ipc[w][p]) t.relative[w][p] = *t.ipc[w][p] / *base;
    }
  }
  t.geomean.assign(np, std::nullopt);
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<double> v;
    for (const auto& row : t.relative) {
      if (row[p]) v.push_back(*row[p]);
    }
    if (v.size() == t.workloads.size() && !v.empty()) t.geomean[p] = geometric_mean(v);
  }
  return t;
}

std::string relative_csv(const PortTable& t) {
  std::string out = "workload,mem_ports,ipc,relative_ipc\n";
  bool missing = false;
  for (std::size_t w = 0; w < t.workloads.size(); ++w) {
    for (std::size_t p = 0; p < t.points.size(); ++p) {
      if (!t.relative[w][p]) {
        missing = true;
        continue;
      }
      out += fmt::format("{},{},{:.6f},{:.6f}\n", t.workloads[w], t.points[p], *t.ipc[w][p],
                         *t.relative[w][p]);
    }
  }
  for (std::size_t p = 0; p < t.points.size(); ++p) {
    if (t.geomean[p]) out += fmt::format("geomean,{},,{:.6f}\n", t.points[p], *t.geomean[p]);
  }
  if (missing) out += fmt::format("{}: some points failed\n", kIncompleteMarker);
  return out;
}

std::string port_markdown(const PortTable& t) {
  std::string out = "IPC relative to the first port count (raw IPC in parentheses)\n\n| workload |";
  for (const auto& p : t.points) out += fmt::format(" {} port{} |", p, p == "1" ? "" : "s");
  out += "\n|---|";
  for (std::size_t p = 0; p < t.points.size(); ++p) out += "---:|";
  out += '\n';
  for (std::size_t w = 0; w < t.workloads.size(); ++w) {
    out += fmt::format("| {} |", t.workloads[w]);
    for (std::size_t p = 0; p < t.points.size(); ++p) {
      if (t.relative[w][p])
        out += fmt::format(" {:.3f}x ({:.3f}) |", *t.relative[w][p], *t.ipc[w][p]);
      else
        out += " failed |";
    }
    out += '\n';
  }
  out += "| **geomean** |";
  for (const auto& g : t.geomean) out += fmt::format(" **{}** |", g ? cell(g) + "x" : "n/a");
  out += '\n';
  return out;
}

std::string port_svg(const PortTable& t) {
  std::vector<std::string> groups = t.workloads;
  groups.push_back("geomean");
  std::vector<std::vector<std::optional<double>>> v = t.relative;
  v.push_back(t.geomean);
  std::vector<std::string> series;
  for (const auto& p : t.points) series.push_back(fmt::format("{} port{}", p, p == "1" ? "" : "s"));
  return grouped_bars("IPC relative to 1 memory port", "relative IPC", groups, series, v);
}

bool ArbTable::complete() const { return all_set(ipc); }

ArbTable arb_table(const std::vector<SweepRow>& rows) {
  ArbTable t;
  for (const auto& r : rows) {
    index_of(t.workloads, r.workload);
    index_of(t.policies, std::string(to_string(r.config.arbitration.policy)));
  }
  t.ipc.assign(t.policies.size(), std::vector<std::optional<double>>(t.workloads.size()));
  for (const auto& r : rows) {
    if (!r.stats) continue;
    const auto p = index_of(t.policies, std::string(to_string(r.config.arbitration.policy)));
    const auto w = index_of(t.workloads, r.workload);
    t.ipc[p][w] = r.stats->ipc;
  }
  t.spread.assign(t.workloads.size(), std::nullopt);
  for (std::size_t w = 0; w < t.workloads.size(); ++w) {
    double lo = 0.0, hi = 0.0;
    bool ok = !t.policies.empty();
    for (std::size_t p = 0; p < t.policies.size() && ok; ++p) {
      if (!t.ipc[p][w]) {
        ok = false;
        break;
      }
      const double v = *t.ipc[p][w];
      lo = p == 0 ? v : std::min(lo, v);
      hi = p == 0 ? v : std::max(hi, v);
    }
    if (ok && lo > 0.0) t.spread[w] = (hi - lo) / lo;
  }
  return t;
}

std::string arb_markdown(const ArbTable& t) {
  std::string out = "IPC per arbitration policy (best per workload in bold)\n\n| policy |";
  for (const auto& w : t.workloads) out += fmt::format(" {} |", w);
  out += "\n|---|";
  for (std::size_t w = 0; w < t.workloads.size(); ++w) out += "---:|";
  out += '\n';
  for (std::size_t p = 0; p < t.policies.size(); ++p) {
    out += fmt::format("| {} |", t.policies[p]);
    for (std::size_t w = 0; w < t.workloads.size(); ++w) {
      const auto& v = t.ipc[p][w];
      if (!v) {
        out += " failed |";
        continue;
      }
      double best = *v;
      for (std::size_t q = 0; q < t.policies.size(); ++q) {
        if (t.ipc[q][w]) best = std::max(best, *t.ipc[q][w]);
      }
      out += *v == best ? fmt::format(" **{:.4f}** |", *v) : fmt::format(" {:.4f} |", *v);
    }
    out += '\n';
  }
  out += "| (max-min)/min |";
  for (const auto& s : t.spread)
    out += s ? fmt::format(" {:.2f}% |", *s * 100.0) : std::string(" n/a |");
  out += '\n';
  return out;
}

std::string arb_svg(const ArbTable& t) {
  std::vector<std::vector<std::optional<double>>> v(t.workloads.size(),
                                                    std::vector<std::optional<double>>(t.policies.size()));
  for (std::size_t p = 0; p < t.policies.size(); ++p) {
    for (std::size_t w = 0; w < t.workloads.size(); ++w) v[w][p] = t.ipc[p][w];
  }
  return grouped_bars("IPC per arbitration policy", "IPC", t.workloads, t.policies, v);
}

}  // namespace memsim
