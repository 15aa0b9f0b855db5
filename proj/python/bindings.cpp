#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memsim/config.hpp"
#include "memsim/core.hpp"
#include "memsim/engine.hpp"
#include "memsim/protocol.hpp"
#include "memsim/report.hpp"
#include "memsim/workloads.hpp"

namespace py = pybind11;
using namespace memsim;

namespace {

HierarchyConfig config_from(const std::optional<std::string>& json) {
  return json ? parse_config(*json, "<python>") : default_config();
}

WorkloadSpec workload_named(const std::string& name) {
  if (auto w = find_builtin(name)) return *w;
  std::string names;
  for (const auto& n : builtin_names()) names += (names.empty() ? "" : ", ") + n;
  throw py::value_error("unknown workload '" + name + "'; valid names: " + names);
}

py::dict cache_dict(const CacheCounters& c) {
  py::dict d;
  d["hits"] = c.hits;
  d["misses"] = c.misses;
  d["merges"] = c.merges;
  d["writebacks"] = c.writebacks;
  d["hit_rate"] = c.hit_rate();
  return d;
}

py::dict stats_dict(const SimStats& s) {
  py::dict d;
  d["cycles"] = s.cycles;
  d["retired"] = s.retired;
  d["ipc"] = s.ipc;
  d["l1i"] = cache_dict(s.l1i);
  d["l1d"] = cache_dict(s.l1d);
  d["l2"] = cache_dict(s.l2);
  d["l3"] = cache_dict(s.l3);
  d["issued_requests"] = s.issued_requests;
  d["completed_requests"] = s.completed_requests;
  d["max_outstanding"] = s.max_outstanding;
  d["revoked_grants"] = s.revoked_grants;
  d["grant_digest"] = s.grant_digest;
  d["channel_util_mean"] = s.channel_util_mean();
  py::list util;
  for (const auto& c : s.channels) util.append(c.utilization);
  d["channel_util"] = util;
  return d;
}

py::dict shape_dict(const BoundaryShape& b) {
  py::dict d;
  d["inputs"] = b.inputs;
  d["outputs"] = b.outputs;
  d["groups"] = b.groups;
  d["direct"] = b.direct();
  return d;
}

}  // namespace

PYBIND11_MODULE(_memsim, m) {
  m.doc() = "Cycle-level multiport GPU memory hierarchy simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<WorkloadError>(m, "WorkloadError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def("default_config", [] { return serialize_config(default_config()); },
        "Default config as a JSON string.");

  m.def("validate", [](const std::optional<std::string>& config) {
    const auto v = validate(config_from(config));
    py::dict d;
    d["l1i"] = shape_dict(v.l1i_boundary());
    d["l1d"] = shape_dict(v.l1d_boundary());
    d["l2"] = shape_dict(v.l2_boundary());
    d["l3"] = shape_dict(v.l3_boundary());
    d["memory"] = shape_dict(v.memory_boundary());
    d["config"] = serialize_config(v.config());
    return d;
  }, py::arg("config") = py::none(), "Validates a JSON config; returns every boundary's port shape.");

  m.def("derive_output_ports", [](std::uint32_t in, std::uint32_t down) {
    const auto d = derive_output_ports(in, down);
    return py::make_tuple(d.output_ports, d.direct_mapped);
  }, py::arg("input_ports"), py::arg("downstream_ports"));

  m.def("bank_index", &bank_index, py::arg("address"), py::arg("line_size"), py::arg("num_banks"));
  m.def("channel_index", &channel_index, py::arg("address"), py::arg("line_size"),
        py::arg("num_channels"));

  m.def("coalesce", [](const std::vector<Address>& addresses, std::uint32_t line_size) {
    return coalesce_lines(addresses, line_size);
  }, py::arg("addresses"), py::arg("line_size") = 64,
     "Distinct line addresses touched by one warp access, in first-use order.");

  m.def("workloads", &builtin_names);

  m.def("run", [](const std::string& workload, const std::optional<std::string>& config,
                  std::optional<std::uint64_t> seed, std::optional<std::uint64_t> cycle_cap) {
    auto c = config_from(config);
    if (seed) c.seed = *seed;
    const auto v = validate(c);
    const auto w = workload_named(workload);
    SimStats s;
    {
      py::gil_scoped_release release;
      s = run(v, w, RunOptions{cycle_cap, nullptr});
    }
    return stats_dict(s);
  }, py::arg("workload"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
     py::arg("cycle_cap") = py::none());

  m.def("sweep", [](const std::string& parameter, const std::vector<std::string>& values,
                    const std::optional<std::string>& config,
                    const std::optional<std::vector<std::string>>& workloads, unsigned jobs) {
    const auto base = config_from(config);
    std::vector<WorkloadSpec> suite;
    if (workloads) {
      for (const auto& n : *workloads) suite.push_back(workload_named(n));
    } else {
      suite = builtin_suite();
    }
    std::vector<SweepRow> rows;
    {
      py::gil_scoped_release release;
      rows = sweep(base, SweepAxis{parameter, values}, suite, SweepOptions{jobs, {}});
    }
    py::list out;
    for (const auto& r : rows) {
      py::dict d;
      d["workload"] = r.workload;
      d["point"] = r.point;
      d["stats"] = r.stats ? py::object(stats_dict(*r.stats)) : py::none();
      d["error"] = r.error;
      d["csv"] = r.stats ? csv_row(parameter, r.workload, r.config, *r.stats) : std::string();
      out.append(d);
    }
    return out;
  }, py::arg("parameter"), py::arg("values"), py::arg("config") = py::none(),
     py::arg("workloads") = py::none(), py::arg("jobs") = 1);

  m.attr("CSV_HEADER") = std::string(csv_header());
}
