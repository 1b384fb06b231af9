#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <dfmap/common.hpp>

namespace dfmap {

struct ChipSpec {
  std::string name;
  double t_lim = 1;        // compute tiles
  Flops t_flop = 0;        // per-tile throughput, FLOP/s
  Bytes s_cap = 0;         // SRAM capacity
  Bytes d_cap = 0;         // DRAM capacity
  double d_bw = 0;         // DRAM bandwidth, bytes/s
  std::optional<double> power_w;
  std::optional<double> price_usd;

  Flops peak_flops() const { return t_lim * t_flop; }
};

enum class Topology { ring, fully_connected, switched };

inline const char* to_string(Topology t) {
  switch (t) {
    case Topology::ring: return "ring";
    case Topology::fully_connected: return "fully_connected";
    case Topology::switched: return "switch";
  }
  return "?";
}

inline Topology topology_from_string(const std::string& s) {
  if (s == "ring") return Topology::ring;
  if (s == "fully_connected") return Topology::fully_connected;
  if (s == "switch") return Topology::switched;
  throw validation_error("unknown topology '" + s + "'");
}

struct NetworkDim {
  Topology topology = Topology::ring;
  int size = 1;             // chips along this dimension
  double link_bw = 0;       // bytes/s per link
  Seconds hop_latency = 0;  // per-hop alpha term
};

struct SystemSpec {
  ChipSpec chip;
  std::vector<NetworkDim> dims;
  // Each parallelization strategy owns at most one network dimension.
  std::optional<int> tp_dim, pp_dim, dp_dim;

  int dim_degree(std::optional<int> d) const {
    return d ? dims[size_t(*d)].size : 1;
  }
  int n_tp() const { return dim_degree(tp_dim); }
  int n_pp() const { return dim_degree(pp_dim); }
  int n_dp() const { return dim_degree(dp_dim); }
  int total_chips() const {
    int p = 1;
    for (const auto& d : dims) p *= d.size;
    return p;
  }
  const NetworkDim* tp() const { return tp_dim ? &dims[size_t(*tp_dim)] : nullptr; }
  const NetworkDim* pp() const { return pp_dim ? &dims[size_t(*pp_dim)] : nullptr; }
  const NetworkDim* dp() const { return dp_dim ? &dims[size_t(*dp_dim)] : nullptr; }
};

inline void validate_system(const SystemSpec& s) {
  if (!(s.chip.t_lim > 0) || !(s.chip.t_flop > 0) || !(s.chip.s_cap > 0) ||
      !(s.chip.d_cap > 0) || !(s.chip.d_bw > 0))
    throw validation_error("chip '" + s.chip.name + "': all resource fields must be > 0");
  for (const auto& d : s.dims) {
    if (d.size < 1) throw validation_error("network dim size must be >= 1");
    if (!(d.link_bw > 0)) throw validation_error("network dim link_bw must be > 0");
    if (d.hop_latency < 0) throw validation_error("network dim hop_latency must be >= 0");
  }
  auto check_dim = [&](std::optional<int> d, const char* role) {
    if (d && (*d < 0 || *d >= int(s.dims.size())))
      throw validation_error(std::string(role) + " dim index out of range");
  };
  check_dim(s.tp_dim, "tp");
  check_dim(s.pp_dim, "pp");
  check_dim(s.dp_dim, "dp");
  if ((s.tp_dim && s.pp_dim && *s.tp_dim == *s.pp_dim) ||
      (s.tp_dim && s.dp_dim && *s.tp_dim == *s.dp_dim) ||
      (s.pp_dim && s.dp_dim && *s.pp_dim == *s.dp_dim))
    throw validation_error("tp/pp/dp must be assigned to distinct network dims");
  long long assigned = 1LL * s.n_tp() * s.n_pp() * s.n_dp();
  if (assigned != s.total_chips())
    throw validation_error("dim-size mismatch: n_tp*n_pp*n_dp = " + std::to_string(assigned) +
                           " but dims multiply to " + std::to_string(s.total_chips()) +
                           " (every dim must be assigned to a strategy)");
}

// ---------------------------------------------------------------------------
// Technology catalogs and cost/power estimation
// ---------------------------------------------------------------------------

struct MemoryTech {
  double bandwidth = 0;   // bytes/s
  double price_per_gb = 0;
  double power_w_per_gb = 0;
};

struct InterconnectTech {
  double bandwidth = 0;   // bytes/s per link
  double price_per_link = 0;
  double power_w_per_link = 0;
};

struct TechCatalog {
  std::map<std::string, MemoryTech> memory;
  std::map<std::string, InterconnectTech> interconnect;

  const MemoryTech& mem(const std::string& name) const {
    auto it = memory.find(name);
    if (it == memory.end()) throw validation_error("no memory technology '" + name + "' in catalog");
    return it->second;
  }
  const InterconnectTech& net(const std::string& name) const {
    auto it = interconnect.find(name);
    if (it == interconnect.end())
      throw validation_error("no interconnect technology '" + name + "' in catalog");
    return it->second;
  }
};

// Price/power constants below are engineering estimates assembled from public
// list prices; only the bandwidths are load-bearing for performance results.
inline TechCatalog default_tech_catalog() {
  TechCatalog c;
  c.memory["ddr4"] = MemoryTech{200.0 * kGB, 4.0, 0.4};
  c.memory["hbm3"] = MemoryTech{3000.0 * kGB, 15.0, 0.8};
  c.interconnect["pcie4"] = InterconnectTech{25.0 * kGB, 100.0, 8.0};
  c.interconnect["nvlink4"] = InterconnectTech{900.0 * kGB, 400.0, 25.0};
  return c;
}

// Silicon power regression against peak throughput, X in TFLOPS, Y in kW.
// The parabola goes negative for mid-range X, so the result is clamped; when
// a chip's catalog entry carries measured power, that value wins and this
// curve is only used for hypothetical chips.
inline double chip_power_kw(double peak_tflops) {
  if (peak_tflops < 0) throw validation_error("chip_power: negative throughput");
  constexpr double floor_kw = 0.01;
  double y = 3e-7 * peak_tflops * peak_tflops - 4.3e-4 * peak_tflops + 0.04;
  return std::max(floor_kw, y);
}

inline double chip_power_w(const ChipSpec& chip) {
  if (chip.power_w) return *chip.power_w;
  return chip_power_kw(chip.peak_flops() / 1e12) * 1e3;
}

// Price trend mirrors the power curve shape; used only when the catalog has
// no measured price. Scale chosen so a ~1 PFLOPS chip lands near list price.
inline double chip_price_usd(const ChipSpec& chip) {
  if (chip.price_usd) return *chip.price_usd;
  double x = chip.peak_flops() / 1e12;
  return std::max(1000.0, (6e-4 * x * x - 0.86 * x + 80.0) * 1e3 / 2.0);
}

// Links in one instance of a dimension's topology; a degenerate size-1
// dimension has no links.
inline long long links_per_instance(const NetworkDim& d) {
  if (d.size <= 1) return 0;
  switch (d.topology) {
    case Topology::ring: return d.size;
    case Topology::fully_connected: return 1LL * d.size * (d.size - 1) / 2;
    case Topology::switched: return d.size;  // one uplink per chip
  }
  return 0;
}

struct CostPower {
  double price_usd = 0;
  double power_w = 0;
};

// Totals across the system: chips (silicon + attached memory) plus links.
// A dimension of size s in a c-chip system occurs c/s times.
inline CostPower system_cost_power(const SystemSpec& sys, const TechCatalog& catalog,
                                   const std::string& mem_tech, const std::string& net_tech) {
  const auto& mem = catalog.mem(mem_tech);
  const auto& net = catalog.net(net_tech);
  const double chips = sys.total_chips();
  const double dram_gb = sys.chip.d_cap / kGB;
  CostPower out;
  out.price_usd = chips * (chip_price_usd(sys.chip) + mem.price_per_gb * dram_gb);
  out.power_w = chips * (chip_power_w(sys.chip) + mem.power_w_per_gb * dram_gb);
  for (const auto& d : sys.dims) {
    double instances = chips / double(d.size);
    double links = instances * double(links_per_instance(d));
    out.price_usd += links * net.price_per_link;
    out.power_w += links * net.power_w_per_link;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in chips
// ---------------------------------------------------------------------------

// Tile counts are modeling granularity (SM / MXU / PCU-like units), not an
// exact enumeration of vendor blocks; t_lim * t_flop matches datasheet peak.
inline std::vector<ChipSpec> builtin_chips() {
  std::vector<ChipSpec> v;
  v.push_back(ChipSpec{"h100", 132, 993.0 * kTera / 132, 113.0 * kMB, 80.0 * kGB,
                       3350.0 * kGB, 700.0, 30000.0});
  v.push_back(ChipSpec{"tpuv4", 64, 275.0 * kTera / 64, 160.0 * kMB, 32.0 * kGB,
                       1200.0 * kGB, 192.0, 12000.0});
  v.push_back(ChipSpec{"sn30", 1280, 614.0 * kTera / 1280, 640.0 * kMB, 1024.0 * kGB,
                       200.0 * kGB, 600.0, 35000.0});
  v.push_back(ChipSpec{"wse2", 4096, 7500.0 * kTera / 4096, 40.0 * kGB, 1200.0 * kGB,
                       150.0 * kGB, 15000.0, 2500000.0});
  return v;
}

inline ChipSpec builtin_chip(const std::string& name) {
  for (const auto& c : builtin_chips())
    if (c.name == name) return c;
  throw validation_error("unknown chip preset '" + name + "'");
}

// SambaNova SN10 reference point used by the mapping case studies: 307.2
// TFLOPS bf16, 320 MB SRAM, DDR at 200 GB/s behind a 25 GB/s interconnect.
inline ChipSpec sn10_chip() {
  ChipSpec c;
  c.name = "sn10";
  c.t_lim = 640;
  c.t_flop = 307.2 * kTera / 640;
  c.s_cap = 320.0 * kMB;
  c.d_cap = 1536.0 * kGB;
  c.d_bw = 200.0 * kGB;
  c.power_w = 400.0;
  c.price_usd = 30000.0;
  return c;
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------
//
// {
//   "chip": {"name": "...", "t_lim": 640, "t_flop": 4.8e11, "s_cap": ...,
//            "d_cap": ..., "d_bw": ..., "power_w": ..., "price_usd": ...}
//         | {"preset": "h100"},
//   "dims": [{"topology": "ring", "size": 8, "link_bw": 2.5e10,
//             "hop_latency": 0}],
//   "assign": {"tp": 0, "pp": null, "dp": null},
//   "tech": {"memory": "ddr4", "interconnect": "pcie4"}
// }

struct SystemFile {
  SystemSpec sys;
  std::string mem_tech = "ddr4";
  std::string net_tech = "pcie4";
};

inline ChipSpec chip_from_json(const nlohmann::json& j) {
  if (j.contains("preset")) {
    std::string p = j["preset"].get<std::string>();
    ChipSpec c = (p == "sn10") ? sn10_chip() : builtin_chip(p);
    if (j.contains("d_bw")) c.d_bw = j["d_bw"].get<double>();
    if (j.contains("d_cap")) c.d_cap = j["d_cap"].get<double>();
    if (j.contains("s_cap")) c.s_cap = j["s_cap"].get<double>();
    return c;
  }
  ChipSpec c;
  c.name = j.value("name", "chip");
  c.t_lim = j.value("t_lim", 1.0);
  c.t_flop = j.value("t_flop", 0.0);
  if (j.contains("peak_flops") && !j.contains("t_flop"))
    c.t_flop = j["peak_flops"].get<double>() / c.t_lim;
  c.s_cap = j.value("s_cap", 0.0);
  c.d_cap = j.value("d_cap", 0.0);
  c.d_bw = j.value("d_bw", 0.0);
  if (j.contains("power_w")) c.power_w = j["power_w"].get<double>();
  if (j.contains("price_usd")) c.price_usd = j["price_usd"].get<double>();
  return c;
}

inline SystemFile system_from_json(const nlohmann::json& j) {
  SystemFile out;
  if (!j.contains("chip")) throw parse_error("system file: missing 'chip'");
  out.sys.chip = chip_from_json(j["chip"]);
  if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty())
    throw parse_error("system file: missing 'dims' array");
  for (const auto& jd : j["dims"]) {
    NetworkDim d;
    d.topology = topology_from_string(jd.value("topology", "ring"));
    d.size = jd.value("size", 1);
    d.link_bw = jd.value("link_bw", 0.0);
    d.hop_latency = jd.value("hop_latency", 0.0);
    out.sys.dims.push_back(d);
  }
  if (j.contains("assign")) {
    const auto& a = j["assign"];
    auto get = [&](const char* key) -> std::optional<int> {
      if (!a.contains(key) || a[key].is_null()) return std::nullopt;
      return a[key].get<int>();
    };
    out.sys.tp_dim = get("tp");
    out.sys.pp_dim = get("pp");
    out.sys.dp_dim = get("dp");
  }
  if (j.contains("tech")) {
    out.mem_tech = j["tech"].value("memory", out.mem_tech);
    out.net_tech = j["tech"].value("interconnect", out.net_tech);
  }
  validate_system(out.sys);
  // Optional declared degrees are cross-checked against the dim assignment.
  auto check_declared = [&](const char* key, int actual) {
    if (j.contains(key) && j[key].get<int>() != actual)
      throw validation_error(std::string("dim-size mismatch: declared ") + key + "=" +
                             std::to_string(j[key].get<int>()) + " but assigned dims give " +
                             std::to_string(actual));
  };
  check_declared("n_tp", out.sys.n_tp());
  check_declared("n_pp", out.sys.n_pp());
  check_declared("n_dp", out.sys.n_dp());
  return out;
}

inline SystemFile load_system(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw parse_error("cannot open system file '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("system file '" + path + "': " + e.what());
  }
  try {
    return system_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("system file '" + path + "': " + e.what());
  }
}

}  // namespace dfmap
