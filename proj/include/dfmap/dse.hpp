#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include <dfmap/collectives.hpp>
#include <dfmap/common.hpp>
#include <dfmap/graph.hpp>
#include <dfmap/interchip.hpp>
#include <dfmap/intrachip.hpp>
#include <dfmap/milp.hpp>
#include <dfmap/system.hpp>

namespace dfmap {

// ---------------------------------------------------------------------------
// Two-level pipeline: inter-chip mapping feeding per-stage intra-chip runs
// ---------------------------------------------------------------------------

struct PipelineOptions {
  InterChipOptions inter;
  IntraChipOptions intra;
  milp::SolveOptions solve;
  // Evaluate the intra level kernel-by-kernel instead of optimizing it.
  bool singleton_intra = false;
  bool run_intra = true;
};

struct PipelineResult {
  InterChipInstance inter_inst;
  InterChipMapping inter;
  std::vector<IntraChipInstance> stage_inst;  // one per pipeline stage
  std::vector<IntraChipMapping> stage_map;
  Seconds dp_time = 0;
  bool optimal = true;

  int stages() const { return int(stage_inst.size()); }
};

inline void finish_pipeline(PipelineResult& r, const PipelineOptions& opt) {
  if (opt.run_intra) {
    for (int s = 0; s < r.inter_inst.p_max; ++s) {
      IntraChipInstance inst = make_intrachip_for_stage(r.inter_inst, r.inter, s, opt.intra);
      IntraChipMapping map;
      if (inst.n() == 0) {
        map.objective = 0;
      } else if (opt.singleton_intra) {
        map = evaluate_singleton(inst);
        inst.p_max = std::max(1, inst.n());  // singleton evaluation widens stages
      } else {
        map = solve_intrachip(inst, opt.solve);
        r.optimal = r.optimal && map.optimal;
      }
      r.stage_inst.push_back(std::move(inst));
      r.stage_map.push_back(std::move(map));
    }
  }
  r.dp_time = dp_overhead(r.inter_inst.sys, mapped_param_bytes(r.inter_inst, r.inter));
}

inline PipelineResult optimize_pipeline(const DataflowGraph& g, const SystemSpec& sys,
                                        const PipelineOptions& opt = {}) {
  PipelineResult r;
  r.inter_inst = make_interchip_instance(g, sys, opt.inter);
  r.inter = solve_interchip(r.inter_inst, opt.solve);
  r.optimal = r.inter.optimal;
  finish_pipeline(r, opt);
  return r;
}

inline PipelineResult evaluate_pipeline(const DataflowGraph& g, const SystemSpec& sys,
                                        const PipelineOptions& opt,
                                        const std::vector<int>& partition,
                                        const std::vector<int>& schemes) {
  PipelineResult r;
  r.inter_inst = make_interchip_instance(g, sys, opt.inter);
  r.inter = evaluate_interchip(r.inter_inst, partition, schemes);
  finish_pipeline(r, opt);
  return r;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Regime { compute, memory, network };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::compute: return "compute";
    case Regime::memory: return "memory";
    case Regime::network: return "network";
  }
  return "?";
}

struct PerfReport {
  // Steady-state system view, from the exact schedule model.
  double throughput_flops = 0;  // useful FLOP/s across the whole system
  double utilization = 0;       // fraction of aggregate peak
  double frac_compute = 0, frac_memory = 0, frac_network = 0;
  double cost_eff = 0;   // FLOP/s per dollar
  double power_eff = 0;  // FLOP/s per watt
  // Hierarchical roofline of the binding pipeline segment (the critical
  // intra-chip partition of the bottleneck stage), per chip. Compute, DRAM
  // and network fully overlap inside one partition, so here the bottleneck
  // identity achieved = min(ceilings) is exact.
  double oi_mem = 0;   // FLOP per DRAM byte
  double oi_net = 0;   // FLOP per network byte
  double achieved_chip = 0;       // FLOP/s per chip in the binding segment
  double ceiling_compute = 0;     // segment's attainable compute throughput
  double peak_chip = 0;
  double d_bw = 0, n_bw = 0;
  Regime regime = Regime::compute;
  // Latency view.
  Seconds iter_time = 0;        // steady-state per-input bottleneck time (+DP)
  Seconds exact_latency = 0;    // max over stages of the stage schedule time
  Seconds dp_time = 0;
  int bottleneck_stage = 0;
  std::string status = "optimal";
};

struct StageAggregate {
  Seconds comp = 0, mem = 0, net = 0, p2p = 0, exact = 0;
  Flops flop_chip = 0;
  // Binding segment quantities (partition with the largest critical time, or
  // the whole stage when point-to-point transfers dominate).
  Seconds seg_comp = 0, seg_mem = 0, seg_net = 0, seg_cri = 0;
  Flops seg_flop = 0;
};

inline StageAggregate aggregate_stage(const PipelineResult& r, int s) {
  StageAggregate a;
  a.p2p = r.inter.t_p2p[size_t(s)];
  if (s < int(r.stage_inst.size()) && r.stage_inst[size_t(s)].n() > 0) {
    const auto& inst = r.stage_inst[size_t(s)];
    const auto& map = r.stage_map[size_t(s)];
    Seconds sum_cri = 0;
    size_t q_star = 0;
    for (size_t q = 0; q < map.t_cri.size(); ++q) {
      a.comp += map.t_comp[q];
      a.mem += map.t_mem[q];
      a.net += map.t_net[q];
      sum_cri += map.t_cri[q];
      if (map.t_cri[q] > map.t_cri[q_star] + 1e-18) q_star = q;
    }
    for (const auto& k : inst.kernels) a.flop_chip += k.flop;
    a.exact = std::max(sum_cri, a.p2p);
    if (a.p2p >= sum_cri) {
      // The stage waits on inter-stage transfers; the whole stage is the
      // binding segment and its network time is the p2p wire time.
      a.seg_comp = a.comp;
      a.seg_mem = a.mem;
      a.seg_net = a.p2p;
      a.seg_cri = a.p2p;
      a.seg_flop = a.flop_chip;
    } else {
      a.seg_comp = map.t_comp[q_star];
      a.seg_mem = map.t_mem[q_star];
      a.seg_net = map.t_net[q_star];
      a.seg_cri = map.t_cri[q_star];
      for (int k = 0; k < inst.n(); ++k)
        if (map.partition[size_t(k)] == int(q_star)) a.seg_flop += inst.kernels[size_t(k)].flop;
    }
  } else {
    // Inter-level only: the stage is one fused block running at chip peak
    // with its collective and point-to-point traffic overlapped.
    a.comp = r.inter.t_comp[size_t(s)];
    a.net = r.inter.t_net[size_t(s)];
    a.flop_chip = r.inter.t_comp[size_t(s)] * r.inter_inst.sys.chip.peak_flops();
    a.exact = std::max(a.comp, std::max(a.net, a.p2p));
    a.seg_comp = a.comp;
    a.seg_mem = 0;
    a.seg_net = std::max(a.net, a.p2p);
    a.seg_cri = a.exact;
    a.seg_flop = a.flop_chip;
  }
  a.net += a.p2p;
  return a;
}

// Reference link bandwidth used to express network time as wire bytes.
inline double reference_net_bw(const SystemSpec& sys) {
  if (sys.tp()) return sys.tp()->link_bw;
  if (sys.pp()) return sys.pp()->link_bw;
  if (sys.dp()) return sys.dp()->link_bw;
  return sys.dims.empty() ? 1.0 : sys.dims[0].link_bw;
}

inline PerfReport make_report(const PipelineResult& r, const TechCatalog& catalog,
                              const std::string& mem_tech, const std::string& net_tech) {
  const SystemSpec& sys = r.inter_inst.sys;
  PerfReport rep;
  rep.peak_chip = sys.chip.peak_flops();
  rep.d_bw = sys.chip.d_bw;
  rep.n_bw = reference_net_bw(sys);
  rep.dp_time = r.dp_time;
  rep.status = r.optimal ? "optimal" : "timeout_incumbent";

  const int p = r.inter_inst.p_max;
  std::vector<StageAggregate> agg;
  for (int s = 0; s < p; ++s) agg.push_back(aggregate_stage(r, s));

  int b = 0;
  for (int s = 0; s < p; ++s)
    if (agg[size_t(s)].exact > agg[size_t(b)].exact + 1e-18) b = s;
  rep.bottleneck_stage = b;
  const StageAggregate& bot = agg[size_t(b)];

  rep.exact_latency = bot.exact;
  rep.iter_time = std::max(bot.exact, 1e-30) + r.dp_time;

  // Roofline of the binding segment, per chip.
  Flops f_seg = bot.seg_flop;
  Seconds t_seg = std::max(bot.seg_cri, 1e-30);
  rep.ceiling_compute = bot.seg_comp > 0 ? f_seg / bot.seg_comp : rep.peak_chip;
  rep.ceiling_compute = std::min(rep.ceiling_compute, rep.peak_chip);
  rep.achieved_chip = f_seg / t_seg;
  rep.oi_mem = bot.seg_mem > 0 ? f_seg / (bot.seg_mem * rep.d_bw)
                               : std::numeric_limits<double>::infinity();
  rep.oi_net = bot.seg_net > 0 ? f_seg / (bot.seg_net * rep.n_bw)
                               : std::numeric_limits<double>::infinity();
  if (bot.seg_comp >= bot.seg_mem && bot.seg_comp >= bot.seg_net) rep.regime = Regime::compute;
  else if (bot.seg_mem >= bot.seg_net) rep.regime = Regime::memory;
  else rep.regime = Regime::network;

  // Useful work per iteration: the workload's FLOP (with the backward factor)
  // once per data-parallel replica. Replicated-compute schemes execute more
  // than this, which shows up as lost utilization, not extra throughput.
  double useful = r.inter_inst.g.total_flop() * r.inter_inst.flop_mult * double(sys.n_dp());
  rep.throughput_flops = useful / rep.iter_time;
  rep.utilization = rep.throughput_flops / (double(sys.total_chips()) * rep.peak_chip);

  // Time-weighted attribution of every stage's exact schedule. Stages run
  // concurrently in steady state, so each contributes its own profile.
  double wc = 0, wm = 0, wn = r.dp_time;
  for (int s = 0; s < p; ++s) {
    if (s < int(r.stage_map.size()) && r.stage_inst.size() == size_t(p) &&
        r.stage_inst[size_t(s)].n() > 0) {
      const auto& map = r.stage_map[size_t(s)];
      Seconds sum_cri = 0;
      for (size_t q = 0; q < map.t_cri.size(); ++q) {
        sum_cri += map.t_cri[q];
        if (map.t_comp[q] >= map.t_mem[q] && map.t_comp[q] >= map.t_net[q]) wc += map.t_cri[q];
        else if (map.t_mem[q] >= map.t_net[q]) wm += map.t_cri[q];
        else wn += map.t_cri[q];
      }
      if (agg[size_t(s)].p2p > sum_cri) wn += agg[size_t(s)].p2p - sum_cri;
    } else {
      if (r.inter.t_comp[size_t(s)] >= r.inter.t_net[size_t(s)] &&
          r.inter.t_comp[size_t(s)] >= r.inter.t_p2p[size_t(s)])
        wc += r.inter.t_cri[size_t(s)];
      else if (r.inter.t_net[size_t(s)] >= r.inter.t_p2p[size_t(s)])
        wn += r.inter.t_cri[size_t(s)];
      else
        wn += r.inter.t_cri[size_t(s)];
    }
  }
  double wsum = wc + wm + wn;
  if (wsum <= 0) {
    rep.frac_compute = 1;
  } else {
    rep.frac_compute = wc / wsum;
    rep.frac_memory = wm / wsum;
    rep.frac_network = wn / wsum;
  }

  CostPower cp = system_cost_power(sys, catalog, mem_tech, net_tech);
  rep.cost_eff = cp.price_usd > 0 ? rep.throughput_flops / cp.price_usd : 0;
  rep.power_eff = cp.power_w > 0 ? rep.throughput_flops / cp.power_w : 0;
  return rep;
}

// Roofline record: recomputes min(ceilings) from the report's operational
// intensities and checks it against the model's achieved throughput. A
// mismatch means the bookkeeping broke, so it throws.
struct RooflineRecord {
  double achieved = 0;
  double compute_ceiling = 0, memory_ceiling = 0, network_ceiling = 0;
  Regime regime = Regime::compute;
};

inline RooflineRecord roofline(const PerfReport& rep) {
  RooflineRecord rec;
  rec.compute_ceiling = std::min(rep.peak_chip, rep.ceiling_compute);
  rec.memory_ceiling = rep.oi_mem * rep.d_bw;
  rec.network_ceiling = rep.oi_net * rep.n_bw;
  rec.achieved = std::min(rec.compute_ceiling, std::min(rec.memory_ceiling, rec.network_ceiling));
  // Tie order matches the report convention: compute, then memory.
  if (rec.compute_ceiling <= rec.memory_ceiling && rec.compute_ceiling <= rec.network_ceiling)
    rec.regime = Regime::compute;
  else if (rec.memory_ceiling <= rec.network_ceiling)
    rec.regime = Regime::memory;
  else
    rec.regime = Regime::network;
  double err = std::abs(rec.achieved - rep.achieved_chip) /
               std::max(1.0, std::abs(rep.achieved_chip));
  if (err > 1e-6)
    throw internal_error("roofline consistency violation: min-of-ceilings " +
                         std::to_string(rec.achieved) + " vs achieved " +
                         std::to_string(rep.achieved_chip));
  return rec;
}

// ---------------------------------------------------------------------------
// Topology presets
// ---------------------------------------------------------------------------

// Factor n into `parts` factors, as balanced as possible, sizes descending.
inline std::vector<int> balanced_factorization(int n, int parts) {
  std::vector<int> out(size_t(parts), 1);
  // Prime factors, largest first, onto the currently smallest bucket.
  std::vector<int> primes;
  int x = n;
  for (int d = 2; d * d <= x; ++d)
    while (x % d == 0) {
      primes.push_back(d);
      x /= d;
    }
  if (x > 1) primes.push_back(x);
  std::sort(primes.rbegin(), primes.rend());
  for (int f : primes) {
    auto it = std::min_element(out.begin(), out.end());
    *it *= f;
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

inline std::vector<NetworkDim> topology_presets(const std::string& name, int chips,
                                                double link_bw, Seconds hop_latency = 0) {
  auto dims_of = [&](Topology t, const std::vector<int>& sizes) {
    std::vector<NetworkDim> v;
    for (int s : sizes) v.push_back(NetworkDim{t, s, link_bw, hop_latency});
    return v;
  };
  if (name == "2d_torus") return dims_of(Topology::ring, balanced_factorization(chips, 2));
  if (name == "3d_torus") return dims_of(Topology::ring, balanced_factorization(chips, 3));
  if (name == "dragonfly")
    return dims_of(Topology::fully_connected, balanced_factorization(chips, 2));
  if (name == "dgx1" || name == "dgx2") {
    int node = name == "dgx1" ? 8 : 16;
    if (chips % node != 0)
      throw validation_error("topology '" + name + "' needs a multiple of " +
                             std::to_string(node) + " chips, got " + std::to_string(chips));
    std::vector<NetworkDim> v = dims_of(Topology::switched, {node});
    if (chips / node > 1)
      v.push_back(NetworkDim{Topology::switched, chips / node, link_bw, hop_latency});
    return v;
  }
  throw validation_error("unknown topology preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Design points and sweeps
// ---------------------------------------------------------------------------

struct WorkloadSpec {
  std::string name = "gpt";
  nlohmann::json params;  // generator parameters
  bool training = true;

  DataflowGraph generate() const {
    auto geti = [&](const char* key, std::int64_t dflt) -> std::int64_t {
      return params.contains(key) ? params[key].get<std::int64_t>() : dflt;
    };
    if (name == "gpt") {
      GptParams p;
      p.batch = geti("batch", 1);
      p.seq = geti("seq", 2048);
      p.hidden = geti("hidden", 12288);
      p.heads = geti("heads", 96);
      p.ffn_mult = geti("ffn_mult", 4);
      return generate_gpt_layer(p);
    }
    if (name == "dlrm") {
      DlrmParams p;
      p.tables = geti("tables", 8);
      p.emb_dim = geti("emb_dim", 128);
      p.batch = geti("batch", 1024);
      if (params.contains("mlp_dims")) {
        p.mlp_dims.clear();
        for (const auto& d : params["mlp_dims"]) p.mlp_dims.push_back(d.get<std::int64_t>());
      }
      return generate_dlrm(p);
    }
    if (name == "hpl") {
      HplParams p;
      p.n = geti("n", 4096);
      p.block = geti("block", 1024);
      return generate_hpl(p);
    }
    if (name == "fft") {
      FftParams p;
      p.points = geti("points", 1 << 20);
      p.radix = geti("radix", 2);
      return generate_fft(p);
    }
    throw validation_error("unknown workload '" + name + "'");
  }
};

struct DesignPoint {
  WorkloadSpec workload;
  std::string chip;      // builtin chip name
  std::string topology;  // preset name
  std::string mem_tech;
  std::string net_tech;
  int chips_total = 1024;
  double solve_timeout_s = 30.0;
};

struct PointResult {
  PerfReport report;
  int n_tp = 1, n_pp = 1, n_dp = 1;
  std::string error;  // empty on success
};

// Every assignment of the dims to distinct parallelism roles.
inline std::vector<std::array<std::optional<int>, 3>> role_assignments(int ndims) {
  std::vector<std::array<std::optional<int>, 3>> out;
  // roles: 0 = tp, 1 = pp, 2 = dp
  std::vector<int> roles(size_t(ndims), 0);
  std::function<void(int, int)> rec = [&](int d, int used_mask) {
    if (d == ndims) {
      std::array<std::optional<int>, 3> a{};
      for (int i = 0; i < ndims; ++i) a[size_t(roles[size_t(i)])] = i;
      out.push_back(a);
      return;
    }
    for (int role = 0; role < 3; ++role) {
      if (used_mask & (1 << role)) continue;
      roles[size_t(d)] = role;
      rec(d + 1, used_mask | (1 << role));
    }
  };
  if (ndims > 3) throw validation_error("at most three network dims are supported");
  rec(0, 0);
  return out;
}

inline PointResult run_point(const DesignPoint& dp, const TechCatalog& catalog) {
  PointResult out;
  try {
    DataflowGraph g = dp.workload.generate();
    const MemoryTech& mem = catalog.mem(dp.mem_tech);
    const InterconnectTech& net = catalog.net(dp.net_tech);
    ChipSpec chip = (dp.chip == "sn10") ? sn10_chip() : builtin_chip(dp.chip);
    chip.d_bw = mem.bandwidth;
    std::vector<NetworkDim> dims = topology_presets(dp.topology, dp.chips_total, net.bandwidth);

    PipelineOptions popt;
    popt.inter.include_backward = dp.workload.training;
    popt.solve.timeout_s = dp.solve_timeout_s;

    std::optional<PointResult> best;
    for (const auto& roles : role_assignments(int(dims.size()))) {
      SystemSpec sys;
      sys.chip = chip;
      sys.dims = dims;
      sys.tp_dim = roles[0];
      sys.pp_dim = roles[1];
      sys.dp_dim = roles[2];
      validate_system(sys);
      try {
        PipelineResult r = optimize_pipeline(g, sys, popt);
        PerfReport rep = make_report(r, catalog, dp.mem_tech, dp.net_tech);
        roofline(rep);  // consistency gate on every produced report
        if (!best || rep.throughput_flops > best->report.throughput_flops + 1e-6) {
          PointResult cand;
          cand.report = rep;
          cand.n_tp = sys.n_tp();
          cand.n_pp = sys.n_pp();
          cand.n_dp = sys.n_dp();
          best = cand;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::infeasible) throw;
        // Infeasible parallelism candidates are skipped, not fatal.
      }
    }
    if (!best) {
      out.error = "infeasible";
      out.report.status = "infeasible";
      return out;
    }
    out = *best;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.report.status = "error";
  }
  return out;
}

inline std::vector<PointResult> run_sweep(const std::vector<DesignPoint>& grid,
                                          const TechCatalog& catalog, int workers = 1) {
  std::vector<PointResult> results(grid.size());
  if (workers <= 1) {
    for (size_t i = 0; i < grid.size(); ++i) results[i] = run_point(grid[i], catalog);
    return results;
  }
  std::mutex mu;
  size_t next = 0;
  auto worker = [&] {
    for (;;) {
      size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= grid.size()) return;
        idx = next++;
      }
      results[idx] = run_point(grid[idx], catalog);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string sweep_csv_header() {
  return "workload,chip,topology,mem_tech,net_tech,n_tp,n_pp,n_dp,throughput_flops,"
         "utilization,frac_compute,frac_memory,frac_network,cost_eff,power_eff,oi_mem,oi_net,"
         "status";
}

inline std::string csv_num(double v) {
  std::ostringstream os;
  if (std::isinf(v)) return "inf";
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::string sweep_csv_row(const DesignPoint& dp, const PointResult& pr) {
  std::ostringstream os;
  std::string status = pr.error.empty() ? pr.report.status : "error: " + pr.error;
  for (char& c : status) {
    if (c == ',' || c == '\n') c = ';';
  }
  os << dp.workload.name << "," << dp.chip << "," << dp.topology << "," << dp.mem_tech << ","
     << dp.net_tech << "," << pr.n_tp << "," << pr.n_pp << "," << pr.n_dp << ","
     << csv_num(pr.report.throughput_flops) << "," << csv_num(pr.report.utilization) << ","
     << csv_num(pr.report.frac_compute) << "," << csv_num(pr.report.frac_memory) << ","
     << csv_num(pr.report.frac_network) << "," << csv_num(pr.report.cost_eff) << ","
     << csv_num(pr.report.power_eff) << "," << csv_num(pr.report.oi_mem) << ","
     << csv_num(pr.report.oi_net) << "," << status;
  return os.str();
}

// ---------------------------------------------------------------------------
// Grid file
// ---------------------------------------------------------------------------
//
// Either an explicit {"points": [...]} list or a cartesian product spec:
// {"workloads": [{...}], "chips": [...], "topologies": [...],
//  "techs": [{"memory": ..., "interconnect": ...}], "chips_total": 1024}

// Evaluate a complete mapping file: inter-chip partitions/schemes plus either
// explicit per-stage intra sections, the "singleton" baseline keyword, or no
// intra detail at all (inter-level evaluation only).
inline PipelineResult evaluate_full_mapping(const DataflowGraph& g, const SystemSpec& sys,
                                            PipelineOptions opt, const nlohmann::json& jmap) {
  if (!jmap.contains("partitions") || !jmap["partitions"].is_array() || jmap["partitions"].empty())
    throw parse_error("mapping file: missing 'partitions'");
  opt.inter.p_max = int(jmap["partitions"].size());
  PipelineResult r;
  r.inter_inst = make_interchip_instance(g, sys, opt.inter);
  std::vector<int> part, schemes;
  inter_mapping_from_json(r.inter_inst, jmap, part, schemes);
  r.inter = evaluate_interchip(r.inter_inst, part, schemes);

  bool singleton = jmap.contains("intra") && jmap["intra"].is_string() &&
                   jmap["intra"].get<std::string>() == "singleton";
  bool explicit_intra = jmap.contains("intra") && jmap["intra"].is_array();
  if (singleton || explicit_intra) {
    for (int s = 0; s < r.inter_inst.p_max; ++s) {
      const nlohmann::json* section = nullptr;
      if (explicit_intra)
        for (const auto& js : jmap["intra"])
          if (js.value("stage", -1) == s) section = &js;
      IntraChipOptions iopt = opt.intra;
      if (section && section->contains("partitions"))
        iopt.p_max = int((*section)["partitions"].size());
      IntraChipInstance inst = make_intrachip_for_stage(r.inter_inst, r.inter, s, iopt);
      IntraChipMapping map;
      if (inst.n() == 0) {
        map.objective = 0;
      } else if (section) {
        std::vector<int> ipart(size_t(inst.n()), -1);
        std::vector<int> tiles(size_t(inst.n()), 1);
        auto local_id = [&](const std::string& name) {
          for (int k = 0; k < inst.n(); ++k)
            if (inst.kernels[size_t(k)].name == name) return k;
          throw validation_error("mapping file: kernel '" + name + "' is not in stage " +
                                 std::to_string(s));
        };
        int q = 0;
        for (const auto& jp : (*section)["partitions"]) {
          for (const auto& jk : jp) ipart[size_t(local_id(jk.get<std::string>()))] = q;
          ++q;
        }
        for (int k = 0; k < inst.n(); ++k)
          if (ipart[size_t(k)] < 0)
            throw validation_error("mapping file: kernel '" + inst.kernels[size_t(k)].name +
                                   "' missing from stage " + std::to_string(s) + " partitions");
        if (section->contains("tiles"))
          for (auto& [name, count] : (*section)["tiles"].items())
            tiles[size_t(local_id(name))] = count.get<int>();
        map = evaluate_intrachip(inst, ipart, tiles);
      } else {
        map = evaluate_singleton(inst);
        inst.p_max = std::max(1, inst.n());
      }
      r.stage_inst.push_back(std::move(inst));
      r.stage_map.push_back(std::move(map));
    }
  }
  r.dp_time = dp_overhead(sys, mapped_param_bytes(r.inter_inst, r.inter));
  return r;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const PipelineResult& r, const PerfReport& rep) {
  nlohmann::json j;
  j["status"] = rep.status;
  j["objective_s"] = rep.exact_latency;
  j["iter_time_s"] = rep.iter_time;
  j["dp_time_s"] = rep.dp_time;
  j["throughput_flops"] = rep.throughput_flops;
  j["utilization"] = rep.utilization;
  j["breakdown"] = {{"compute", rep.frac_compute},
                    {"memory", rep.frac_memory},
                    {"network", rep.frac_network}};
  j["cost_eff_flops_per_usd"] = rep.cost_eff;
  j["power_eff_flops_per_w"] = rep.power_eff;
  j["roofline"] = {{"oi_mem", std::isinf(rep.oi_mem) ? -1.0 : rep.oi_mem},
                   {"oi_net", std::isinf(rep.oi_net) ? -1.0 : rep.oi_net},
                   {"achieved_chip_flops", rep.achieved_chip},
                   {"ceiling_compute_flops", rep.ceiling_compute},
                   {"peak_chip_flops", rep.peak_chip},
                   {"d_bw", rep.d_bw},
                   {"n_bw", rep.n_bw},
                   {"regime", to_string(rep.regime)},
                   {"bottleneck_stage", rep.bottleneck_stage}};
  j["stages"] = nlohmann::json::array();
  for (int s = 0; s < r.inter_inst.p_max; ++s) {
    nlohmann::json js;
    js["stage"] = s;
    js["t_comp_s"] = r.inter.t_comp[size_t(s)];
    js["t_net_s"] = r.inter.t_net[size_t(s)];
    js["t_p2p_s"] = r.inter.t_p2p[size_t(s)];
    js["t_cri_s"] = r.inter.t_cri[size_t(s)];
    js["kernels"] = nlohmann::json::array();
    for (int k = 0; k < r.inter_inst.n(); ++k)
      if (r.inter.partition[size_t(k)] == s)
        js["kernels"].push_back(r.inter_inst.g.kernels[size_t(k)].name);
    if (s < int(r.stage_map.size()) && r.stage_inst[size_t(s)].n() > 0) {
      const auto& inst = r.stage_inst[size_t(s)];
      const auto& map = r.stage_map[size_t(s)];
      js["intra"] = nlohmann::json::array();
      for (size_t q = 0; q < map.t_cri.size(); ++q) {
        nlohmann::json jq;
        jq["partition"] = q;
        jq["t_comp_s"] = map.t_comp[q];
        jq["t_mem_s"] = map.t_mem[q];
        jq["t_net_s"] = map.t_net[q];
        jq["t_cri_s"] = map.t_cri[q];
        jq["sram_used_bytes"] = map.sram_used[q];
        jq["dram_used_bytes"] = map.dram_used[q];
        jq["kernels"] = nlohmann::json::object();
        for (int k = 0; k < inst.n(); ++k)
          if (map.partition[size_t(k)] == int(q))
            jq["kernels"][inst.kernels[size_t(k)].name] = map.tiles[size_t(k)];
        if (!jq["kernels"].empty()) js["intra"].push_back(jq);
      }
    }
    j["stages"].push_back(js);
  }
  return j;
}

inline std::string seconds_str(Seconds s) {
  std::ostringstream os;
  os << std::setprecision(4);
  if (s >= 1.0) os << s << " s";
  else if (s >= 1e-3) os << s * 1e3 << " ms";
  else if (s >= 1e-6) os << s * 1e6 << " us";
  else os << s * 1e9 << " ns";
  return os.str();
}

inline std::string report_to_text(const PipelineResult& r, const PerfReport& rep) {
  std::ostringstream os;
  os << "status:        " << rep.status << "\n";
  os << "objective:     " << seconds_str(rep.exact_latency) << " per input (pipeline bottleneck)\n";
  os << "iteration:     " << seconds_str(rep.iter_time) << " steady state";
  if (rep.dp_time > 0) os << " (incl. " << seconds_str(rep.dp_time) << " DP all-reduce)";
  os << "\n";
  os << "throughput:    " << rep.throughput_flops / 1e12 << " TFLOP/s system\n";
  os << "utilization:   " << rep.utilization * 100.0 << " %\n";
  os << "breakdown:     compute " << rep.frac_compute * 100.0 << " % | memory "
     << rep.frac_memory * 100.0 << " % | network " << rep.frac_network * 100.0 << " %\n";
  os << "roofline:      oi_mem " << rep.oi_mem << " FLOP/B, oi_net " << rep.oi_net
     << " FLOP/B, " << to_string(rep.regime) << "-bound at "
     << rep.achieved_chip / 1e12 << " TFLOP/s per chip\n";
  os << "efficiency:    " << rep.cost_eff / 1e9 << " GFLOP/s/$ | " << rep.power_eff / 1e9
     << " GFLOP/s/W\n";
  for (int s = 0; s < r.inter_inst.p_max; ++s) {
    os << "stage " << s << ":  comp " << seconds_str(r.inter.t_comp[size_t(s)]) << ", net "
       << seconds_str(r.inter.t_net[size_t(s)]) << ", p2p "
       << seconds_str(r.inter.t_p2p[size_t(s)]) << "\n";
    if (s < int(r.stage_map.size()) && r.stage_inst[size_t(s)].n() > 0) {
      const auto& inst = r.stage_inst[size_t(s)];
      const auto& map = r.stage_map[size_t(s)];
      for (size_t q = 0; q < map.t_cri.size(); ++q) {
        std::string names;
        for (int k = 0; k < inst.n(); ++k)
          if (map.partition[size_t(k)] == int(q)) {
            if (!names.empty()) names += ",";
            names += inst.kernels[size_t(k)].name;
          }
        if (names.empty()) continue;
        const char* binding = map.t_comp[q] >= map.t_mem[q] && map.t_comp[q] >= map.t_net[q]
                                  ? "compute"
                              : map.t_mem[q] >= map.t_net[q] ? "memory" : "network";
        os << "  part " << q << " {" << names << "}: cri " << seconds_str(map.t_cri[q]) << " ("
           << binding << "), sram " << map.sram_used[q] / kMB << " MB\n";
      }
    }
  }
  return os.str();
}

// Full mapping file: inter-chip partitions and schemes, plus per-stage
// intra-chip partitions and tile counts keyed by kernel name.
inline nlohmann::json full_mapping_to_json(const PipelineResult& r) {
  nlohmann::json j = inter_mapping_to_json(r.inter_inst, r.inter);
  if (!r.stage_map.empty()) {
    j["intra"] = nlohmann::json::array();
    for (int s = 0; s < int(r.stage_map.size()); ++s) {
      const auto& inst = r.stage_inst[size_t(s)];
      const auto& map = r.stage_map[size_t(s)];
      if (inst.n() == 0) continue;
      nlohmann::json js;
      js["stage"] = s;
      js["partitions"] = nlohmann::json::array();
      int used = 0;
      for (int k = 0; k < inst.n(); ++k) used = std::max(used, map.partition[size_t(k)] + 1);
      for (int q = 0; q < used; ++q) {
        nlohmann::json part = nlohmann::json::array();
        for (int k = 0; k < inst.n(); ++k)
          if (map.partition[size_t(k)] == q) part.push_back(inst.kernels[size_t(k)].name);
        js["partitions"].push_back(part);
      }
      js["tiles"] = nlohmann::json::object();
      for (int k = 0; k < inst.n(); ++k)
        js["tiles"][inst.kernels[size_t(k)].name] = map.tiles[size_t(k)];
      j["intra"].push_back(js);
    }
  }
  return j;
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j) {
  WorkloadSpec w;
  if (j.is_string()) {
    w.name = j.get<std::string>();
    w.training = w.name == "gpt" || w.name == "dlrm";
    return w;
  }
  w.name = j.value("kind", "gpt");
  w.params = j.contains("params") ? j["params"] : nlohmann::json::object();
  w.training = j.value("training", w.name == "gpt" || w.name == "dlrm");
  return w;
}

inline std::vector<DesignPoint> grid_from_json(const nlohmann::json& j) {
  std::vector<DesignPoint> grid;
  int chips_total = j.value("chips_total", 1024);
  double timeout = j.value("solve_timeout_s", 30.0);
  if (j.contains("points")) {
    for (const auto& jp : j["points"]) {
      DesignPoint dp;
      dp.workload = workload_from_json(jp.value("workload", nlohmann::json("gpt")));
      dp.chip = jp.value("chip", "h100");
      dp.topology = jp.value("topology", "2d_torus");
      dp.mem_tech = jp.value("mem_tech", "ddr4");
      dp.net_tech = jp.value("net_tech", "pcie4");
      dp.chips_total = jp.value("chips_total", chips_total);
      dp.solve_timeout_s = jp.value("solve_timeout_s", timeout);
      grid.push_back(dp);
    }
    return grid;
  }
  std::vector<WorkloadSpec> workloads;
  if (j.contains("workloads"))
    for (const auto& jw : j["workloads"]) workloads.push_back(workload_from_json(jw));
  else
    workloads.push_back(WorkloadSpec{});
  std::vector<std::string> chips = j.value("chips", std::vector<std::string>{"h100"});
  std::vector<std::string> topologies =
      j.value("topologies", std::vector<std::string>{"2d_torus"});
  struct TechPair {
    std::string mem, net;
  };
  std::vector<TechPair> techs;
  if (j.contains("techs"))
    for (const auto& jt : j["techs"])
      techs.push_back({jt.value("memory", "ddr4"), jt.value("interconnect", "pcie4")});
  else
    techs.push_back({"ddr4", "pcie4"});
  for (const auto& w : workloads)
    for (const auto& c : chips)
      for (const auto& t : topologies)
        for (const auto& tech : techs) {
          DesignPoint dp;
          dp.workload = w;
          dp.chip = c;
          dp.topology = t;
          dp.mem_tech = tech.mem;
          dp.net_tech = tech.net;
          dp.chips_total = chips_total;
          dp.solve_timeout_s = timeout;
          grid.push_back(dp);
        }
  return grid;
}

}  // namespace dfmap
