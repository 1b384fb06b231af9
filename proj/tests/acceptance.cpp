// Acceptance suite: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line. Returns the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <dfmap/dse.hpp>
#include <dfmap/oracle.hpp>

#include "instance_gen.hpp"

using namespace dfmap;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::vector<Criterion> g_results;

void report(Criterion& c, double seconds) {
  std::printf("[%s] criterion %d: %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
              seconds);
  for (const auto& n : c.notes) std::printf("        %s\n", n.c_str());
  g_results.push_back(c);
}

template <typename Fn>
void run_criterion(int id, const std::string& title, Fn&& fn) {
  Criterion c{id, title};
  std::printf("... criterion %d running\n", id);
  std::fflush(stdout);
  auto t0 = Clock::now();
  try {
    fn(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  report(c, std::chrono::duration<double>(Clock::now() - t0).count());
  std::fflush(stdout);
}

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1e-300, std::abs(a), std::abs(b)});
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Shared configuration for the GPT case studies: one GPT3 175B layer on
// eight SN10-class accelerators (307.2 TFLOPS, 320 MB SRAM, 200 GB/s DDR,
// 25 GB/s interconnect).
DataflowGraph gpt3_layer() { return generate_gpt_layer(GptParams{1, 2048, 12288, 96, 4}); }

SystemSpec sn10_ring8() {
  SystemSpec sys;
  sys.chip = sn10_chip();
  sys.dims = {NetworkDim{Topology::ring, 8, 25e9, 0}};
  sys.tp_dim = 0;
  return sys;
}

SystemSpec sn10_torus4x2() {
  SystemSpec sys;
  sys.chip = sn10_chip();
  sys.dims = {NetworkDim{Topology::ring, 4, 25e9, 0}, NetworkDim{Topology::ring, 2, 25e9, 0}};
  sys.tp_dim = 0;
  sys.pp_dim = 1;
  return sys;
}

// Reports produced anywhere in this suite; criterion 6 re-checks all of them.
std::vector<PerfReport> g_reports;

PerfReport checked_report(const PipelineResult& r) {
  PerfReport rep = make_report(r, default_tech_catalog(), "ddr4", "pcie4");
  g_reports.push_back(rep);
  return rep;
}

// ---------------------------------------------------------------------------

void criterion1(Criterion& c) {
  testgen::Lcg rng(20240809);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + rng.pick(9);   // <= 10 kernels
    int p = 1 + rng.pick(5);   // <= 5 partitions
    std::vector<int> part(size_t(n), 0);
    for (int i = 0; i < n; ++i) part[size_t(i)] = rng.pick(p);
    std::vector<TensorEdge> ts;
    int m = 1 + rng.pick(19);
    for (int j = 0; j < m; ++j) {
      int a = rng.pick(n), b = rng.pick(n);
      if (a == b) continue;
      if (part[size_t(a)] > part[size_t(b)]) std::swap(a, b);
      ts.push_back(TensorEdge{int(ts.size()), a, b, 1.0});
    }
    auto mats = AssignmentMatrices::from_partition(part, p, ts);
    validate_matrices(mats, ts);
    for (size_t j = 0; j < ts.size(); ++j) {
      int src = ts[j].src, dst = ts[j].dst;
      for (int k = 0; k < p; ++k) {
        std::uint8_t a_s = mats.A[size_t(src)][size_t(k)];
        std::uint8_t a_d = mats.A[size_t(dst)][size_t(k)];
        c.expect(mats.B[j][size_t(k)] == (a_s & a_d), "B != AND");
        c.expect(mats.D[j][size_t(k)] == (a_s ^ a_d), "D != XOR");
        c.expect(mats.H[j][size_t(k)] == a_s, "H != source row");
        // Literal Eq. 3 with materialized triangular matrices.
        int us = 0, ut = 0;
        for (int i = 0; i <= k; ++i) us += mats.A[size_t(src)][size_t(i)];
        for (int i = 0; i < k; ++i) ut += mats.A[size_t(dst)][size_t(i)];
        std::uint8_t want = std::uint8_t(((us & 1) ^ (ut & 1)) ^ (a_s & a_d));
        c.expect(mats.L[j][size_t(k)] == want, "L != triangular recomputation");
      }
      ++checked;
    }
  }
  // Worked example: src partition 0, dst partition 2, four partitions.
  auto m = AssignmentMatrices::from_partition({0, 2}, 4, {TensorEdge{0, 0, 1, 1.0}});
  c.expect(m.L[0] == std::vector<std::uint8_t>{1, 1, 1, 0}, "worked lifetime example");
  c.note("checked " + std::to_string(checked) + " tensors across 1000 instances");
}

void criterion2(Criterion& c) {
  int inter_done = 0;
  double max_rel = 0;
  for (std::uint64_t seed = 0; inter_done < 50; ++seed) {
    testgen::Lcg rng(seed);
    DataflowGraph g = testgen::random_graph(rng, 6, 2);
    SystemSpec sys = testgen::random_system(rng, 3);
    InterChipInstance inst = make_interchip_instance(g, sys);
    OracleResult want = enumerate_interchip(inst);
    InterChipMapping got = solve_interchip(inst);
    double rel = std::abs(got.objective - want.objective) /
                 std::max(1e-300, std::abs(want.objective));
    max_rel = std::max(max_rel, rel);
    c.expect(rel <= 1e-9, "inter seed " + std::to_string(seed) + ": solver " +
                              fmt(got.objective) + " vs oracle " + fmt(want.objective));
    ++inter_done;
  }
  int intra_done = 0;
  for (std::uint64_t seed = 1000; intra_done < 50; ++seed) {
    testgen::Lcg rng(seed);
    IntraChipInstance inst = testgen::random_intra_instance(rng);
    OracleResult want;
    try {
      want = enumerate_intrachip(inst);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::infeasible) continue;
      throw;
    }
    IntraChipMapping got = solve_intrachip(inst);
    double rel = std::abs(got.objective - want.objective) /
                 std::max(1e-300, std::abs(want.objective));
    max_rel = std::max(max_rel, rel);
    c.expect(rel <= 1e-9, "intra seed " + std::to_string(seed) + ": solver " +
                              fmt(got.objective) + " vs oracle " + fmt(want.objective));
    ++intra_done;
  }
  c.note("50 inter + 50 intra instances, max relative gap " + fmt(max_rel));
}

void criterion3(Criterion& c) {
  DataflowGraph g = gpt3_layer();
  SystemSpec sys = sn10_ring8();
  InterChipOptions opt;
  opt.include_backward = true;  // 2x forward FLOP, mirrored collectives
  InterChipInstance inst = make_interchip_instance(g, sys, opt);
  InterChipMapping m = solve_interchip(inst);
  int ars = count_all_reduces(inst, m);
  c.expect(ars == 4, "expected exactly 4 all-reduces, got " + std::to_string(ars));
  int fwd = 0;
  for (int k = 0; k < inst.n(); ++k) {
    const auto& s = inst.schemes[size_t(k)][size_t(m.scheme_choice[size_t(k)])];
    if (s.inherent && *s.inherent == CollectiveKind::all_reduce) ++fwd;
  }
  c.expect(fwd == 2, "expected 2 forward all-reduces, got " + std::to_string(fwd));
  c.note("chosen schemes incur " + std::to_string(fwd) + " forward all-reduces, " +
         std::to_string(ars) + " per iteration with the backward mirror");
}

// Shared machinery for criteria 4 and 5.
struct GptCasePoint {
  PipelineResult result;
  PerfReport report;
};

GptCasePoint optimize_case(const DataflowGraph& g, const SystemSpec& sys, bool singleton) {
  PipelineOptions popt;
  popt.inter.include_backward = false;
  popt.intra.p_max = 10;
  popt.singleton_intra = singleton;
  GptCasePoint pt;
  if (singleton) {
    // Same inter-chip decision problem; the intra level is evaluated
    // kernel-by-kernel instead of optimized.
    pt.result.inter_inst = make_interchip_instance(g, sys, popt.inter);
    pt.result.inter = solve_interchip(pt.result.inter_inst, popt.solve);
    finish_pipeline(pt.result, popt);
  } else {
    pt.result = optimize_pipeline(g, sys, popt);
  }
  pt.report = checked_report(pt.result);
  return pt;
}

void criterion4(Criterion& c) {
  // SRAM-capacity x DRAM-bandwidth sweep of a 300 TFLOPS accelerator, eight
  // chips in a 4x2 torus, one GPT3-175B-class layer (desk-scale sequence).
  DataflowGraph g = generate_gpt_layer(GptParams{1, 1024, 12288, 96, 4});
  const double srams[] = {150e6, 300e6, 500e6};
  const double dbws[] = {100e9, 300e9, 600e9};
  double max_ratio = 0;
  std::map<std::pair<int, int>, double> df, ndf;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      SystemSpec sys = sn10_torus4x2();
      sys.chip.name = "sweep300";
      sys.chip.t_lim = 640;
      sys.chip.t_flop = 300e12 / 640;
      sys.chip.s_cap = srams[i];
      sys.chip.d_bw = dbws[j];
      GptCasePoint opt = optimize_case(g, sys, false);
      GptCasePoint single = optimize_case(g, sys, true);
      double r = opt.report.throughput_flops / single.report.throughput_flops;
      df[{i, j}] = opt.report.throughput_flops;
      ndf[{i, j}] = single.report.throughput_flops;
      c.expect(r >= 1.0 - 1e-9, "dataflow below non-dataflow at sram=" + fmt(srams[i]) +
                                    " dbw=" + fmt(dbws[j]) + " (ratio " + fmt(r) + ")");
      max_ratio = std::max(max_ratio, r);
    }
  }
  c.expect(max_ratio >= 1.2 && max_ratio <= 2.2,
           "max dataflow/non-dataflow ratio " + fmt(max_ratio) + " outside [1.2, 2.2]");
  for (int j = 0; j < 3; ++j)
    for (int i = 1; i < 3; ++i)
      c.expect(df[{i, j}] >= df[{i - 1, j}] * (1 - 1e-9),
               "dataflow throughput decreased with SRAM at dbw index " + std::to_string(j));
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j < 3; ++j)
      c.expect(ndf[{i, j}] >= ndf[{i, j - 1}] * (1 - 1e-9),
               "non-dataflow throughput decreased with DRAM bw at sram index " + std::to_string(i));
  c.note("max dataflow speedup over kernel-by-kernel: " + fmt(max_ratio) + "x");
}

void criterion5(Criterion& c) {
  DataflowGraph g = gpt3_layer();
  SystemSpec ring = sn10_ring8();

  // DFModel-style optimized mapping on the ring.
  GptCasePoint opt_ring = optimize_case(g, ring, false);

  // Vendor-provided four-partition mapping and the kernel-by-kernel baseline,
  // both evaluated from their bundled mapping files.
  const char* cfg = std::getenv("DFMAP_CONFIG_DIR");
  std::string dir = cfg ? cfg : "configs";
  PipelineOptions popt;
  auto eval_file = [&](const std::string& name) {
    std::ifstream f(dir + "/" + name);
    if (!f) throw parse_error("cannot open " + dir + "/" + name);
    nlohmann::json j;
    f >> j;
    return evaluate_full_mapping(g, ring, popt, j);
  };
  PipelineResult vendor = eval_file("gpt3_vendor_mapping.json");
  PipelineResult nondf = eval_file("gpt3_nondataflow_mapping.json");
  PerfReport vendor_rep = checked_report(vendor);
  PerfReport nondf_rep = checked_report(nondf);

  double t_nd = nondf_rep.exact_latency;
  double t_vendor = vendor_rep.exact_latency;
  double t_opt = opt_ring.report.exact_latency;
  c.expect(t_nd >= t_vendor * (1 - 1e-9),
           "non-dataflow (" + fmt(t_nd) + ") faster than vendor (" + fmt(t_vendor) + ")");
  c.expect(t_vendor >= t_opt * (1 - 1e-9),
           "vendor (" + fmt(t_vendor) + ") faster than optimized (" + fmt(t_opt) + ")");

  // The optimizer overlaps the network-heavy Proj with the compute-heavy FFN0.
  bool colocated = false;
  for (int s = 0; s < opt_ring.result.stages(); ++s) {
    const auto& inst = opt_ring.result.stage_inst[size_t(s)];
    const auto& map = opt_ring.result.stage_map[size_t(s)];
    int proj = -1, ffn0 = -1;
    for (int k = 0; k < inst.n(); ++k) {
      if (inst.kernels[size_t(k)].name == "Proj") proj = k;
      if (inst.kernels[size_t(k)].name == "FFN0") ffn0 = k;
    }
    if (proj >= 0 && ffn0 >= 0 && map.partition[size_t(proj)] == map.partition[size_t(ffn0)])
      colocated = true;
  }
  c.expect(colocated, "Proj and FFN0 not co-located in the optimized mapping");

  // Moving from the 8x1 ring to a 4x2 torus raises throughput.
  GptCasePoint opt_torus = optimize_case(g, sn10_torus4x2(), false);
  c.expect(opt_torus.report.throughput_flops >= opt_ring.report.throughput_flops * (1 - 1e-9),
           "4x2 torus (" + fmt(opt_torus.report.throughput_flops) + ") slower than 8x1 ring (" +
               fmt(opt_ring.report.throughput_flops) + ")");

  c.note("speedup table (modeled; the literature's exact ratios are not reproduction targets):");
  c.note("  non-dataflow -> vendor:      " + fmt(t_nd / t_vendor) + "x");
  c.note("  vendor -> optimized:         " + fmt(t_vendor / t_opt) + "x");
  c.note("  accumulated on 8x1 ring:     " + fmt(t_nd / t_opt) + "x");
  c.note("  8x1 ring -> 4x2 torus:       " +
         fmt(opt_torus.report.throughput_flops / opt_ring.report.throughput_flops) + "x");
}

void criterion6(Criterion& c) {
  // Every report the suite produced must sit exactly on its roofline.
  int checked = 0;
  for (const auto& rep : g_reports) {
    try {
      RooflineRecord rec = roofline(rep);
      c.expect(close(rec.achieved, rep.achieved_chip, 1e-6),
               "roofline mismatch: " + fmt(rec.achieved) + " vs " + fmt(rep.achieved_chip));
    } catch (const Error& e) {
      c.expect(false, e.what());
    }
    ++checked;
  }
  c.expect(checked > 0, "no reports were produced");

  // Regime labels flip as bandwidth crosses the binding point: the same
  // two-stage mapping, re-priced across a DRAM-bandwidth ladder. The tensor
  // between the stages cannot fit in SRAM, so each stage moves 1 GB.
  DataflowGraph g;
  for (int i = 0; i < 2; ++i) {
    Kernel k;
    k.id = i;
    k.name = "k" + std::to_string(i);
    k.kind = KernelKind::elementwise;
    k.flop = 1e11;
    k.scheme_ids = {"replicated"};
    g.kernels.push_back(k);
  }
  g.tensors.push_back(TensorEdge{0, 0, 1, 1e9});
  nlohmann::json jmap = {{"partitions", {{0, 1}}},
                         {"intra", "singleton"}};
  std::vector<Regime> seen;
  for (double dbw : {1e9, 4e9, 6.4e9, 1e10, 1e11, 1e12}) {
    SystemSpec sys;
    sys.chip = ChipSpec{"flip", 8, 1e11, 1e6, 1e12, dbw, {}, {}};
    sys.dims = {NetworkDim{Topology::ring, 1, 1e9, 0}};
    sys.tp_dim = 0;
    PipelineResult r = evaluate_full_mapping(g, sys, PipelineOptions{}, jmap);
    PerfReport rep = checked_report(r);
    seen.push_back(rep.regime);
  }
  // Crossover at dbw = bytes/t_comp = 1e9 / 0.125s = 8 GB/s: memory-bound
  // below, compute-bound above, flipping exactly once.
  bool ok = seen.size() == 6;
  int flips = 0;
  for (size_t i = 1; i < seen.size(); ++i)
    if (seen[i] != seen[i - 1]) ++flips;
  ok = ok && flips == 1 && seen.front() == Regime::memory && seen.back() == Regime::compute;
  c.expect(ok, "regime did not flip exactly once from memory- to compute-bound");
  c.note("checked " + std::to_string(checked) + " reports plus a bandwidth-crossing flip");
}

void criterion7(Criterion& c) {
  TechCatalog cat = default_tech_catalog();
  const char* chips[] = {"h100", "tpuv4", "sn30", "wse2"};
  const char* topos[] = {"2d_torus", "3d_torus", "dragonfly", "dgx1", "dgx2"};
  struct Tech {
    const char* mem;
    const char* net;
  };
  const Tech techs[] = {{"ddr4", "pcie4"}, {"ddr4", "nvlink4"}, {"hbm3", "pcie4"},
                        {"hbm3", "nvlink4"}};

  std::vector<WorkloadSpec> workloads;
  {
    WorkloadSpec gpt;
    gpt.name = "gpt";
    gpt.params = {{"batch", 1}, {"seq", 1024}, {"hidden", 4096}, {"heads", 32}, {"ffn_mult", 4}};
    gpt.training = true;
    workloads.push_back(gpt);
    WorkloadSpec dlrm;
    dlrm.name = "dlrm";
    dlrm.params = {{"tables", 16}, {"emb_dim", 64}, {"batch", 4096},
                   {"mlp_dims", {2048, 512, 1}}};
    dlrm.training = true;
    workloads.push_back(dlrm);
    WorkloadSpec hpl;
    hpl.name = "hpl";
    hpl.params = {{"n", 65536}, {"block", 16384}};
    hpl.training = false;
    workloads.push_back(hpl);
    WorkloadSpec fft;
    fft.name = "fft";
    fft.params = {{"points", 1 << 24}, {"radix", 64}};
    fft.training = false;
    workloads.push_back(fft);
  }

  int hw_threads = int(std::thread::hardware_concurrency());
  int workers = std::max(2, hw_threads);
  for (const auto& w : workloads) {
    std::vector<DesignPoint> grid;
    for (const char* chip : chips)
      for (const char* topo : topos)
        for (const auto& tech : techs) {
          DesignPoint dp;
          dp.workload = w;
          dp.chip = chip;
          dp.topology = topo;
          dp.mem_tech = tech.mem;
          dp.net_tech = tech.net;
          dp.chips_total = 1024;
          dp.solve_timeout_s = 60.0;
          grid.push_back(dp);
        }
    auto results = run_sweep(grid, cat, workers);
    c.expect(results.size() == 80, w.name + ": expected 80 rows, got " +
                                       std::to_string(results.size()));
    int errors = 0;
    for (size_t i = 0; i < results.size(); ++i)
      if (!results[i].error.empty()) ++errors;
    c.expect(errors == 0, w.name + ": " + std::to_string(errors) + " error cells");

    // Determinism: the first row of the grid, recomputed, matches exactly.
    PointResult again = run_point(grid[0], cat);
    c.expect(sweep_csv_row(grid[0], again) == sweep_csv_row(grid[0], results[0]),
             w.name + ": rerun of point 0 differs");

    // Monotonicity: upgrading memory (DDR->HBM) or interconnect
    // (PCIe->NVLink) never decreases utilization, holding everything else.
    auto idx = [&](int chip_i, int topo_i, int tech_i) {
      return size_t((chip_i * 5 + topo_i) * 4 + tech_i);
    };
    for (int ci = 0; ci < 4; ++ci) {
      for (int ti = 0; ti < 5; ++ti) {
        double u_dp = results[idx(ci, ti, 0)].report.utilization;  // ddr+pcie
        double u_dn = results[idx(ci, ti, 1)].report.utilization;  // ddr+nvlink
        double u_hp = results[idx(ci, ti, 2)].report.utilization;  // hbm+pcie
        double u_hn = results[idx(ci, ti, 3)].report.utilization;  // hbm+nvlink
        std::string where = w.name + "/" + chips[ci] + "/" + topos[ti];
        c.expect(u_hp >= u_dp * (1 - 1e-9), where + ": DDR->HBM (pcie) hurt utilization");
        c.expect(u_hn >= u_dn * (1 - 1e-9), where + ": DDR->HBM (nvlink) hurt utilization");
        c.expect(u_dn >= u_dp * (1 - 1e-9), where + ": PCIe->NVLink (ddr) hurt utilization");
        c.expect(u_hn >= u_hp * (1 - 1e-9), where + ": PCIe->NVLink (hbm) hurt utilization");
      }
    }
  }
  c.note("4 workloads x 80 points at 1024 chips, " + std::to_string(workers) + " workers");
}

void criterion8(Criterion& c) {
  NetworkDim ring4{Topology::ring, 4, 25e9, 0};
  NetworkDim sw4{Topology::switched, 4, 25e9, 0};
  NetworkDim fc4{Topology::fully_connected, 4, 25e9, 0};
  NetworkDim ring8a{Topology::ring, 8, 100e9, 2e-6};

  auto check = [&](CollectiveKind k, Bytes b, const NetworkDim& d, double want,
                   const std::string& what) {
    double got = collective_cost(k, b, d);
    c.expect(close(got, want, 1e-12), what + ": " + fmt(got) + " != " + fmt(want));
  };
  check(CollectiveKind::all_reduce, 12e6, ring4, 0.72e-3, "ring all_reduce 12MB p4");
  check(CollectiveKind::all_gather, 12e6, ring4, 0.36e-3, "ring all_gather");
  check(CollectiveKind::reduce_scatter, 12e6, ring4, 0.36e-3, "ring reduce_scatter");
  check(CollectiveKind::broadcast, 8e6, ring4, 8e6 * 0.75 / 25e9, "ring broadcast");
  check(CollectiveKind::broadcast, 8e6, sw4, 8e6 / 25e9, "switch broadcast");
  check(CollectiveKind::all_to_all, 8e6, sw4, 0.24e-3, "switch all_to_all");
  check(CollectiveKind::all_to_all, 8e6, fc4, 8e6 / (4 * 25e9), "fc all_to_all");
  check(CollectiveKind::all_to_all, 8e6, ring4, 8e6 * 15.0 / 16.0 / 25e9, "ring all_to_all");
  check(CollectiveKind::p2p, 1e9, NetworkDim{Topology::ring, 2, 1e9, 0}, 1.0, "p2p 1GB at 1GB/s");
  check(CollectiveKind::all_reduce, 6.4e7, ring8a,
        2.0 * (7.0 / 8.0) * 6.4e7 / 100e9 + 14.0 * 2e-6, "ring all_reduce with hop latency");

  // Hierarchical all-reduce equals its staged reduce-scatter/all-gather
  // composition, including the single-dimension degenerate case.
  for (Bytes b : {1e6, 8e6, 3.33e8}) {
    std::vector<NetworkDim> dims = {ring4, NetworkDim{Topology::ring, 2, 50e9, 1e-6}};
    double staged = 0;
    double share = 1.0;
    for (const auto& d : dims) {
      staged += collective_cost(CollectiveKind::reduce_scatter, b * share, d);
      share /= d.size;
    }
    for (size_t i = dims.size(); i-- > 0;) {
      share *= dims[i].size;
      staged += collective_cost(CollectiveKind::all_gather, b * share, dims[i]);
    }
    c.expect(close(hierarchical_cost(CollectiveKind::all_reduce, b, dims), staged, 1e-12),
             "hierarchical all_reduce != staged composition at " + fmt(b) + " bytes");
    c.expect(close(hierarchical_cost(CollectiveKind::all_reduce, b, {ring4}),
                   collective_cost(CollectiveKind::all_reduce, b, ring4), 1e-12),
             "single-dim hierarchical != flat");
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  run_criterion(1, "matrix derivations match direct recomputation on 1000 instances", criterion1);
  run_criterion(2, "solver optimum equals exhaustive oracle on 100 instances", criterion2);
  run_criterion(3, "GPT layer sharding incurs exactly 4 all-reduces per iteration", criterion3);
  run_criterion(4, "dataflow bounds non-dataflow across the SRAM x DRAM-bw sweep", criterion4);
  run_criterion(5, "GPT case-study ordering and Proj/FFN0 co-location", criterion5);
  run_criterion(6, "roofline consistency and regime flips", criterion6);
  run_criterion(7, "80-point sweep determinism and technology monotonicity", criterion7);
  run_criterion(8, "collective closed forms and hierarchical composition identity", criterion8);

  int failed = 0;
  for (const auto& r : g_results)
    if (!r.pass) ++failed;
  std::printf("================\n%zu/%zu criteria passed\n", g_results.size() - size_t(failed),
              g_results.size());
  return failed;
}
