#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <dfmap/common.hpp>
#include <dfmap/graph.hpp>
#include <dfmap/interchip.hpp>
#include <dfmap/mapmat.hpp>
#include <dfmap/milp.hpp>
#include <dfmap/system.hpp>

namespace dfmap {

// ---------------------------------------------------------------------------
// Tiling-efficiency model
// ---------------------------------------------------------------------------

// Balanced factorization of a tile count into a 2D grid (a*b = t, a >= b,
// a/b minimal). Powers of two split their exponent evenly.
inline std::pair<int, int> balanced_grid(int tiles) {
  int best_a = tiles, best_b = 1;
  for (int b = 1; b * b <= tiles; ++b) {
    if (tiles % b) continue;
    best_b = b;
    best_a = tiles / b;
  }
  return {best_a, best_b};
}

// Fraction of the allocated compute grid doing useful work when an M x N
// output is ceil-padded onto it. GEMM-shaped kernels pay the padding of both
// output dimensions; other kinds are modeled as fully efficient.
inline double utilization_model(bool is_gemm, double m, double n, int tiles, int tile_rows,
                                int tile_cols) {
  if (tiles < 1) throw validation_error("utilization_model: tiles must be >= 1");
  if (!is_gemm || m <= 0 || n <= 0) return 1.0;
  auto [ga, gb] = balanced_grid(tiles);
  double rows = double(tile_rows) * double(ga);
  double cols = double(tile_cols) * double(gb);
  double um = m / (std::ceil(m / rows) * rows);
  double un = n / (std::ceil(n / cols) * cols);
  double u = um * un;
  return std::clamp(u, 1e-12, 1.0);
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

struct IntraChipOptions {
  std::optional<int> p_max;  // defaults to min(n, 10)
  int tile_rows = 32;
  int tile_cols = 32;
  std::vector<int> tile_menu;  // defaults to powers of two up to t_lim
};

struct IntraKernel {
  int graph_id = -1;   // id in the owning dataflow graph (or local id)
  std::string name;
  bool is_gemm = false;
  Flops flop = 0;       // per-chip FLOP after sharding (and backward factor)
  double eff_m = 0, eff_n = 0;  // post-sharding output dims for the tiling model
  Seconds net = 0;      // inherited per-kernel network time (Eq. 5/6 terms)
  Bytes weight_bytes = 0;  // per-chip resident parameters
};

struct IntraChipInstance {
  std::vector<IntraKernel> kernels;
  std::vector<TensorEdge> tensors;  // local ids, bytes already sharded
  ChipSpec chip;
  int p_max = 1;
  std::vector<int> menu;                 // tile-count menu (optimizer only)
  std::vector<std::vector<double>> u;    // [kernel][menu]
  std::vector<std::vector<Seconds>> comp;  // [kernel][menu] critical kernel time
  Bytes resident_weight_bytes = 0;       // occupies DRAM across every stage
  int tile_rows = 32, tile_cols = 32;

  int n() const { return int(kernels.size()); }
  int m() const { return int(tensors.size()); }
};

inline std::vector<int> default_tile_menu(double t_lim) {
  std::vector<int> menu;
  for (int t = 1; t <= int(t_lim); t *= 2) menu.push_back(t);
  if (menu.empty() || menu.back() != int(t_lim)) menu.push_back(int(t_lim));
  return menu;
}

inline IntraChipInstance make_intrachip_instance(std::vector<IntraKernel> kernels,
                                                 std::vector<TensorEdge> tensors,
                                                 const ChipSpec& chip,
                                                 const IntraChipOptions& opt = {}) {
  IntraChipInstance inst;
  inst.kernels = std::move(kernels);
  inst.tensors = std::move(tensors);
  inst.chip = chip;
  inst.tile_rows = opt.tile_rows;
  inst.tile_cols = opt.tile_cols;
  inst.p_max = opt.p_max ? *opt.p_max : std::min(inst.n(), 10);
  inst.p_max = std::max(1, inst.p_max);
  inst.menu = opt.tile_menu.empty() ? default_tile_menu(chip.t_lim) : opt.tile_menu;
  for (int t : inst.menu)
    if (t < 1 || t > int(chip.t_lim))
      throw validation_error("tile menu entry " + std::to_string(t) + " outside [1, t_lim]");
  for (const auto& k : inst.kernels) {
    std::vector<double> urow;
    std::vector<Seconds> crow;
    for (int t : inst.menu) {
      double u = utilization_model(k.is_gemm, k.eff_m, k.eff_n, t, inst.tile_rows, inst.tile_cols);
      urow.push_back(u);
      crow.push_back(k.flop / (double(t) * chip.t_flop * u));
    }
    inst.u.push_back(std::move(urow));
    inst.comp.push_back(std::move(crow));
    inst.resident_weight_bytes += k.weight_bytes;
  }
  return inst;
}

// Build the per-chip instance for one pipeline stage of an inter-chip
// mapping. Kernel FLOPs and tensor bytes arrive pre-sharded; network terms
// inherit the chosen schemes' inherent collectives plus the layout
// conversions of the tensors each kernel produces.
inline IntraChipInstance make_intrachip_for_stage(const InterChipInstance& inter,
                                                  const InterChipMapping& map, int stage,
                                                  const IntraChipOptions& opt = {}) {
  const int n_tp = inter.sys.n_tp();
  std::vector<int> local(size_t(inter.n()), -1);
  std::vector<IntraKernel> kernels;
  for (int k = 0; k < inter.n(); ++k) {
    if (map.partition[size_t(k)] != stage) continue;
    const Kernel& gk = inter.g.kernels[size_t(k)];
    const auto& sch = inter.schemes[size_t(k)][size_t(map.scheme_choice[size_t(k)])];
    IntraKernel ik;
    ik.graph_id = k;
    ik.name = gk.name;
    ik.is_gemm = gk.kind == KernelKind::gemm && gk.gemm_dims.has_value();
    ik.flop = inter.flop_mult * gk.flop * sch.flop_scale;
    if (ik.is_gemm) {
      double m = double(gk.gemm_dims->m), n = double(gk.gemm_dims->n);
      if (sch.id == "row") m /= double(n_tp);
      if (sch.id == "col") n /= double(n_tp);
      ik.eff_m = m;
      ik.eff_n = n;
    }
    ik.net = inter.comm_cost[size_t(k)][size_t(map.scheme_choice[size_t(k)])];
    ik.weight_bytes = detail::kernel_weight_bytes(inter.g, gk) * sch.weight_scale;
    local[size_t(k)] = int(kernels.size());
    kernels.push_back(ik);
  }
  // Conversion time of each produced tensor lands on its producer.
  for (const auto& t : inter.g.tensors) {
    if (local[size_t(t.src)] < 0) continue;
    int a = map.scheme_choice[size_t(t.src)];
    int b = map.scheme_choice[size_t(t.dst)];
    kernels[size_t(local[size_t(t.src)])].net += inter.conv[size_t(t.id)][size_t(a)][size_t(b)];
  }
  std::vector<TensorEdge> tensors;
  for (const auto& t : inter.g.tensors) {
    if (local[size_t(t.src)] < 0 || local[size_t(t.dst)] < 0) continue;
    TensorEdge e;
    e.id = int(tensors.size());
    e.src = local[size_t(t.src)];
    e.dst = local[size_t(t.dst)];
    e.bytes = t.bytes / double(n_tp);
    tensors.push_back(e);
  }
  return make_intrachip_instance(std::move(kernels), std::move(tensors), inter.sys.chip, opt);
}

// ---------------------------------------------------------------------------
// Evaluation of a fixed mapping
// ---------------------------------------------------------------------------

struct IntraChipMapping {
  std::vector<int> partition;  // local kernel -> on-chip stage
  std::vector<int> tiles;      // local kernel -> tile count
  AssignmentMatrices mats;
  std::vector<double> util;    // per-kernel u_c at the chosen allocation
  std::vector<Seconds> t_comp, t_mem, t_net, t_cri;
  std::vector<Bytes> sram_used, dram_used;
  Seconds objective = 0;  // sum of per-stage critical times
  bool optimal = true;
  std::uint64_t solver_nodes = 0;
};

inline IntraChipMapping evaluate_intrachip(const IntraChipInstance& inst,
                                           const std::vector<int>& partition,
                                           const std::vector<int>& tiles) {
  const int n = inst.n(), m = inst.m(), p = inst.p_max;
  if (int(partition.size()) != n || int(tiles.size()) != n)
    throw validation_error("evaluate: size mismatch");

  IntraChipMapping out;
  out.partition = partition;
  out.tiles = tiles;
  out.mats = AssignmentMatrices::from_partition(partition, p, inst.tensors);
  validate_matrices(out.mats, inst.tensors);

  // Tile limit per stage.
  std::vector<double> tiles_used(size_t(p), 0);
  for (int k = 0; k < n; ++k) {
    if (tiles[size_t(k)] < 1)
      throw validation_error("kernel '" + inst.kernels[size_t(k)].name + "': needs >= 1 tile");
    tiles_used[size_t(partition[size_t(k)])] += tiles[size_t(k)];
  }
  for (int i = 0; i < p; ++i)
    if (tiles_used[size_t(i)] > inst.chip.t_lim + 1e-9)
      throw validation_error("tile_limit exceeded in stage " + std::to_string(i) + " (" +
                             std::to_string(tiles_used[size_t(i)]) + " > " +
                             std::to_string(inst.chip.t_lim) + ")");

  out.t_comp.assign(size_t(p), 0);
  out.t_mem.assign(size_t(p), 0);
  out.t_net.assign(size_t(p), 0);
  out.t_cri.assign(size_t(p), 0);
  out.sram_used.assign(size_t(p), 0);
  out.dram_used.assign(size_t(p), inst.resident_weight_bytes);
  out.util.assign(size_t(n), 1.0);

  for (int k = 0; k < n; ++k) {
    const auto& ik = inst.kernels[size_t(k)];
    int i = partition[size_t(k)];
    double u = utilization_model(ik.is_gemm, ik.eff_m, ik.eff_n, tiles[size_t(k)], inst.tile_rows,
                                 inst.tile_cols);
    out.util[size_t(k)] = u;
    Seconds tc = ik.flop / (double(tiles[size_t(k)]) * inst.chip.t_flop * u);
    out.t_comp[size_t(i)] = std::max(out.t_comp[size_t(i)], tc);
    out.t_net[size_t(i)] += ik.net;
  }
  for (int j = 0; j < m; ++j) {
    const auto& t = inst.tensors[size_t(j)];
    for (int i = 0; i < p; ++i) {
      if (out.mats.B[size_t(j)][size_t(i)]) out.sram_used[size_t(i)] += t.bytes;
      if (out.mats.D[size_t(j)][size_t(i)]) out.t_mem[size_t(i)] += t.bytes / inst.chip.d_bw;
      if (out.mats.L[size_t(j)][size_t(i)]) out.dram_used[size_t(i)] += t.bytes;
    }
  }
  for (int i = 0; i < p; ++i) {
    if (out.sram_used[size_t(i)] > inst.chip.s_cap + 1e-6) {
      for (int j = 0; j < m; ++j)
        if (out.mats.B[size_t(j)][size_t(i)] && inst.tensors[size_t(j)].bytes > inst.chip.s_cap)
          throw validation_error("sram_capacity: tensor " + std::to_string(j) + " alone exceeds SRAM");
      throw validation_error("sram_capacity exceeded in stage " + std::to_string(i));
    }
    if (out.dram_used[size_t(i)] > inst.chip.d_cap + 1e-6)
      throw validation_error("dram_capacity exceeded in stage " + std::to_string(i));
    out.t_cri[size_t(i)] =
        std::max(out.t_comp[size_t(i)], std::max(out.t_mem[size_t(i)], out.t_net[size_t(i)]));
    out.objective += out.t_cri[size_t(i)];
  }
  return out;
}

// Kernel-by-kernel baseline: singleton stages in topological order, all tiles
// to the resident kernel. This is the execution style of non-dataflow
// architectures (every tensor round-trips through DRAM).
inline IntraChipMapping evaluate_singleton(const IntraChipInstance& inst) {
  DataflowGraph g;
  for (const auto& k : inst.kernels) {
    Kernel gk;
    gk.id = int(g.kernels.size());
    gk.name = k.name;
    gk.flop = std::max(0.0, k.flop);
    g.kernels.push_back(gk);
  }
  g.tensors = inst.tensors;
  std::vector<int> order = topological_order(g);
  std::vector<int> part(size_t(inst.n()), 0);
  for (size_t pos = 0; pos < order.size(); ++pos) part[size_t(order[pos])] = int(pos);
  IntraChipInstance wide = inst;
  wide.p_max = std::max(1, inst.n());
  std::vector<int> tiles(size_t(inst.n()), int(inst.chip.t_lim));
  return evaluate_intrachip(wide, part, tiles);
}

// ---------------------------------------------------------------------------
// MILP formulation
// ---------------------------------------------------------------------------

struct IntraChipModel {
  milp::Model model;
  std::vector<std::vector<int>> A;  // [kernel][stage]
  std::vector<std::vector<int>> T;  // [kernel][menu index]
};

inline IntraChipModel build_intrachip(const IntraChipInstance& inst) {
  const int n = inst.n(), m = inst.m(), p = inst.p_max;
  const int nm = int(inst.menu.size());
  IntraChipModel out;
  milp::Model& md = out.model;

  for (int k = 0; k < n; ++k) {
    std::vector<int> row;
    for (int i = 0; i < p; ++i)
      row.push_back(md.add_bool("A_" + std::to_string(k) + "_" + std::to_string(i), 3, true));
    md.add_one_hot(row, "assign_one_hot");
    out.A.push_back(row);
  }
  for (int k = 0; k < n; ++k) {
    // Declared largest-first so the search probes generous allocations first.
    std::vector<int> row(size_t(nm), -1);
    for (int a = nm - 1; a >= 0; --a)
      row[size_t(a)] = md.add_bool("t_" + std::to_string(k) + "_" + std::to_string(a), 2, true);
    md.add_one_hot(row, "tiles_one_hot");
    out.T.push_back(row);
  }

  for (const auto& t : inst.tensors) {
    milp::LinExpr e;
    for (int i = 0; i < p; ++i) {
      e.add(out.A[size_t(t.dst)][size_t(i)], double(i));
      e.add(out.A[size_t(t.src)][size_t(i)], -double(i));
    }
    md.add_constraint(e, milp::Sense::ge, 0, "precedence");
  }

  // Used stages form a prefix; compressing gaps never changes the objective.
  for (int i = 1; i < p; ++i) {
    milp::LinExpr e;
    for (int k = 0; k < n; ++k) {
      e.add(out.A[size_t(k)][size_t(i - 1)], double(n));
      e.add(out.A[size_t(k)][size_t(i)], -1.0);
    }
    md.add_constraint(e, milp::Sense::ge, 0, "stage_prefix");
  }

  // Per-stage epigraph variables; objective is their sum.
  std::vector<int> z(size_t(p), -1);
  milp::LinExpr obj;
  for (int i = 0; i < p; ++i) {
    z[size_t(i)] = md.add_continuous("tcri_" + std::to_string(i));
    obj.add(z[size_t(i)], 1.0);
  }

  // Assignment-invariant floor on the summed critical time: total network
  // time lands somewhere regardless of the split, and the chip cannot beat
  // its pooled compute throughput. Redundant but it lets the search prune
  // partial assignments.
  {
    double net_total = 0, pool_total = 0, heaviest = 0;
    for (int k = 0; k < n; ++k) {
      net_total += inst.kernels[size_t(k)].net;
      pool_total += inst.kernels[size_t(k)].flop / (inst.chip.t_lim * inst.chip.t_flop);
      heaviest = std::max(heaviest, *std::min_element(inst.comp[size_t(k)].begin(),
                                                      inst.comp[size_t(k)].end()));
    }
    double floor_c = std::max(net_total, std::max(pool_total, heaviest));
    if (floor_c > 0) {
      milp::LinExpr e;
      for (int i = 0; i < p; ++i) e.add(z[size_t(i)], 1.0);
      md.add_constraint(e, milp::Sense::ge, floor_c, "objective_floor", /*redundant=*/true);
    }
  }

  for (int i = 0; i < p; ++i) {
    milp::LinExpr tile_row;
    milp::LinExpr net_row;
    for (int k = 0; k < n; ++k) {
      milp::LinExpr link = milp::LinExpr::of(out.A[size_t(k)][size_t(i)], -1.0);
      for (int a = 0; a < nm; ++a) {
        int w = md.lin_and(out.A[size_t(k)][size_t(i)], out.T[size_t(k)][size_t(a)],
                           "wt_" + std::to_string(k) + "_" + std::to_string(i) + "_" +
                               std::to_string(a));
        link.add(w, 1.0);
        tile_row.add(w, double(inst.menu[size_t(a)]));
        // Critical-kernel time: z_i >= comp[k][a] when kernel k runs in stage
        // i on menu[a] tiles.
        md.add_constraint(milp::LinExpr::of(w, inst.comp[size_t(k)][size_t(a)]).add(z[size_t(i)], -1.0),
                          milp::Sense::le, 0, "compute_time");
      }
      md.add_constraint(link, milp::Sense::eq, 0, "wt_link");
      // Floor on the stage time from this kernel's best possible allocation;
      // tightens the bound before any tile variable is branched.
      double mn = *std::min_element(inst.comp[size_t(k)].begin(), inst.comp[size_t(k)].end());
      if (mn > 0)
        md.add_constraint(
            milp::LinExpr::of(out.A[size_t(k)][size_t(i)], mn).add(z[size_t(i)], -1.0),
            milp::Sense::le, 0, "compute_floor");
      if (inst.kernels[size_t(k)].net > 0)
        net_row.add(out.A[size_t(k)][size_t(i)], inst.kernels[size_t(k)].net);
    }
    md.add_constraint(tile_row, milp::Sense::le, inst.chip.t_lim, "tile_limit");
    // Shared-pool floor: the critical kernel is at least the stage's FLOP
    // spread over every tile (max(a_k/b_k) >= sum a / sum b, with
    // sum b <= t_lim * t_flop).
    {
      milp::LinExpr pool;
      for (int k = 0; k < n; ++k) {
        double c = inst.kernels[size_t(k)].flop / (inst.chip.t_lim * inst.chip.t_flop);
        if (c > 0) pool.add(out.A[size_t(k)][size_t(i)], c);
      }
      if (!pool.terms.empty()) {
        pool.add(z[size_t(i)], -1.0);
        md.add_constraint(pool, milp::Sense::le, 0, "compute_pool_floor");
      }
    }
    if (!net_row.terms.empty()) {
      net_row.add(z[size_t(i)], -1.0);
      md.add_constraint(net_row, milp::Sense::le, 0, "network_time");
    }
  }

  // Derived tensor matrices per stage: SRAM residency (B), DRAM transfers
  // (D), DRAM lifetimes (L).
  if (m > 0) {
    std::vector<std::vector<int>> cum(size_t(n), std::vector<int>{});
    for (int k = 0; k < n; ++k) {
      cum[size_t(k)].assign(size_t(p), -1);
      for (int i = 0; i < p; ++i) {
        int c = md.add_bool("cum_" + std::to_string(k) + "_" + std::to_string(i));
        milp::LinExpr e = milp::LinExpr::of(c, -1.0);
        for (int t = 0; t <= i; ++t) e.add(out.A[size_t(k)][size_t(t)], 1.0);
        md.add_constraint(e, milp::Sense::eq, 0, "cum_def");
        cum[size_t(k)][size_t(i)] = c;
      }
    }
    for (int i = 0; i < p; ++i) {
      milp::LinExpr sram_row, dram_row, mem_row;
      for (const auto& t : inst.tensors) {
        int b = md.lin_and(out.A[size_t(t.src)][size_t(i)], out.A[size_t(t.dst)][size_t(i)],
                           "B_" + std::to_string(t.id) + "_" + std::to_string(i));
        int d = md.lin_xor(out.A[size_t(t.src)][size_t(i)], out.A[size_t(t.dst)][size_t(i)],
                           "D_" + std::to_string(t.id) + "_" + std::to_string(i));
        int l;
        if (i == 0) {
          l = md.lin_xor(cum[size_t(t.src)][0], b, "L_" + std::to_string(t.id) + "_0");
        } else {
          int w1 = md.lin_xor(cum[size_t(t.src)][size_t(i)], cum[size_t(t.dst)][size_t(i - 1)],
                              "lx_" + std::to_string(t.id) + "_" + std::to_string(i));
          l = md.lin_xor(w1, b, "L_" + std::to_string(t.id) + "_" + std::to_string(i));
        }
        sram_row.add(b, t.bytes);
        dram_row.add(l, t.bytes);
        mem_row.add(d, t.bytes / inst.chip.d_bw);
      }
      md.add_constraint(sram_row, milp::Sense::le, inst.chip.s_cap, "sram_capacity");
      md.add_constraint(dram_row, milp::Sense::le,
                        inst.chip.d_cap - inst.resident_weight_bytes, "dram_capacity");
      mem_row.add(z[size_t(i)], -1.0);
      md.add_constraint(mem_row, milp::Sense::le, 0, "memory_time");
    }
  }

  md.minimize(obj);

  // Warm start. Candidate shapes, most fused first; the first one that
  // passes the evaluator seeds the incumbent, which the search needs for
  // budgeted subproblem pruning.
  {
    std::vector<int> order;
    {
      DataflowGraph g;
      for (const auto& k : inst.kernels) {
        Kernel gk;
        gk.id = int(g.kernels.size());
        gk.name = k.name;
        gk.flop = std::max(0.0, k.flop);
        g.kernels.push_back(gk);
      }
      g.tensors = inst.tensors;
      order = topological_order(g);
    }
    auto chunked = [&](int stages) {
      std::vector<int> part(size_t(n), 0);
      for (size_t pos = 0; pos < order.size(); ++pos)
        part[size_t(order[pos])] = int(pos * size_t(stages) / order.size());
      return part;
    };
    std::vector<std::vector<int>> candidates;
    candidates.push_back(std::vector<int>(size_t(n), 0));  // fully fused
    for (int stages = 2; stages <= p; stages *= 2) candidates.push_back(chunked(stages));
    if (p >= n) candidates.push_back(chunked(n));  // kernel-by-kernel

    for (const auto& part : candidates) {
      std::vector<int> count(size_t(p), 0);
      for (int k = 0; k < n; ++k) count[size_t(part[size_t(k)])]++;
      std::vector<int> pick(size_t(n), 0), tiles(size_t(n), 1);
      bool ok = true;
      for (int k = 0; k < n; ++k) {
        int share = int(inst.chip.t_lim) / std::max(1, count[size_t(part[size_t(k)])]);
        if (share < inst.menu[0]) {
          ok = false;
          break;
        }
        for (int a = 0; a < nm; ++a)
          if (inst.menu[size_t(a)] <= share) pick[size_t(k)] = a;
        tiles[size_t(k)] = inst.menu[size_t(pick[size_t(k)])];
      }
      if (!ok) continue;
      try {
        evaluate_intrachip(inst, part, tiles);
      } catch (const Error&) {
        continue;
      }
      std::vector<std::pair<int, double>> hint;
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < p; ++i)
          hint.push_back({out.A[size_t(k)][size_t(i)], part[size_t(k)] == i ? 1.0 : 0.0});
        for (int a = 0; a < nm; ++a)
          hint.push_back({out.T[size_t(k)][size_t(a)], a == pick[size_t(k)] ? 1.0 : 0.0});
      }
      md.set_hint(hint);
      break;
    }
  }
  return out;
}

inline IntraChipMapping solve_intrachip(const IntraChipInstance& inst,
                                        const milp::SolveOptions& opt = {}) {
  if (inst.n() == 0) {
    IntraChipMapping empty;
    empty.objective = 0;
    return empty;
  }
  IntraChipModel im = build_intrachip(inst);
  milp::Solution sol = milp::solve(im.model, opt);
  if (sol.status == milp::SolveStatus::infeasible)
    throw infeasible_error("intra-chip optimization infeasible (binding: " +
                           sol.binding_constraint + ")");
  if (sol.status == milp::SolveStatus::timeout && sol.values.empty())
    throw timeout_error("intra-chip solve timed out with no incumbent");
  std::vector<int> part(size_t(inst.n()), 0), tiles(size_t(inst.n()), 1);
  for (int k = 0; k < inst.n(); ++k) {
    for (int i = 0; i < inst.p_max; ++i)
      if (sol.at(im.A[size_t(k)][size_t(i)])) part[size_t(k)] = i;
    for (size_t a = 0; a < inst.menu.size(); ++a)
      if (sol.at(im.T[size_t(k)][a])) tiles[size_t(k)] = inst.menu[a];
  }
  IntraChipMapping map = evaluate_intrachip(inst, part, tiles);
  map.optimal = sol.status == milp::SolveStatus::optimal;
  map.solver_nodes = sol.nodes;
  if (map.optimal &&
      std::abs(map.objective - sol.objective) > 1e-6 * std::max(1.0, std::abs(sol.objective)))
    throw internal_error("intra solver objective " + std::to_string(sol.objective) +
                         " disagrees with evaluation " + std::to_string(map.objective));
  return map;
}

}  // namespace dfmap
