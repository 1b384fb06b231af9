#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <dfmap/collectives.hpp>
#include <dfmap/common.hpp>
#include <dfmap/graph.hpp>
#include <dfmap/mapmat.hpp>
#include <dfmap/milp.hpp>
#include <dfmap/system.hpp>

namespace dfmap {

// ---------------------------------------------------------------------------
// Sharding schemes
// ---------------------------------------------------------------------------

enum class Layout { row_sharded, col_sharded, replicated, partial_sum };

inline const char* to_string(Layout l) {
  switch (l) {
    case Layout::row_sharded: return "row_sharded";
    case Layout::col_sharded: return "col_sharded";
    case Layout::replicated: return "replicated";
    case Layout::partial_sum: return "partial_sum";
  }
  return "?";
}

struct ShardingScheme {
  std::string id;
  double flop_scale = 1.0;    // fraction of the kernel's FLOP each chip runs
  double weight_scale = 1.0;  // fraction of the kernel's weights each chip holds
  Layout input_layout = Layout::replicated;   // required layout of in-edges
  Layout output_layout = Layout::replicated;
  std::optional<CollectiveKind> inherent;     // collective inherent to the scheme
  Bytes inherent_bytes = 0;
};

// Collective needed to move a tensor from the producer's output layout to the
// consumer's required input layout. The table is total.
inline std::optional<CollectiveKind> conversion_op(Layout from, Layout to) {
  if (from == to) return std::nullopt;
  if (from == Layout::partial_sum) return CollectiveKind::all_reduce;
  if (to == Layout::partial_sum) return std::nullopt;  // a resolved tensor is a valid summand
  if (from == Layout::replicated) return std::nullopt;  // slice locally
  if (to == Layout::replicated) return CollectiveKind::all_gather;
  return CollectiveKind::all_to_all;  // row <-> col resharding
}

inline Seconds conversion_cost(Layout from, Layout to, Bytes bytes, const NetworkDim* tp) {
  auto op = conversion_op(from, to);
  if (!op || !tp) return 0;
  return collective_cost(*op, bytes, *tp);
}

namespace detail {

inline Bytes kernel_out_bytes(const DataflowGraph& g, const Kernel& k) {
  if (k.gemm_dims) return double(k.gemm_dims->m) * double(k.gemm_dims->n) * g.element_size;
  Bytes best = 0;
  for (const auto& t : g.tensors)
    if (t.src == k.id) best = std::max(best, t.bytes);
  return best;
}

inline Bytes kernel_weight_bytes(const DataflowGraph& g, const Kernel& k) {
  if (k.gemm_dims && k.weight_bytes == 0)
    return double(k.gemm_dims->k) * double(k.gemm_dims->n) * g.element_size;
  return k.weight_bytes;
}

}  // namespace detail

// Default scheme menu per kernel kind. For GEMMs the three concrete shardings
// mirror the usual data/weight splits: "col" slices weight columns (no
// communication, column-sharded output), "row" slices data rows and has to
// move the replicated weight, "reduce" slices the contraction dimension and
// all-reduces the partial outputs. Everything also admits a degenerate
// "replicated" scheme that trades communication for duplicated compute.
inline std::vector<ShardingScheme> scheme_catalog_for(const DataflowGraph& g, const Kernel& k,
                                                      int n_tp) {
  const double fs = 1.0 / double(n_tp);
  const Bytes out_b = detail::kernel_out_bytes(g, k);
  const Bytes w_b = detail::kernel_weight_bytes(g, k);
  std::vector<ShardingScheme> v;
  auto rep = [&] {
    return ShardingScheme{"replicated", 1.0, 1.0, Layout::replicated, Layout::replicated,
                          std::nullopt, 0};
  };
  switch (k.kind) {
    case KernelKind::gemm:
      // "reduce" is listed first: when an all-reduce of the output ties with
      // an equivalent gather sequence (the ring closed forms make them equal),
      // the search keeps the first optimum it finds, and the fused all-reduce
      // is the variant real systems use.
      v.push_back({"reduce", fs, fs, Layout::col_sharded, Layout::replicated,
                   CollectiveKind::all_reduce, out_b});
      v.push_back({"col", fs, fs, Layout::replicated, Layout::col_sharded, std::nullopt, 0});
      v.push_back({"row", fs, 1.0, Layout::row_sharded, Layout::row_sharded,
                   CollectiveKind::broadcast, w_b});
      v.push_back(rep());
      break;
    case KernelKind::attention_score:
      v.push_back({"head", fs, 1.0, Layout::col_sharded, Layout::col_sharded, std::nullopt, 0});
      v.push_back(rep());
      break;
    case KernelKind::softmax:
    case KernelKind::elementwise:
      v.push_back({"shard_col", fs, 1.0, Layout::col_sharded, Layout::col_sharded, std::nullopt, 0});
      v.push_back({"shard_row", fs, 1.0, Layout::row_sharded, Layout::row_sharded, std::nullopt, 0});
      v.push_back(rep());
      break;
    case KernelKind::embedding_lookup:
      // Tables are sharded across chips; gathered features are exchanged to
      // restore batch-major layout.
      v.push_back({"table_shard", fs, fs, Layout::row_sharded, Layout::row_sharded,
                   CollectiveKind::all_to_all, out_b});
      v.push_back(rep());
      break;
    case KernelKind::fft_stage:
      // Distributed butterfly stage followed by the transpose exchange.
      v.push_back({"stage_shard", fs, 1.0, Layout::row_sharded, Layout::row_sharded,
                   CollectiveKind::all_to_all, out_b});
      v.push_back(rep());
      break;
    case KernelKind::lu_stage:
      // Panel factorization; the factored panel is broadcast to the row.
      v.push_back({"panel_shard", fs, 1.0, Layout::row_sharded, Layout::row_sharded,
                   CollectiveKind::broadcast, out_b});
      v.push_back(rep());
      break;
  }
  if (!k.scheme_ids.empty()) {
    std::vector<ShardingScheme> filtered;
    for (const auto& want : k.scheme_ids) {
      bool found = false;
      for (const auto& s : v) {
        if (s.id == want) {
          filtered.push_back(s);
          found = true;
          break;
        }
      }
      if (!found)
        throw validation_error("kernel '" + k.name + "': unknown scheme id '" + want + "'");
    }
    v = std::move(filtered);
  }
  if (v.empty()) throw validation_error("kernel '" + k.name + "': empty scheme set");
  return v;
}

// Inherent communication cost of each scheme of a kernel on the TP dimension.
inline std::vector<Seconds> kernel_comm_vector(const std::vector<ShardingScheme>& schemes,
                                               const NetworkDim* tp) {
  std::vector<Seconds> c;
  c.reserve(schemes.size());
  for (const auto& s : schemes) {
    if (!s.inherent || !tp) c.push_back(0);
    else c.push_back(collective_cost(*s.inherent, s.inherent_bytes, *tp));
  }
  return c;
}

// Layout-conversion cost matrix for one tensor: rows index the producer's
// scheme, columns the consumer's.
inline std::vector<std::vector<Seconds>> conversion_matrix(
    const TensorEdge& t, const std::vector<ShardingScheme>& src_schemes,
    const std::vector<ShardingScheme>& dst_schemes, const NetworkDim* tp) {
  std::vector<std::vector<Seconds>> C(src_schemes.size(),
                                      std::vector<Seconds>(dst_schemes.size(), 0));
  for (size_t a = 0; a < src_schemes.size(); ++a)
    for (size_t b = 0; b < dst_schemes.size(); ++b)
      C[a][b] = conversion_cost(src_schemes[a].output_layout, dst_schemes[b].input_layout,
                                t.bytes, tp);
  return C;
}

// ---------------------------------------------------------------------------
// Instance: all constants the solver, evaluator and oracle share
// ---------------------------------------------------------------------------

struct InterChipOptions {
  std::optional<int> p_max;      // defaults to min(n_pp, n)
  bool include_backward = false;
  double bwd_flop_factor = 2.0;  // backward FLOP as a multiple of forward
  double bwd_comm_factor = 1.0;  // backward collectives mirror forward ones
};

struct InterChipInstance {
  DataflowGraph g;
  SystemSpec sys;
  InterChipOptions opt;
  int p_max = 1;
  double flop_mult = 1.0;
  double comm_mult = 1.0;
  std::vector<std::vector<ShardingScheme>> schemes;   // [kernel][scheme]
  std::vector<std::vector<Seconds>> comp_cost;        // [kernel][scheme]
  std::vector<std::vector<Seconds>> comm_cost;        // [kernel][scheme]
  std::vector<std::vector<std::vector<Seconds>>> conv;  // [tensor][src s][dst s]
  std::vector<Seconds> p2p_cost;                      // [tensor]

  int n() const { return g.n(); }
  int m() const { return g.m(); }
};

inline InterChipInstance make_interchip_instance(const DataflowGraph& g, const SystemSpec& sys,
                                                 const InterChipOptions& opt = {}) {
  validate_graph(g);
  validate_system(sys);
  InterChipInstance inst;
  inst.g = g;
  inst.sys = sys;
  inst.opt = opt;
  inst.p_max = opt.p_max ? *opt.p_max : std::min(sys.n_pp(), std::max(1, g.n()));
  if (inst.p_max < 1) throw validation_error("p_max must be >= 1");
  inst.flop_mult = opt.include_backward ? 1.0 + opt.bwd_flop_factor : 1.0;
  inst.comm_mult = opt.include_backward ? 1.0 + opt.bwd_comm_factor : 1.0;

  const NetworkDim* tp = sys.tp();
  const int n_tp = sys.n_tp();
  const double chip_flops = sys.chip.peak_flops();

  for (const auto& k : g.kernels) {
    auto menu = scheme_catalog_for(g, k, n_tp);
    std::vector<Seconds> comp;
    for (const auto& s : menu)
      comp.push_back(inst.flop_mult * k.flop * s.flop_scale / chip_flops);
    auto comm = kernel_comm_vector(menu, tp);
    for (auto& c : comm) c *= inst.comm_mult;
    inst.schemes.push_back(std::move(menu));
    inst.comp_cost.push_back(std::move(comp));
    inst.comm_cost.push_back(std::move(comm));
  }
  const NetworkDim* pp = sys.pp();
  for (const auto& t : g.tensors) {
    auto C = conversion_matrix(t, inst.schemes[size_t(t.src)], inst.schemes[size_t(t.dst)], tp);
    for (auto& row : C)
      for (auto& c : row) c *= inst.comm_mult;
    inst.conv.push_back(std::move(C));
    // Point-to-point between pipeline stages moves each chip's shard.
    Seconds hp = pp ? collective_cost(CollectiveKind::p2p, t.bytes / double(n_tp), *pp) : 0;
    inst.p2p_cost.push_back(inst.comm_mult * hp);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Evaluation of a fixed mapping
// ---------------------------------------------------------------------------

struct InterChipMapping {
  std::vector<int> partition;     // kernel -> pipeline stage
  std::vector<int> scheme_choice; // kernel -> scheme index into the instance menu
  AssignmentMatrices mats;
  std::vector<Seconds> t_comp, t_net, t_p2p, t_cri;
  Seconds objective = 0;
  bool optimal = true;
  std::uint64_t solver_nodes = 0;

  int stages() const { return int(t_cri.size()); }
};

inline InterChipMapping evaluate_interchip(const InterChipInstance& inst,
                                           const std::vector<int>& partition,
                                           const std::vector<int>& scheme_choice) {
  const int n = inst.n(), m = inst.m(), p = inst.p_max;
  if (int(partition.size()) != n) throw validation_error("evaluate: partition size mismatch");
  if (int(scheme_choice.size()) != n) throw validation_error("evaluate: scheme size mismatch");
  for (int k = 0; k < n; ++k)
    if (scheme_choice[size_t(k)] < 0 ||
        scheme_choice[size_t(k)] >= int(inst.schemes[size_t(k)].size()))
      throw validation_error("evaluate: scheme index out of range for kernel " +
                             inst.g.kernels[size_t(k)].name);

  InterChipMapping out;
  out.partition = partition;
  out.scheme_choice = scheme_choice;
  out.mats = AssignmentMatrices::from_partition(partition, p, inst.g.tensors);
  validate_matrices(out.mats, inst.g.tensors);

  out.t_comp.assign(size_t(p), 0);
  out.t_net.assign(size_t(p), 0);
  out.t_p2p.assign(size_t(p), 0);
  out.t_cri.assign(size_t(p), 0);
  for (int k = 0; k < n; ++k) {
    int i = partition[size_t(k)];
    int a = scheme_choice[size_t(k)];
    out.t_comp[size_t(i)] += inst.comp_cost[size_t(k)][size_t(a)];
    out.t_net[size_t(i)] += inst.comm_cost[size_t(k)][size_t(a)];
  }
  for (int j = 0; j < m; ++j) {
    const auto& t = inst.g.tensors[size_t(j)];
    int a = scheme_choice[size_t(t.src)];
    int b = scheme_choice[size_t(t.dst)];
    out.t_net[size_t(partition[size_t(t.src)])] += inst.conv[size_t(j)][size_t(a)][size_t(b)];
    for (int i = 0; i < p; ++i)
      if (out.mats.L[size_t(j)][size_t(i)]) out.t_p2p[size_t(i)] += inst.p2p_cost[size_t(j)];
  }
  Seconds worst = 0;
  for (int i = 0; i < p; ++i) {
    out.t_cri[size_t(i)] =
        std::max(out.t_comp[size_t(i)], std::max(out.t_net[size_t(i)], out.t_p2p[size_t(i)]));
    worst = std::max(worst, out.t_cri[size_t(i)]);
  }
  out.objective = worst;
  return out;
}

// Number of all-reduce events implied by a mapping, per iteration: inherent
// scheme collectives plus layout conversions, mirrored by the backward pass
// when the instance models one.
inline int count_all_reduces(const InterChipInstance& inst, const InterChipMapping& map) {
  int forward = 0;
  for (int k = 0; k < inst.n(); ++k) {
    const auto& s = inst.schemes[size_t(k)][size_t(map.scheme_choice[size_t(k)])];
    if (s.inherent && *s.inherent == CollectiveKind::all_reduce && s.inherent_bytes > 0) ++forward;
  }
  for (const auto& t : inst.g.tensors) {
    const auto& from = inst.schemes[size_t(t.src)][size_t(map.scheme_choice[size_t(t.src)])];
    const auto& to = inst.schemes[size_t(t.dst)][size_t(map.scheme_choice[size_t(t.dst)])];
    auto op = conversion_op(from.output_layout, to.input_layout);
    if (op && *op == CollectiveKind::all_reduce && t.bytes > 0) ++forward;
  }
  double mult = inst.opt.include_backward ? 1.0 + inst.opt.bwd_comm_factor : 1.0;
  return int(std::lround(forward * mult));
}

// Per-iteration gradient synchronization across the data-parallel dimension;
// reported separately, never overlapped.
inline Seconds dp_overhead(const SystemSpec& sys, Bytes param_bytes_per_chip) {
  const NetworkDim* dp = sys.dp();
  if (!dp || dp->size <= 1) return 0;
  return collective_cost(CollectiveKind::all_reduce, param_bytes_per_chip, *dp);
}

// Per-chip resident parameter bytes under the chosen schemes.
inline Bytes mapped_param_bytes(const InterChipInstance& inst, const InterChipMapping& map) {
  Bytes total = 0;
  for (int k = 0; k < inst.n(); ++k) {
    const auto& s = inst.schemes[size_t(k)][size_t(map.scheme_choice[size_t(k)])];
    total += detail::kernel_weight_bytes(inst.g, inst.g.kernels[size_t(k)]) * s.weight_scale;
  }
  return total;
}

// GPipe-style end-to-end inflation for a pipeline fed with `microbatches`
// inputs; the steady-state objective ignores the fill/drain bubble.
inline double pipeline_bubble_factor(int n_pp, int microbatches) {
  if (microbatches < 1) throw validation_error("microbatches must be >= 1");
  return (double(microbatches) + double(n_pp) - 1.0) / double(microbatches);
}

// ---------------------------------------------------------------------------
// MILP formulation
// ---------------------------------------------------------------------------

struct InterChipModel {
  milp::Model model;
  std::vector<std::vector<int>> A;  // [kernel][stage]
  std::vector<std::vector<int>> S;  // [kernel][scheme]
};

inline InterChipModel build_interchip(const InterChipInstance& inst) {
  const int n = inst.n(), m = inst.m(), p = inst.p_max;
  InterChipModel out;
  milp::Model& md = out.model;

  for (int k = 0; k < n; ++k) {
    std::vector<int> row;
    for (int i = 0; i < p; ++i)
      row.push_back(md.add_bool("A_" + std::to_string(k) + "_" + std::to_string(i), 3, true));
    md.add_one_hot(row, "assign_one_hot");
    out.A.push_back(row);
  }
  for (int k = 0; k < n; ++k) {
    std::vector<int> row;
    for (size_t a = 0; a < inst.schemes[size_t(k)].size(); ++a)
      row.push_back(md.add_bool("s_" + std::to_string(k) + "_" + std::to_string(a), 2, true));
    md.add_one_hot(row, "scheme_one_hot");
    out.S.push_back(row);
  }

  // Precedence: the consumer's stage index is never below the producer's.
  for (const auto& t : inst.g.tensors) {
    milp::LinExpr e;
    for (int i = 0; i < p; ++i) {
      e.add(out.A[size_t(t.dst)][size_t(i)], double(i));
      e.add(out.A[size_t(t.src)][size_t(i)], -double(i));
    }
    md.add_constraint(e, milp::Sense::ge, 0, "precedence");
  }

  // A used stage never follows an empty one; any mapping compresses to this
  // form with the same objective, so only index symmetry is pruned.
  for (int i = 1; i < p; ++i) {
    milp::LinExpr e;
    for (int k = 0; k < n; ++k) {
      e.add(out.A[size_t(k)][size_t(i - 1)], double(n));
      e.add(out.A[size_t(k)][size_t(i)], -1.0);
    }
    md.add_constraint(e, milp::Sense::ge, 0, "stage_prefix");
  }

  // Stage-presence products w[k][i][a] = A[k][i] AND s[k][a], created only
  // when the kernel's costs actually vary with the scheme.
  std::vector<milp::LinExpr> t_comp(size_t(p), milp::LinExpr{}), t_net(size_t(p), milp::LinExpr{}), t_p2p(size_t(p), milp::LinExpr{});
  std::vector<std::vector<std::vector<int>>> W(size_t(n), std::vector<std::vector<int>>{});
  for (int k = 0; k < n; ++k) {
    const auto& comp = inst.comp_cost[size_t(k)];
    const auto& comm = inst.comm_cost[size_t(k)];
    bool comp_varies = *std::max_element(comp.begin(), comp.end()) >
                       *std::min_element(comp.begin(), comp.end());
    bool comm_any = *std::max_element(comm.begin(), comm.end()) > 0;
    if (!comp_varies && !comm_any) {
      for (int i = 0; i < p; ++i) t_comp[size_t(i)].add(out.A[size_t(k)][size_t(i)], comp[0]);
      continue;
    }
    W[size_t(k)].assign(size_t(p), {});
    for (int i = 0; i < p; ++i) {
      milp::LinExpr sum_w;
      for (size_t a = 0; a < inst.schemes[size_t(k)].size(); ++a) {
        int w = md.lin_and(out.A[size_t(k)][size_t(i)], out.S[size_t(k)][size_t(a)],
                           "w_" + std::to_string(k) + "_" + std::to_string(i) + "_" +
                               std::to_string(a));
        W[size_t(k)][size_t(i)].push_back(w);
        sum_w.add(w, 1.0);
        if (comp[a] > 0) t_comp[size_t(i)].add(w, comp[a]);
        if (comm[a] > 0) t_net[size_t(i)].add(w, comm[a]);
      }
      // Valid at every integer point; sharpens propagation.
      sum_w.add(out.A[size_t(k)][size_t(i)], -1.0);
      md.add_constraint(sum_w, milp::Sense::eq, 0, "w_link");
    }
  }

  // Layout-conversion terms, charged to the producer's stage.
  for (int j = 0; j < m; ++j) {
    const auto& t = inst.g.tensors[size_t(j)];
    const auto& C = inst.conv[size_t(j)];
    double cmax = 0;
    for (const auto& row : C)
      for (double c : row) cmax = std::max(cmax, c);
    if (cmax <= 0) continue;
    for (size_t a = 0; a < C.size(); ++a) {
      for (size_t b = 0; b < C[a].size(); ++b) {
        if (C[a][b] <= 0) continue;
        int pair = md.lin_and(out.S[size_t(t.src)][a], out.S[size_t(t.dst)][b],
                              "y_" + std::to_string(j));
        for (int i = 0; i < p; ++i) {
          int q = md.lin_and(out.A[size_t(t.src)][size_t(i)], pair,
                             "q_" + std::to_string(j) + "_" + std::to_string(i));
          t_net[size_t(i)].add(q, C[a][b]);
        }
      }
    }
  }

  // Lifetime booleans via running assignment sums; charges point-to-point
  // time to every stage a crossing tensor spans.
  if (p > 1) {
    std::vector<std::vector<int>> cum(size_t(n), std::vector<int>{});  // cum[k][i] = sum_{t<=i} A[k][t]
    for (int k = 0; k < n; ++k) {
      bool needed = false;
      for (const auto& t : inst.g.tensors)
        if ((t.src == k || t.dst == k) && inst.p2p_cost[size_t(t.id)] > 0) needed = true;
      if (!needed) continue;
      cum[size_t(k)].assign(size_t(p), -1);
      for (int i = 0; i < p; ++i) {
        int c = md.add_bool("cum_" + std::to_string(k) + "_" + std::to_string(i));
        milp::LinExpr e = milp::LinExpr::of(c, -1.0);
        for (int t = 0; t <= i; ++t) e.add(out.A[size_t(k)][size_t(t)], 1.0);
        md.add_constraint(e, milp::Sense::eq, 0, "cum_def");
        cum[size_t(k)][size_t(i)] = c;
      }
    }
    for (int j = 0; j < m; ++j) {
      if (inst.p2p_cost[size_t(j)] <= 0) continue;
      const auto& t = inst.g.tensors[size_t(j)];
      for (int i = 0; i < p; ++i) {
        // L[j][i] = (cum_src[i] XOR cum_dst[i-1]) XOR (A_src[i] AND A_dst[i])
        int us = cum[size_t(t.src)][size_t(i)];
        int intra = md.lin_and(out.A[size_t(t.src)][size_t(i)], out.A[size_t(t.dst)][size_t(i)],
                               "b_" + std::to_string(j) + "_" + std::to_string(i));
        int l;
        if (i == 0) {
          l = md.lin_xor(us, intra, "L_" + std::to_string(j) + "_0");
        } else {
          int ut = cum[size_t(t.dst)][size_t(i - 1)];
          int w1 = md.lin_xor(us, ut, "lx_" + std::to_string(j) + "_" + std::to_string(i));
          l = md.lin_xor(w1, intra, "L_" + std::to_string(j) + "_" + std::to_string(i));
        }
        t_p2p[size_t(i)].add(l, inst.p2p_cost[size_t(j)]);
      }
    }
  }

  std::vector<milp::LinExpr> cri_terms;
  bool any_products = false;
  for (size_t k = 0; k < W.size(); ++k) any_products = any_products || !W[k].empty();
  for (int i = 0; i < p; ++i) {
    cri_terms.push_back(t_comp[size_t(i)]);
    if (!t_net[size_t(i)].terms.empty()) cri_terms.push_back(t_net[size_t(i)]);
    if (!t_p2p[size_t(i)].terms.empty()) cri_terms.push_back(t_p2p[size_t(i)]);
    if (any_products) {
      // Scheme-independent floor on the stage's compute time; sharpens the
      // bound while scheme variables are still open.
      milp::LinExpr floor_expr;
      for (int k = 0; k < n; ++k) {
        double mn = *std::min_element(inst.comp_cost[size_t(k)].begin(),
                                      inst.comp_cost[size_t(k)].end());
        if (mn > 0) floor_expr.add(out.A[size_t(k)][size_t(i)], mn);
      }
      if (!floor_expr.terms.empty()) cri_terms.push_back(floor_expr);
    }
  }
  int z_obj = md.minimize_max(cri_terms, "critical_time");

  // Constant floors on the bottleneck: the busiest stage is at least the
  // average stage load under the cheapest schemes, and at least the heaviest
  // single kernel.
  {
    double comp_total = 0, net_total = 0, heaviest = 0;
    for (int k = 0; k < n; ++k) {
      double mc = *std::min_element(inst.comp_cost[size_t(k)].begin(),
                                    inst.comp_cost[size_t(k)].end());
      double mn = *std::min_element(inst.comm_cost[size_t(k)].begin(),
                                    inst.comm_cost[size_t(k)].end());
      comp_total += mc;
      net_total += mn;
      heaviest = std::max(heaviest, mc);
    }
    double floor_c = std::max({comp_total / double(p), net_total / double(p), heaviest});
    if (floor_c > 0)
      md.add_constraint(milp::LinExpr::of(z_obj, 1.0), milp::Sense::ge, floor_c,
                        "objective_floor", /*redundant=*/true);
  }

  // Warm start: topological prefix split balanced by compute, cheapest
  // scheme per kernel by inherent-plus-compute cost.
  std::vector<int> order = topological_order(inst.g);
  std::vector<double> load(size_t(n), 0);
  double total = 0;
  for (int k = 0; k < n; ++k) {
    load[size_t(k)] = inst.comp_cost[size_t(k)][0];
    total += load[size_t(k)];
  }
  std::vector<std::pair<int, double>> hint;
  double acc = 0;
  for (int idx : order) {
    int stage = std::min(p - 1, int(std::floor(acc / std::max(1e-30, total) * p)));
    acc += load[size_t(idx)];
    for (int i = 0; i < p; ++i)
      hint.push_back({out.A[size_t(idx)][size_t(i)], i == stage ? 1.0 : 0.0});
    size_t best_a = 0;
    double best_c = milp::kInf;
    for (size_t a = 0; a < inst.schemes[size_t(idx)].size(); ++a) {
      double c = inst.comp_cost[size_t(idx)][a] + inst.comm_cost[size_t(idx)][a];
      if (c < best_c - 1e-15) {
        best_c = c;
        best_a = a;
      }
    }
    for (size_t a = 0; a < inst.schemes[size_t(idx)].size(); ++a)
      hint.push_back({out.S[size_t(idx)][a], a == best_a ? 1.0 : 0.0});
  }
  md.set_hint(hint);
  return out;
}

inline InterChipMapping solve_interchip(const InterChipInstance& inst,
                                        const milp::SolveOptions& opt = {}) {
  InterChipModel im = build_interchip(inst);
  milp::Solution sol = milp::solve(im.model, opt);
  if (sol.status == milp::SolveStatus::infeasible)
    throw infeasible_error("inter-chip optimization infeasible (binding: " +
                           sol.binding_constraint + ")");
  if (sol.status == milp::SolveStatus::timeout && sol.values.empty())
    throw timeout_error("inter-chip solve timed out with no incumbent");

  std::vector<int> part(size_t(inst.n()), 0), scheme(size_t(inst.n()), 0);
  for (int k = 0; k < inst.n(); ++k) {
    for (int i = 0; i < inst.p_max; ++i)
      if (sol.at(im.A[size_t(k)][size_t(i)])) part[size_t(k)] = i;
    for (size_t a = 0; a < inst.schemes[size_t(k)].size(); ++a)
      if (sol.at(im.S[size_t(k)][a])) scheme[size_t(k)] = int(a);
  }
  InterChipMapping map = evaluate_interchip(inst, part, scheme);
  map.optimal = sol.status == milp::SolveStatus::optimal;
  map.solver_nodes = sol.nodes;
  if (map.optimal && std::abs(map.objective - sol.objective) >
                         1e-6 * std::max(1.0, std::abs(sol.objective)))
    throw internal_error("solver objective " + std::to_string(sol.objective) +
                         " disagrees with evaluation " + std::to_string(map.objective));
  return map;
}

// ---------------------------------------------------------------------------
// Mapping file (inter-chip level)
// ---------------------------------------------------------------------------

inline nlohmann::json inter_mapping_to_json(const InterChipInstance& inst,
                                            const InterChipMapping& map) {
  nlohmann::json j;
  j["partitions"] = nlohmann::json::array();
  for (int i = 0; i < inst.p_max; ++i) {
    nlohmann::json stage = nlohmann::json::array();
    for (int k = 0; k < inst.n(); ++k)
      if (map.partition[size_t(k)] == i) stage.push_back(k);
    j["partitions"].push_back(stage);
  }
  j["schemes"] = nlohmann::json::object();
  for (int k = 0; k < inst.n(); ++k)
    j["schemes"][inst.g.kernels[size_t(k)].name] =
        inst.schemes[size_t(k)][size_t(map.scheme_choice[size_t(k)])].id;
  return j;
}

// Accepts kernel references by id or name; schemes keyed either way.
inline void inter_mapping_from_json(const InterChipInstance& inst, const nlohmann::json& j,
                                    std::vector<int>& part, std::vector<int>& scheme) {
  part.assign(size_t(inst.n()), -1);
  scheme.assign(size_t(inst.n()), 0);
  if (!j.contains("partitions") || !j["partitions"].is_array())
    throw parse_error("mapping file: missing 'partitions'");
  int stage = 0;
  for (const auto& js : j["partitions"]) {
    for (const auto& jk : js) {
      int k = -1;
      if (jk.is_number_integer()) k = jk.get<int>();
      else {
        std::string name = jk.get<std::string>();
        for (int i = 0; i < inst.n(); ++i)
          if (inst.g.kernels[size_t(i)].name == name) k = i;
      }
      if (k < 0 || k >= inst.n())
        throw validation_error("mapping file: unknown kernel " + jk.dump());
      part[size_t(k)] = stage;
    }
    ++stage;
  }
  for (int k = 0; k < inst.n(); ++k)
    if (part[size_t(k)] < 0)
      throw validation_error("mapping file: kernel '" + inst.g.kernels[size_t(k)].name +
                             "' not assigned to any partition");
  if (j.contains("schemes")) {
    for (auto& [key, val] : j["schemes"].items()) {
      int k = -1;
      for (int i = 0; i < inst.n(); ++i)
        if (inst.g.kernels[size_t(i)].name == key) k = i;
      if (k < 0 && !key.empty() && std::isdigit(static_cast<unsigned char>(key[0])))
        k = std::stoi(key);
      if (k < 0 || k >= inst.n())
        throw validation_error("mapping file: unknown kernel '" + key + "' in schemes");
      std::string want = val.get<std::string>();
      int found = -1;
      for (size_t a = 0; a < inst.schemes[size_t(k)].size(); ++a)
        if (inst.schemes[size_t(k)][a].id == want) found = int(a);
      if (found < 0)
        throw validation_error("mapping file: kernel '" + key + "' has no scheme '" + want + "'");
      scheme[size_t(k)] = found;
    }
  }
}

}  // namespace dfmap
