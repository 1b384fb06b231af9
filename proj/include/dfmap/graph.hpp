#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <dfmap/common.hpp>

namespace dfmap {

enum class KernelKind {
  gemm,
  attention_score,
  softmax,
  elementwise,
  embedding_lookup,
  fft_stage,
  lu_stage,
};

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::gemm: return "gemm";
    case KernelKind::attention_score: return "attention-score";
    case KernelKind::softmax: return "softmax";
    case KernelKind::elementwise: return "elementwise";
    case KernelKind::embedding_lookup: return "embedding-lookup";
    case KernelKind::fft_stage: return "fft-stage";
    case KernelKind::lu_stage: return "lu-stage";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  for (KernelKind k : {KernelKind::gemm, KernelKind::attention_score, KernelKind::softmax,
                       KernelKind::elementwise, KernelKind::embedding_lookup,
                       KernelKind::fft_stage, KernelKind::lu_stage}) {
    if (s == to_string(k)) return k;
  }
  throw validation_error("unknown kernel kind '" + s + "'");
}

struct GemmDims {
  // Batch is folded into m, so flop = 2*m*k*n.
  std::int64_t m = 0;
  std::int64_t k = 0;
  std::int64_t n = 0;
};

struct Kernel {
  int id = -1;
  std::string name;
  KernelKind kind = KernelKind::gemm;
  Flops flop = 0;
  std::optional<GemmDims> gemm_dims;
  // Applicable sharding-scheme identifiers; resolved against the scheme
  // catalog when tensor parallelism is in play.
  std::vector<std::string> scheme_ids;
  // Bytes of parameters the kernel keeps resident (gemm weights, embedding
  // tables). Sharded across TP chips for weight-sharding schemes.
  Bytes weight_bytes = 0;
};

struct TensorEdge {
  int id = -1;
  int src = -1;
  int dst = -1;
  Bytes bytes = 0;
};

struct DataflowGraph {
  std::vector<Kernel> kernels;
  std::vector<TensorEdge> tensors;
  // Bytes per element used when a file gives element counts instead of bytes.
  double element_size = 2.0;

  int n() const { return static_cast<int>(kernels.size()); }
  int m() const { return static_cast<int>(tensors.size()); }

  std::vector<TensorEdge> out_edges(int kernel_id) const {
    std::vector<TensorEdge> r;
    for (const auto& t : tensors)
      if (t.src == kernel_id) r.push_back(t);
    return r;
  }
  std::vector<TensorEdge> in_edges(int kernel_id) const {
    std::vector<TensorEdge> r;
    for (const auto& t : tensors)
      if (t.dst == kernel_id) r.push_back(t);
    return r;
  }

  Flops total_flop() const {
    Flops s = 0;
    for (const auto& k : kernels) s += k.flop;
    return s;
  }
  Bytes total_weight_bytes() const {
    Bytes s = 0;
    for (const auto& k : kernels) s += k.weight_bytes;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Topological order of kernels; throws a validation error naming a kernel on
// a cycle. Deterministic (smallest-id-first among ready kernels).
inline std::vector<int> topological_order(const DataflowGraph& g) {
  int n = g.n();
  std::vector<int> indeg(n, 0);
  for (const auto& t : g.tensors) indeg[t.dst]++;
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> done(n, 0);
  for (int round = 0; round < n; ++round) {
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (!done[i] && indeg[i] == 0) { pick = i; break; }
    }
    if (pick < 0) {
      for (int i = 0; i < n; ++i)
        if (!done[i])
          throw validation_error("cycle involving kernel '" + g.kernels[i].name + "'");
    }
    done[pick] = 1;
    order.push_back(pick);
    for (const auto& t : g.tensors)
      if (t.src == pick) indeg[t.dst]--;
  }
  return order;
}

inline void validate_graph(const DataflowGraph& g) {
  int n = g.n();
  for (int i = 0; i < n; ++i) {
    const Kernel& k = g.kernels[i];
    if (k.id != i) throw validation_error("kernel ids must be dense 0-based (kernel " + k.name + ")");
    if (k.flop < 0) throw validation_error("negative flop in kernel '" + k.name + "'");
    if (k.kind == KernelKind::gemm && k.gemm_dims) {
      const auto& d = *k.gemm_dims;
      Flops expect = 2.0 * double(d.m) * double(d.k) * double(d.n);
      if (std::abs(expect - k.flop) > 1e-6 * std::max(1.0, expect))
        throw validation_error("kernel '" + k.name + "': flop does not equal 2*M*K*N");
    }
  }
  for (int j = 0; j < g.m(); ++j) {
    const TensorEdge& t = g.tensors[j];
    if (t.id != j) throw validation_error("tensor ids must be dense 0-based");
    if (t.src < 0 || t.src >= n || t.dst < 0 || t.dst >= n)
      throw validation_error("dangling endpoint: tensor " + std::to_string(j) +
                             " references kernel " + std::to_string(t.src < 0 || t.src >= n ? t.src : t.dst) +
                             " of " + std::to_string(n) + " kernels");
    if (t.src == t.dst)
      throw validation_error("self-edge on kernel '" + g.kernels[t.src].name + "'");
    if (!(t.bytes > 0))
      throw validation_error("nonpositive size on tensor " + std::to_string(j));
  }
  topological_order(g);  // throws on cycles
}

// ---------------------------------------------------------------------------
// Fan-out normalization
// ---------------------------------------------------------------------------

// Internal pre-normalization edge form: one source, any number of consumers.
struct RawEdge {
  int src = -1;
  std::vector<int> dsts;
  Bytes bytes = 0;
};

// Multi-consumer edges are replaced by one tensor per consumer with identical
// bytes (consumers replicate the tensor). Single-consumer graphs pass through
// unchanged, so the rewrite is idempotent.
inline DataflowGraph normalize_fanout(const DataflowGraph& g, const std::vector<RawEdge>& raw) {
  DataflowGraph out;
  out.kernels = g.kernels;
  out.element_size = g.element_size;
  int id = 0;
  for (const auto& e : raw) {
    for (int dst : e.dsts) {
      TensorEdge t;
      t.id = id++;
      t.src = e.src;
      t.dst = dst;
      t.bytes = e.bytes;
      out.tensors.push_back(t);
    }
  }
  return out;
}

inline DataflowGraph normalize_fanout(const DataflowGraph& g) {
  std::vector<RawEdge> raw;
  raw.reserve(g.tensors.size());
  for (const auto& t : g.tensors) raw.push_back(RawEdge{t.src, {t.dst}, t.bytes});
  return normalize_fanout(g, raw);
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------
//
// {
//   "element_size": 2,
//   "kernels": [ {"name": "...", "kind": "gemm",
//                 "flop": 1.0e9 | "gemm_dims": [M, K, N],
//                 "schemes": ["..."], "weight_bytes": 0} , ...],
//   "tensors": [ {"src": 0, "dst": 1 | [1, 2], "bytes": 8 | "elements": 4} ]
// }

inline DataflowGraph graph_from_json(const nlohmann::json& j) {
  DataflowGraph g;
  g.element_size = j.value("element_size", 2.0);
  if (!j.contains("kernels") || !j["kernels"].is_array())
    throw parse_error("workload file: missing 'kernels' array");
  int id = 0;
  for (const auto& jk : j["kernels"]) {
    Kernel k;
    k.id = id++;
    k.name = jk.value("name", "k" + std::to_string(k.id));
    k.kind = kernel_kind_from_string(jk.value("kind", "gemm"));
    if (jk.contains("gemm_dims")) {
      const auto& d = jk["gemm_dims"];
      if (!d.is_array() || d.size() != 3)
        throw parse_error("kernel '" + k.name + "': gemm_dims must be [M, K, N]");
      k.gemm_dims = GemmDims{d[0].get<std::int64_t>(), d[1].get<std::int64_t>(),
                             d[2].get<std::int64_t>()};
      k.flop = 2.0 * double(k.gemm_dims->m) * double(k.gemm_dims->k) * double(k.gemm_dims->n);
      if (jk.contains("flop")) k.flop = jk["flop"].get<double>();
    } else if (jk.contains("flop")) {
      k.flop = jk["flop"].get<double>();
    } else {
      throw parse_error("kernel '" + k.name + "': needs flop or gemm_dims");
    }
    if (jk.contains("schemes"))
      for (const auto& s : jk["schemes"]) k.scheme_ids.push_back(s.get<std::string>());
    k.weight_bytes = jk.value("weight_bytes", 0.0);
    g.kernels.push_back(k);
  }
  std::vector<RawEdge> raw;
  if (j.contains("tensors")) {
    for (const auto& jt : j["tensors"]) {
      RawEdge e;
      e.src = jt.value("src", -1);
      if (jt.contains("dst")) {
        if (jt["dst"].is_array())
          for (const auto& d : jt["dst"]) e.dsts.push_back(d.get<int>());
        else
          e.dsts.push_back(jt["dst"].get<int>());
      }
      if (jt.contains("bytes"))
        e.bytes = jt["bytes"].get<double>();
      else if (jt.contains("elements"))
        e.bytes = jt["elements"].get<double>() * g.element_size;
      else
        throw parse_error("tensor: needs bytes or elements");
      raw.push_back(e);
    }
  }
  g = normalize_fanout(g, raw);
  validate_graph(g);
  return g;
}

inline nlohmann::json graph_to_json(const DataflowGraph& g) {
  nlohmann::json j;
  j["element_size"] = g.element_size;
  j["kernels"] = nlohmann::json::array();
  for (const auto& k : g.kernels) {
    nlohmann::json jk;
    jk["name"] = k.name;
    jk["kind"] = to_string(k.kind);
    jk["flop"] = k.flop;
    if (k.gemm_dims) jk["gemm_dims"] = {k.gemm_dims->m, k.gemm_dims->k, k.gemm_dims->n};
    if (!k.scheme_ids.empty()) jk["schemes"] = k.scheme_ids;
    if (k.weight_bytes > 0) jk["weight_bytes"] = k.weight_bytes;
    j["kernels"].push_back(jk);
  }
  j["tensors"] = nlohmann::json::array();
  for (const auto& t : g.tensors)
    j["tensors"].push_back({{"src", t.src}, {"dst", t.dst}, {"bytes", t.bytes}});
  return j;
}

inline DataflowGraph load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw parse_error("cannot open workload file '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("workload file '" + path + "': " + e.what());
  }
  try {
    return graph_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("workload file '" + path + "': " + e.what());
  }
}

inline void save_graph(const DataflowGraph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw parse_error("cannot open '" + path + "' for writing");
  f << graph_to_json(g).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

struct GptParams {
  std::int64_t batch = 1;
  std::int64_t seq = 2048;
  std::int64_t hidden = 12288;
  std::int64_t heads = 96;
  std::int64_t ffn_mult = 4;
  double element_size = 2.0;
};

// Single transformer layer: Q/K/V projections, two attention matmuls with a
// softmax between them, output projection, two FFN matmuls, residual add.
// The residual add consumes only the FFN1 output; the skip operand is treated
// as a resident activation so every tensor keeps a single producer.
inline DataflowGraph generate_gpt_layer(const GptParams& p) {
  if (p.batch < 1 || p.seq < 1 || p.hidden < 1 || p.heads < 1 || p.ffn_mult < 1)
    throw validation_error("gpt generator: all parameters must be >= 1");
  if (p.hidden % p.heads != 0)
    throw validation_error("gpt generator: hidden must be divisible by heads");

  const double b = double(p.batch), s = double(p.seq), h = double(p.hidden);
  const double e = p.element_size;
  const std::int64_t tokens = p.batch * p.seq;

  DataflowGraph g;
  g.element_size = e;
  auto add_kernel = [&](const std::string& name, KernelKind kind, Flops flop,
                        std::optional<GemmDims> dims, Bytes weights) {
    Kernel k;
    k.id = g.n();
    k.name = name;
    k.kind = kind;
    k.flop = flop;
    k.gemm_dims = dims;
    k.weight_bytes = weights;
    g.kernels.push_back(k);
    return k.id;
  };

  const Flops proj_flop = 2.0 * b * s * h * h;
  const Flops mha_flop = 2.0 * b * s * s * h;
  const Flops ffn_flop = 2.0 * double(p.ffn_mult) * b * s * h * h;
  const double score_elems = b * double(p.heads) * s * s;
  const double act_elems = b * s * h;

  int q = add_kernel("Q", KernelKind::gemm, proj_flop, GemmDims{tokens, p.hidden, p.hidden}, h * h * e);
  int k = add_kernel("K", KernelKind::gemm, proj_flop, GemmDims{tokens, p.hidden, p.hidden}, h * h * e);
  int v = add_kernel("V", KernelKind::gemm, proj_flop, GemmDims{tokens, p.hidden, p.hidden}, h * h * e);
  int mha1 = add_kernel("MHA1", KernelKind::attention_score, mha_flop, std::nullopt, 0);
  int sm = add_kernel("Softmax", KernelKind::softmax, 5.0 * score_elems, std::nullopt, 0);
  int mha2 = add_kernel("MHA2", KernelKind::attention_score, mha_flop, std::nullopt, 0);
  int proj = add_kernel("Proj", KernelKind::gemm, proj_flop, GemmDims{tokens, p.hidden, p.hidden}, h * h * e);
  int ffn0 = add_kernel("FFN0", KernelKind::gemm, ffn_flop,
                        GemmDims{tokens, p.hidden, p.ffn_mult * p.hidden}, double(p.ffn_mult) * h * h * e);
  int ffn1 = add_kernel("FFN1", KernelKind::gemm, ffn_flop,
                        GemmDims{tokens, p.ffn_mult * p.hidden, p.hidden}, double(p.ffn_mult) * h * h * e);
  int add = add_kernel("Add", KernelKind::elementwise, act_elems, std::nullopt, 0);

  auto edge = [&](int src, int dst, double bytes) {
    TensorEdge t;
    t.id = g.m();
    t.src = src;
    t.dst = dst;
    t.bytes = bytes;
    g.tensors.push_back(t);
  };
  edge(q, mha1, act_elems * e);
  edge(k, mha1, act_elems * e);
  edge(mha1, sm, score_elems * e);
  edge(sm, mha2, score_elems * e);
  edge(v, mha2, act_elems * e);
  edge(mha2, proj, act_elems * e);
  edge(proj, ffn0, act_elems * e);
  edge(ffn0, ffn1, double(p.ffn_mult) * act_elems * e);
  edge(ffn1, add, act_elems * e);

  validate_graph(g);
  return g;
}

struct DlrmParams {
  std::int64_t tables = 8;
  std::int64_t emb_dim = 128;
  std::int64_t batch = 1024;
  std::vector<std::int64_t> mlp_dims = {1024, 1024, 1};
  double rows_per_table = 1e6;
  double element_size = 2.0;
};

struct HplParams {
  std::int64_t n = 4096;
  std::int64_t block = 1024;
  double element_size = 2.0;
};

struct FftParams {
  std::int64_t points = 1 << 20;
  std::int64_t radix = 2;
  double element_size = 2.0;
};

// Simplified canonical DAGs for the non-LLM workloads. These exercise the
// all-to-all-heavy (dlrm/fft) and dense-compute (hpl) regimes; they are not
// bit-exact replicas of production graphs.
inline DataflowGraph generate_dlrm(const DlrmParams& p) {
  if (p.tables < 1 || p.emb_dim < 1 || p.batch < 1 || p.mlp_dims.empty())
    throw validation_error("dlrm generator: invalid dimensions");
  const double e = p.element_size;
  DataflowGraph g;
  g.element_size = e;

  Kernel emb;
  emb.id = 0;
  emb.name = "EmbLookup";
  emb.kind = KernelKind::embedding_lookup;
  // One gather per (sample, table): counted as emb_dim flop each.
  emb.flop = double(p.batch) * double(p.tables) * double(p.emb_dim);
  emb.weight_bytes = p.rows_per_table * double(p.tables) * double(p.emb_dim) * e;
  g.kernels.push_back(emb);

  const double feat = double(p.tables) * double(p.emb_dim);
  Kernel inter;
  inter.id = 1;
  inter.name = "Interact";
  inter.kind = KernelKind::gemm;
  inter.gemm_dims = GemmDims{p.batch, p.emb_dim, p.tables * p.tables};
  inter.flop = 2.0 * double(p.batch) * double(p.emb_dim) * double(p.tables * p.tables);
  g.kernels.push_back(inter);

  TensorEdge t0;
  t0.id = 0;
  t0.src = 0;
  t0.dst = 1;
  t0.bytes = double(p.batch) * feat * e;
  g.tensors.push_back(t0);

  std::int64_t prev_dim = p.tables * p.tables + p.tables * p.emb_dim;
  int prev = 1;
  for (size_t i = 0; i < p.mlp_dims.size(); ++i) {
    Kernel mlp;
    mlp.id = g.n();
    mlp.name = "MLP" + std::to_string(i);
    mlp.kind = KernelKind::gemm;
    mlp.gemm_dims = GemmDims{p.batch, prev_dim, p.mlp_dims[i]};
    mlp.flop = 2.0 * double(p.batch) * double(prev_dim) * double(p.mlp_dims[i]);
    mlp.weight_bytes = double(prev_dim) * double(p.mlp_dims[i]) * e;
    g.kernels.push_back(mlp);
    TensorEdge t;
    t.id = g.m();
    t.src = prev;
    t.dst = mlp.id;
    t.bytes = double(p.batch) * double(prev_dim) * e;
    g.tensors.push_back(t);
    prev = mlp.id;
    prev_dim = p.mlp_dims[i];
  }
  validate_graph(g);
  return g;
}

// Blocked right-looking LU: per block step, a panel factorization followed by
// a trailing-matrix GEMM update. Totals approach (2/3)N^3 for nb << N.
inline DataflowGraph generate_hpl(const HplParams& p) {
  if (p.n < 1 || p.block < 1 || p.block > p.n || p.n % p.block != 0)
    throw validation_error("hpl generator: need 1 <= block <= n and block | n");
  const double e = p.element_size;
  const std::int64_t steps = p.n / p.block;
  DataflowGraph g;
  g.element_size = e;
  int prev_update = -1;
  for (std::int64_t s = 0; s < steps; ++s) {
    const double rows = double(p.n - s * p.block);  // active trailing size
    const double nb = double(p.block);
    Kernel panel;
    panel.id = g.n();
    panel.name = "Panel" + std::to_string(s);
    panel.kind = KernelKind::lu_stage;
    panel.flop = rows * nb * nb;  // factor the m x nb panel
    g.kernels.push_back(panel);
    if (prev_update >= 0) {
      TensorEdge t;
      t.id = g.m();
      t.src = prev_update;
      t.dst = panel.id;
      t.bytes = rows * rows * e;  // trailing matrix carried between steps
      g.tensors.push_back(t);
    }
    const double trail = rows - nb;
    if (trail > 0) {
      Kernel upd;
      upd.id = g.n();
      upd.name = "Update" + std::to_string(s);
      upd.kind = KernelKind::gemm;
      upd.gemm_dims = GemmDims{std::int64_t(trail), p.block, std::int64_t(trail)};
      upd.flop = 2.0 * trail * nb * trail;
      g.kernels.push_back(upd);
      TensorEdge t;
      t.id = g.m();
      t.src = panel.id;
      t.dst = upd.id;
      t.bytes = rows * nb * e;  // factored panel feeding the update
      g.tensors.push_back(t);
      prev_update = upd.id;
    }
  }
  validate_graph(g);
  return g;
}

// Radix-r decimation: log_r(N) stages, each touching all N points; transposes
// between stages make the inter-stage tensors all-to-all-inducing. Total flop
// is the standard 5 N log2 N.
inline DataflowGraph generate_fft(const FftParams& p) {
  if (p.points < 2 || p.radix < 2)
    throw validation_error("fft generator: need points >= 2 and radix >= 2");
  double lg_points = std::log2(double(p.points));
  double lg_radix = std::log2(double(p.radix));
  double stages_f = lg_points / lg_radix;
  std::int64_t stages = std::llround(stages_f);
  if (std::abs(stages_f - double(stages)) > 1e-9 || stages < 1)
    throw validation_error("fft generator: points must be a power of radix");
  const double e = p.element_size;
  const double total_flop = 5.0 * double(p.points) * lg_points;
  DataflowGraph g;
  g.element_size = e;
  for (std::int64_t s = 0; s < stages; ++s) {
    Kernel k;
    k.id = g.n();
    k.name = "FFT" + std::to_string(s);
    k.kind = KernelKind::fft_stage;
    k.flop = total_flop / double(stages);
    g.kernels.push_back(k);
    if (s > 0) {
      TensorEdge t;
      t.id = g.m();
      t.src = int(s - 1);
      t.dst = int(s);
      t.bytes = double(p.points) * 2.0 * e;  // complex values
      g.tensors.push_back(t);
    }
  }
  validate_graph(g);
  return g;
}

}  // namespace dfmap
