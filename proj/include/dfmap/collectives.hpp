#pragma once

#include <string>
#include <vector>

#include <dfmap/common.hpp>
#include <dfmap/system.hpp>

namespace dfmap {

enum class CollectiveKind {
  all_reduce,
  all_gather,
  reduce_scatter,
  broadcast,
  all_to_all,
  p2p,
};

inline const char* to_string(CollectiveKind k) {
  switch (k) {
    case CollectiveKind::all_reduce: return "all_reduce";
    case CollectiveKind::all_gather: return "all_gather";
    case CollectiveKind::reduce_scatter: return "reduce_scatter";
    case CollectiveKind::broadcast: return "broadcast";
    case CollectiveKind::all_to_all: return "all_to_all";
    case CollectiveKind::p2p: return "p2p";
  }
  return "?";
}

inline CollectiveKind collective_from_string(const std::string& s) {
  for (CollectiveKind k : {CollectiveKind::all_reduce, CollectiveKind::all_gather,
                           CollectiveKind::reduce_scatter, CollectiveKind::broadcast,
                           CollectiveKind::all_to_all, CollectiveKind::p2p}) {
    if (s == to_string(k)) return k;
  }
  throw validation_error("unknown collective '" + s + "'");
}

// Analytical alpha-beta costs on one-dimensional topologies. `bytes` is the
// full logical tensor size; the formulas fold in per-chip shares. No
// contention factor is applied anywhere: link bandwidth is assumed fully
// utilizable.
//
// Formula sources, per (kind, topology):
//   ring all_reduce        2(p-1)/p * b/B + 2(p-1)a   (reduce-scatter + all-gather)
//   ring all_gather / rs   (p-1)/p * b/B + (p-1)a
//   ring broadcast         (p-1)/p * b/B + (p-1)a     (scatter + pipelined fill)
//   switch/fc broadcast    b/B + a                     (root link serializes)
//   switch all_to_all      (p-1)/p * b/B + a           (per-chip egress via uplink)
//   fc all_to_all          b/(pB) + a                  (p-1 direct links in parallel)
//   ring all_to_all        (p^2-1)/(4p) * b/B + (p-1)a (store-and-forward hop total)
//   p2p                    b/B + a
// On switch and fully-connected fabrics the gather/reduce family runs as a
// logical ring, so those reuse the ring bandwidth terms (switch keeps per-hop
// alpha; fully-connected pays a single alpha since every pair is one hop).
inline Seconds collective_cost(CollectiveKind kind, Bytes bytes, const NetworkDim& dim) {
  if (bytes < 0) throw validation_error("collective_cost: negative bytes");
  if (dim.size < 1) throw validation_error("collective_cost: dim size must be >= 1");
  if (dim.size == 1 || bytes == 0) return 0;
  const double p = double(dim.size);
  const double B = dim.link_bw;
  const double a = dim.hop_latency;
  switch (kind) {
    case CollectiveKind::all_reduce:
      switch (dim.topology) {
        case Topology::ring:
        case Topology::switched: return 2.0 * (p - 1) / p * bytes / B + 2.0 * (p - 1) * a;
        case Topology::fully_connected: return 2.0 * bytes / (p * B) + 2.0 * a;
      }
      break;
    case CollectiveKind::all_gather:
    case CollectiveKind::reduce_scatter:
      switch (dim.topology) {
        case Topology::ring:
        case Topology::switched: return (p - 1) / p * bytes / B + (p - 1) * a;
        case Topology::fully_connected: return bytes / (p * B) + a;
      }
      break;
    case CollectiveKind::broadcast:
      switch (dim.topology) {
        case Topology::ring: return (p - 1) / p * bytes / B + (p - 1) * a;
        case Topology::switched:
        case Topology::fully_connected: return bytes / B + a;
      }
      break;
    case CollectiveKind::all_to_all:
      switch (dim.topology) {
        case Topology::switched: return (p - 1) / p * bytes / B + a;
        case Topology::fully_connected: return bytes / (p * B) + a;
        case Topology::ring: return (p * p - 1) / (4.0 * p) * bytes / B + (p - 1) * a;
      }
      break;
    case CollectiveKind::p2p:
      return bytes / B + a;
  }
  throw validation_error(std::string("unsupported collective/topology pair: ") + to_string(kind) +
                         " on " + to_string(dim.topology));
}

// Multi-dimensional collectives run as sequential per-dimension stages with
// the per-stage payload shrinking by the product of the dimension sizes
// already covered. All-reduce stages as reduce-scatter inward across every
// dimension, then all-gather back outward.
inline Seconds hierarchical_cost(CollectiveKind kind, Bytes bytes,
                                 const std::vector<NetworkDim>& dims) {
  if (dims.empty()) throw validation_error("hierarchical_cost: no dimensions given");
  if (bytes == 0) return 0;
  if (kind == CollectiveKind::all_reduce) {
    Seconds total = 0;
    double share = 1.0;
    for (const auto& d : dims) {
      total += collective_cost(CollectiveKind::reduce_scatter, bytes * share, d);
      share /= double(d.size);
    }
    for (size_t i = dims.size(); i-- > 0;) {
      share *= double(dims[i].size);
      total += collective_cost(CollectiveKind::all_gather, bytes * share, dims[i]);
    }
    return total;
  }
  Seconds total = 0;
  double share = 1.0;
  for (const auto& d : dims) {
    total += collective_cost(kind, bytes * share, d);
    if (kind != CollectiveKind::p2p && kind != CollectiveKind::broadcast)
      share /= double(d.size);
  }
  return total;
}

}  // namespace dfmap
