#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <dfmap/common.hpp>
#include <dfmap/interchip.hpp>
#include <dfmap/intrachip.hpp>

namespace dfmap {

// Exhaustive reference search over small instances. Shares the evaluate_*
// paths with the solvers but none of the MILP machinery, so agreement between
// the two certifies solver optimality.

struct OracleLimits {
  int max_kernels = 6;
  int max_partitions = 3;
  int max_schemes = 2;
  int max_tile_menu = 3;
  double max_evaluations = 1e7;
};

struct OracleResult {
  std::vector<int> partition;
  std::vector<int> choice;  // scheme index (inter) or menu index (intra)
  Seconds objective = 0;
  std::uint64_t assignments = 0;   // precedence-feasible partition assignments
  std::uint64_t evaluations = 0;   // full candidate evaluations
  bool found = false;
};

namespace oracle_detail {

// DFS over kernel->partition maps, pruning edges that would run backward.
template <typename Fn>
void enumerate_assignments(int n, int p, const std::vector<TensorEdge>& tensors,
                           std::vector<int>& part, int k, Fn&& on_complete) {
  if (k == n) {
    on_complete();
    return;
  }
  for (int i = 0; i < p; ++i) {
    bool ok = true;
    for (const auto& t : tensors) {
      if (t.dst == k && t.src < k && part[size_t(t.src)] > i) ok = false;
      if (t.src == k && t.dst < k && part[size_t(t.dst)] < i) ok = false;
    }
    if (!ok) continue;
    part[size_t(k)] = i;
    enumerate_assignments(n, p, tensors, part, k + 1, on_complete);
  }
}

template <typename Fn>
void enumerate_choices(const std::vector<int>& sizes, std::vector<int>& choice, int k,
                       Fn&& on_complete) {
  if (k == int(sizes.size())) {
    on_complete();
    return;
  }
  for (int a = 0; a < sizes[size_t(k)]; ++a) {
    choice[size_t(k)] = a;
    enumerate_choices(sizes, choice, k + 1, on_complete);
  }
}

inline void guard(double est, double limit) {
  if (est > limit)
    throw limit_error("oracle enumeration of ~" + std::to_string(est) +
                      " candidates exceeds the guard of " + std::to_string(limit));
}

}  // namespace oracle_detail

inline OracleResult enumerate_interchip(const InterChipInstance& inst,
                                        const OracleLimits& lim = {}) {
  const int n = inst.n(), p = inst.p_max;
  if (n > lim.max_kernels)
    throw limit_error("oracle limit: " + std::to_string(n) + " kernels > max " +
                      std::to_string(lim.max_kernels));
  if (p > lim.max_partitions)
    throw limit_error("oracle limit: " + std::to_string(p) + " partitions > max " +
                      std::to_string(lim.max_partitions));
  std::vector<int> sizes;
  double combos = 1;
  for (int k = 0; k < n; ++k) {
    int z = int(inst.schemes[size_t(k)].size());
    if (z > lim.max_schemes)
      throw limit_error("oracle limit: kernel has " + std::to_string(z) + " schemes > max " +
                        std::to_string(lim.max_schemes));
    sizes.push_back(z);
    combos *= z;
  }
  oracle_detail::guard(std::pow(double(p), double(n)) * combos, lim.max_evaluations);

  OracleResult best;
  std::vector<int> part(size_t(n), 0), choice(size_t(n), 0);
  oracle_detail::enumerate_assignments(n, p, inst.g.tensors, part, 0, [&] {
    ++best.assignments;
    oracle_detail::enumerate_choices(sizes, choice, 0, [&] {
      ++best.evaluations;
      InterChipMapping m = evaluate_interchip(inst, part, choice);
      if (!best.found || m.objective < best.objective * (1.0 - 1e-12)) {
        best.found = true;
        best.objective = m.objective;
        best.partition = part;
        best.choice = choice;
      }
    });
  });
  if (!best.found) throw infeasible_error("oracle: no precedence-feasible assignment");
  return best;
}

inline OracleResult enumerate_intrachip(const IntraChipInstance& inst,
                                        const OracleLimits& lim = {}) {
  const int n = inst.n(), p = inst.p_max;
  if (n > std::max(lim.max_kernels, 5))
    throw limit_error("oracle limit: too many kernels");
  if (p > lim.max_partitions)
    throw limit_error("oracle limit: too many partitions");
  if (int(inst.menu.size()) > lim.max_tile_menu)
    throw limit_error("oracle limit: tile menu too large");
  std::vector<int> sizes(size_t(n), int(inst.menu.size()));
  oracle_detail::guard(std::pow(double(p), double(n)) *
                           std::pow(double(inst.menu.size()), double(n)),
                       lim.max_evaluations);

  OracleResult best;
  std::vector<int> part(size_t(n), 0), choice(size_t(n), 0), tiles(size_t(n), 1);
  oracle_detail::enumerate_assignments(n, p, inst.tensors, part, 0, [&] {
    ++best.assignments;
    oracle_detail::enumerate_choices(sizes, choice, 0, [&] {
      ++best.evaluations;
      for (int k = 0; k < n; ++k) tiles[size_t(k)] = inst.menu[size_t(choice[size_t(k)])];
      try {
        IntraChipMapping m = evaluate_intrachip(inst, part, tiles);
        if (!best.found || m.objective < best.objective * (1.0 - 1e-12)) {
          best.found = true;
          best.objective = m.objective;
          best.partition = part;
          best.choice = choice;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::validation) throw;  // capacity-infeasible point
      }
    });
  });
  if (!best.found) throw infeasible_error("oracle: no feasible intra-chip mapping");
  return best;
}

}  // namespace dfmap
