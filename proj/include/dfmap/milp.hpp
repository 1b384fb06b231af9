#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <dfmap/common.hpp>

namespace dfmap::milp {

constexpr double kInf = 1e30;

enum class VarType { boolean, integer, continuous };

struct Variable {
  VarType type = VarType::boolean;
  double lo = 0, hi = 1;
  std::string name;
  // Higher priority branches earlier; value order tries `hi` end first when
  // try_high_first is set (useful for assignment booleans).
  int branch_priority = 0;
  bool try_high_first = false;
};

struct LinTerm {
  int var = -1;
  double coef = 0;
};

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0;

  LinExpr& add(int var, double coef) {
    if (coef != 0) terms.push_back({var, coef});
    return *this;
  }
  static LinExpr of(int var, double coef = 1.0) {
    LinExpr e;
    e.add(var, coef);
    return e;
  }
};

enum class Sense { le, ge, eq };

struct Constraint {
  LinExpr expr;
  Sense sense = Sense::le;
  double rhs = 0;
  std::string tag;  // constraint class, reported on infeasibility
  // Implied by the other constraints at every integer point; participates in
  // propagation but not in independence analysis.
  bool redundant = false;
};

enum class SolveStatus { optimal, infeasible, timeout };

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  double objective = 0;
  std::vector<double> values;
  std::string binding_constraint;  // set when infeasible
  std::uint64_t nodes = 0;

  double value(int var) const { return values[size_t(var)]; }
  bool at(int var) const { return values[size_t(var)] > 0.5; }
};

struct SolveOptions {
  double timeout_s = 300.0;
  std::uint64_t seed = 0;  // accepted for interface stability; search is order-deterministic
  std::string backend = "builtin_bb";
  // Prune anything at or above this objective; used when recursing into
  // independent subproblems with a budget. "No solution" under a finite cap
  // means "nothing better than the cap".
  double objective_cap = kInf;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class Model {
public:
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  LinExpr objective;  // minimized
  bool objective_set = false;
  std::vector<std::pair<int, double>> hint;  // warm-start values for int vars

  int add_var(VarType type, double lo, double hi, const std::string& name) {
    Variable v;
    v.type = type;
    v.lo = lo;
    v.hi = hi;
    v.name = name;
    vars.push_back(v);
    return int(vars.size()) - 1;
  }
  int add_bool(const std::string& name, int priority = 0, bool try_high_first = false) {
    int v = add_var(VarType::boolean, 0, 1, name);
    vars[size_t(v)].branch_priority = priority;
    vars[size_t(v)].try_high_first = try_high_first;
    return v;
  }
  int add_continuous(const std::string& name, double lo = 0, double hi = kInf) {
    return add_var(VarType::continuous, lo, hi, name);
  }

  void add_constraint(LinExpr expr, Sense sense, double rhs, const std::string& tag,
                      bool redundant = false) {
    for (const auto& t : expr.terms)
      if (t.var < 0 || t.var >= int(vars.size()))
        throw validation_error("constraint references undeclared variable");
    rhs -= expr.constant;
    expr.constant = 0;
    cons.push_back(Constraint{std::move(expr), sense, rhs, tag, redundant});
  }

  // z = x AND y:  z <= x, z <= y, z >= x + y - 1
  int lin_and(int x, int y, const std::string& name = "and") {
    int z = add_bool(name);
    add_constraint(LinExpr::of(z).add(x, -1), Sense::le, 0, "and_def");
    add_constraint(LinExpr::of(z).add(y, -1), Sense::le, 0, "and_def");
    add_constraint(LinExpr::of(x).add(y, 1).add(z, -1), Sense::le, 1, "and_def");
    return z;
  }

  // z = x AND y AND w (one auxiliary, tight at boolean points).
  int lin_and3(int x, int y, int w, const std::string& name = "and3") {
    int z = add_bool(name);
    add_constraint(LinExpr::of(z).add(x, -1), Sense::le, 0, "and_def");
    add_constraint(LinExpr::of(z).add(y, -1), Sense::le, 0, "and_def");
    add_constraint(LinExpr::of(z).add(w, -1), Sense::le, 0, "and_def");
    add_constraint(LinExpr::of(x).add(y, 1).add(w, 1).add(z, -1), Sense::le, 2, "and_def");
    return z;
  }

  // z = x XOR y:  z >= x - y, z >= y - x, z <= x + y, z <= 2 - x - y
  int lin_xor(int x, int y, const std::string& name = "xor") {
    int z = add_bool(name);
    add_constraint(LinExpr::of(x).add(y, -1).add(z, -1), Sense::le, 0, "xor_def");
    add_constraint(LinExpr::of(y).add(x, -1).add(z, -1), Sense::le, 0, "xor_def");
    add_constraint(LinExpr::of(z).add(x, -1).add(y, -1), Sense::le, 0, "xor_def");
    add_constraint(LinExpr::of(z).add(x, 1).add(y, 1), Sense::le, 2, "xor_def");
    return z;
  }

  // Enforce that the given booleans form a one-hot group.
  void add_one_hot(const std::vector<int>& group, const std::string& tag) {
    LinExpr e;
    for (int v : group) e.add(v, 1);
    add_constraint(e, Sense::eq, 1, tag);
  }

  // One-hot lookup of a constant vector: sum_a c[a] * s[a].
  LinExpr lin_lookup1(const std::vector<double>& c, const std::vector<int>& s) const {
    if (c.size() != s.size()) throw validation_error("lookup1: size mismatch");
    LinExpr e;
    for (size_t a = 0; a < c.size(); ++a) e.add(s[a], c[a]);
    return e;
  }

  // Two-index lookup of a constant matrix via fresh product booleans
  // y[a][b] = s_a[a] AND s_b[b]; returns (expression, products).
  LinExpr lin_lookup2(const std::vector<std::vector<double>>& C, const std::vector<int>& s_a,
                      const std::vector<int>& s_b, std::vector<std::vector<int>>* products = nullptr,
                      const std::string& name = "lk2") {
    if (C.size() != s_a.size()) throw validation_error("lookup2: row mismatch");
    LinExpr e;
    std::vector<std::vector<int>> prod(s_a.size(), std::vector<int>(s_b.size(), -1));
    for (size_t a = 0; a < s_a.size(); ++a) {
      if (C[a].size() != s_b.size()) throw validation_error("lookup2: col mismatch");
      for (size_t b = 0; b < s_b.size(); ++b) {
        prod[a][b] = lin_and(s_a[a], s_b[b], name + "_y");
        e.add(prod[a][b], C[a][b]);
      }
    }
    if (products) *products = std::move(prod);
    return e;
  }

  // Epigraph variable z with z >= each term. Under minimization pressure z
  // equals the max of the terms at the optimum.
  int lin_max(const std::vector<LinExpr>& terms, const std::string& name, const std::string& tag) {
    int z = add_continuous(name, 0, kInf);
    for (const auto& t : terms) {
      LinExpr e = t;
      e.add(z, -1);
      add_constraint(std::move(e), Sense::le, 0, tag);
    }
    return z;
  }

  void minimize(LinExpr e) {
    objective = std::move(e);
    objective_set = true;
  }

  int minimize_max(const std::vector<LinExpr>& terms, const std::string& tag = "epigraph") {
    int z = lin_max(terms, "obj_max", tag);
    minimize(LinExpr::of(z));
    return z;
  }

  void set_hint(const std::vector<std::pair<int, double>>& h) { hint = h; }

  // Emit in the LP text format for debugging or feeding an external solver.
  void emit_lp(std::ostream& os) const {
    auto vname = [&](int v) {
      std::string n = vars[size_t(v)].name.empty() ? "v" : vars[size_t(v)].name;
      std::string out;
      for (char c : n) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
      return "x" + std::to_string(v) + "_" + out;
    };
    auto expr = [&](const LinExpr& e) {
      std::string s;
      for (const auto& t : e.terms) {
        if (!s.empty()) s += t.coef >= 0 ? " + " : " - ";
        else if (t.coef < 0) s += "- ";
        s += std::to_string(std::abs(t.coef)) + " " + vname(t.var);
      }
      if (s.empty()) s = "0";
      return s;
    };
    os << "Minimize\n obj: " << expr(objective) << "\n";
    os << "Subject To\n";
    for (size_t i = 0; i < cons.size(); ++i) {
      const auto& c = cons[i];
      const char* op = c.sense == Sense::le ? "<=" : c.sense == Sense::ge ? ">=" : "=";
      os << " c" << i << "_" << c.tag << ": " << expr(c.expr) << " " << op << " " << c.rhs << "\n";
    }
    os << "Bounds\n";
    for (size_t v = 0; v < vars.size(); ++v) {
      if (vars[v].type == VarType::boolean) continue;
      os << " ";
      if (vars[v].lo <= -kInf) os << "-inf";
      else os << vars[v].lo;
      os << " <= " << vname(int(v)) << " <= ";
      if (vars[v].hi >= kInf) os << "+inf";
      else os << vars[v].hi;
      os << "\n";
    }
    os << "Binaries\n";
    for (size_t v = 0; v < vars.size(); ++v)
      if (vars[v].type == VarType::boolean) os << " " << vname(int(v)) << "\n";
    os << "Generals\n";
    for (size_t v = 0; v < vars.size(); ++v)
      if (vars[v].type == VarType::integer) os << " " << vname(int(v)) << "\n";
    os << "End\n";
  }
};

// ---------------------------------------------------------------------------
// Built-in exact branch-and-bound
// ---------------------------------------------------------------------------
//
// LP-free: feasibility and bounds come from interval (activity) propagation
// over the linear rows. Continuous variables are supported as epigraph-style
// variables (nonnegative objective coefficient); their optimal value at an
// integer-complete node is their propagated lower bound. Exactness for the
// integer part follows from exhaustive branching with a sound lower bound.

namespace detail {

struct Row {
  std::vector<LinTerm> terms;
  double rhs = 0;
  int tag = -1;
  bool redundant = false;
};

class BB {
public:
  BB(const Model& m, const SolveOptions& opt) : model_(m), opt_(opt) {
    n_ = int(m.vars.size());
    lo_.resize(size_t(n_));
    hi_.resize(size_t(n_));
    for (int v = 0; v < n_; ++v) {
      lo_[size_t(v)] = m.vars[size_t(v)].lo;
      hi_[size_t(v)] = m.vars[size_t(v)].hi;
      if (m.vars[size_t(v)].type != VarType::continuous) {
        lo_[size_t(v)] = std::ceil(lo_[size_t(v)] - 1e-9);
        hi_[size_t(v)] = std::floor(hi_[size_t(v)] + 1e-9);
      }
    }
    for (const auto& c : m.cons) {
      int tag = tag_id(c.tag);
      if (c.sense == Sense::le || c.sense == Sense::eq) add_row(c.expr, c.rhs, tag, false, c.redundant);
      if (c.sense == Sense::ge || c.sense == Sense::eq) add_row(c.expr, c.rhs, tag, true, c.redundant);
    }
    var_rows_.assign(size_t(n_), {});
    for (size_t r = 0; r < rows_.size(); ++r)
      for (const auto& t : rows_[r].terms) var_rows_[size_t(t.var)].push_back(int(r));
    detect_objective_floors();
    build_branch_order();
    deadline_ = std::chrono::steady_clock::now() +
                std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(opt.timeout_s));
  }

  Solution run() {
    Solution best;
    best.status = SolveStatus::infeasible;
    best.objective = kInf;

    if (!propagate_all()) {
      best.binding_constraint = conflict_tag();
      return best;
    }
    try_hint(best);
    search(best, 0);
    if (timed_out_) {
      best.status = SolveStatus::timeout;  // incumbent (if any) is non-optimal
    } else if (best.objective >= kInf) {
      best.status = SolveStatus::infeasible;
      best.binding_constraint = conflict_tag();
    } else {
      best.status = SolveStatus::optimal;
    }
    best.nodes = nodes_;
    return best;
  }

private:
  const Model& model_;
  SolveOptions opt_;
  int n_ = 0;
  std::vector<Row> rows_;
  std::vector<double> lo_, hi_;
  std::vector<std::vector<int>> var_rows_;
  std::vector<int> branch_order_;
  std::vector<std::string> tags_;
  std::map<std::string, int> tag_ids_;
  // trail of (var, was_lower_bound, old_value) for backtracking
  std::vector<std::tuple<int, bool, double>> trail_;
  std::vector<int> dirty_rows_;
  std::vector<char> row_dirty_flag_;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
  int conflict_tag_id_ = -1;
  int conflict_depth_ = std::numeric_limits<int>::max();
  std::chrono::steady_clock::time_point deadline_;

  static constexpr double ftol_ = 1e-7;

  int tag_id(const std::string& t) {
    auto it = tag_ids_.find(t);
    if (it != tag_ids_.end()) return it->second;
    int id = int(tags_.size());
    tags_.push_back(t);
    tag_ids_[t] = id;
    return id;
  }
  std::string conflict_tag() const {
    return conflict_tag_id_ >= 0 ? tags_[size_t(conflict_tag_id_)] : "bounds";
  }

  // Store as sum(terms) <= rhs; `flip` negates for >= rows.
  void add_row(const LinExpr& e, double rhs, int tag, bool flip, bool redundant) {
    Row r;
    r.rhs = flip ? -rhs : rhs;
    r.tag = tag;
    r.redundant = redundant;
    for (const auto& t : e.terms) r.terms.push_back({t.var, flip ? -t.coef : t.coef});
    rows_.push_back(std::move(r));
  }

  // Rows of the form -(objective) <= -K establish "objective >= K" floors the
  // per-variable bound cannot see while the assignment is partial.
  double objective_floor_ = -kInf;
  void detect_objective_floors() {
    if (model_.objective.terms.empty()) return;
    std::map<int, double> obj;
    for (const auto& t : model_.objective.terms) obj[t.var] += t.coef;
    for (const auto& row : rows_) {
      if (row.terms.size() != obj.size()) continue;
      bool match = true;
      for (const auto& t : row.terms) {
        auto it = obj.find(t.var);
        if (it == obj.end() || std::abs(t.coef + it->second) > 1e-12 * (1 + std::abs(it->second))) {
          match = false;
          break;
        }
      }
      if (match) objective_floor_ = std::max(objective_floor_, -row.rhs + model_.objective.constant);
    }
  }

  void build_branch_order() {
    branch_order_.clear();
    for (int v = 0; v < n_; ++v)
      if (model_.vars[size_t(v)].type != VarType::continuous) branch_order_.push_back(v);
    std::stable_sort(branch_order_.begin(), branch_order_.end(), [&](int a, int b) {
      return model_.vars[size_t(a)].branch_priority > model_.vars[size_t(b)].branch_priority;
    });
  }

  bool is_fixed(int v) const { return hi_[size_t(v)] - lo_[size_t(v)] < 0.5; }
  bool is_int(int v) const { return model_.vars[size_t(v)].type != VarType::continuous; }

  size_t mark() const { return trail_.size(); }
  void rollback(size_t m) {
    while (trail_.size() > m) {
      auto [v, is_lo, old] = trail_.back();
      trail_.pop_back();
      (is_lo ? lo_ : hi_)[size_t(v)] = old;
    }
  }

  void enqueue_rows(int v) {
    for (int r : var_rows_[size_t(v)]) {
      if (!row_dirty_flag_[size_t(r)]) {
        row_dirty_flag_[size_t(r)] = 1;
        dirty_rows_.push_back(r);
      }
    }
  }

  bool set_lo(int v, double x) {
    if (is_int(v)) x = std::ceil(x - 1e-9);
    if (x <= lo_[size_t(v)] + 1e-12) return true;
    trail_.push_back({v, true, lo_[size_t(v)]});
    lo_[size_t(v)] = x;
    if (lo_[size_t(v)] > hi_[size_t(v)] + ftol_) return false;
    enqueue_rows(v);
    return true;
  }
  bool set_hi(int v, double x) {
    if (is_int(v)) x = std::floor(x + 1e-9);
    if (x >= hi_[size_t(v)] - 1e-12) return true;
    trail_.push_back({v, false, hi_[size_t(v)]});
    hi_[size_t(v)] = x;
    if (lo_[size_t(v)] > hi_[size_t(v)] + ftol_) return false;
    enqueue_rows(v);
    return true;
  }

  // Activity-based tightening of one row; returns false on conflict.
  bool propagate_row(const Row& row) {
    double min_act = 0;
    int inf_count = 0;
    int inf_var = -1;
    for (const auto& t : row.terms) {
      double b = t.coef > 0 ? lo_[size_t(t.var)] : hi_[size_t(t.var)];
      if (std::abs(b) >= kInf) {
        if (++inf_count > 1) return true;  // nothing to learn yet
        inf_var = t.var;
        continue;
      }
      min_act += t.coef * b;
    }
    double tol = ftol_ * (1.0 + std::abs(row.rhs));
    if (inf_count == 0 && min_act > row.rhs + tol) return false;
    for (const auto& t : row.terms) {
      if (inf_count == 1 && t.var != inf_var) continue;
      double own = 0;
      if (inf_count == 0) {
        double b = t.coef > 0 ? lo_[size_t(t.var)] : hi_[size_t(t.var)];
        own = t.coef * b;
      }
      double slack = row.rhs - (min_act - own);
      double bound = slack / t.coef;
      if (t.coef > 0) {
        if (!set_hi(t.var, bound)) return false;
      } else {
        if (!set_lo(t.var, bound)) return false;
      }
    }
    return true;
  }

  bool propagate(int depth) {
    while (!dirty_rows_.empty()) {
      int r = dirty_rows_.back();
      dirty_rows_.pop_back();
      row_dirty_flag_[size_t(r)] = 0;
      if (!propagate_row(rows_[size_t(r)])) {
        if (depth < conflict_depth_) {
          conflict_depth_ = depth;
          conflict_tag_id_ = rows_[size_t(r)].tag;
        }
        for (int d : dirty_rows_) row_dirty_flag_[size_t(d)] = 0;
        dirty_rows_.clear();
        return false;
      }
    }
    return true;
  }

  bool propagate_all() {
    row_dirty_flag_.assign(rows_.size(), 1);
    dirty_rows_.resize(rows_.size());
    std::iota(dirty_rows_.begin(), dirty_rows_.end(), 0);
    return propagate(0);
  }

  double objective_lb() const {
    double s = model_.objective.constant;
    for (const auto& t : model_.objective.terms)
      s += t.coef * (t.coef > 0 ? lo_[size_t(t.var)] : hi_[size_t(t.var)]);
    return std::max(s, objective_floor_);
  }

  bool check_deadline() {
    if ((nodes_ & 0xFF) == 0 && std::chrono::steady_clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  // Record the current (integer-complete) point if it beats the incumbent.
  // Continuous variables sit at their propagated lower bound, which is their
  // optimum under the nonnegative-objective-coefficient restriction.
  void record_leaf(Solution& best) {
    double obj = model_.objective.constant;
    for (const auto& t : model_.objective.terms) obj += t.coef * lo_[size_t(t.var)];
    if (obj >= best.objective - 1e-12 * (1.0 + std::abs(obj))) return;
    best.objective = obj;
    best.values.assign(size_t(n_), 0);
    for (int v = 0; v < n_; ++v) best.values[size_t(v)] = lo_[size_t(v)];
  }

  void try_hint(Solution& best) {
    if (model_.hint.empty()) return;
    size_t m = mark();
    bool ok = true;
    for (const auto& [v, val] : model_.hint) {
      if (!set_lo(v, val) || !set_hi(v, val)) { ok = false; break; }
    }
    if (ok && propagate(0) && all_ints_fixed()) record_leaf(best);
    rollback(m);
  }

  bool all_ints_fixed() const {
    for (int v : branch_order_)
      if (!is_fixed(v)) return false;
    return true;
  }

  int pick_branch_var() const {
    for (int v : branch_order_)
      if (!is_fixed(v)) return v;
    return -1;
  }

  void search(Solution& best, int depth) {
    if (check_deadline()) return;
    ++nodes_;
    double lb = objective_lb();
    double bound = std::min(best.objective, opt_.objective_cap);
    if (lb >= bound - 1e-12 * (1.0 + std::abs(bound))) return;

    int v = pick_branch_var();
    if (v < 0) {
      record_leaf(best);
      return;
    }

    if (maybe_decompose(best, depth)) return;

    double lo = lo_[size_t(v)], hi = hi_[size_t(v)];
    std::vector<double> values;
    if (hi - lo <= 8.5) {
      for (double x = lo; x <= hi + 0.5; x += 1.0) values.push_back(x);
      if (model_.vars[size_t(v)].try_high_first) std::reverse(values.begin(), values.end());
      for (double x : values) {
        size_t m = mark();
        if (set_lo(v, x) && set_hi(v, x) && propagate(depth + 1)) search(best, depth + 1);
        rollback(m);
        if (timed_out_) return;
      }
    } else {
      double mid = std::floor((lo + hi) / 2);
      for (int half = 0; half < 2; ++half) {
        size_t m = mark();
        bool ok = half == 0 ? set_hi(v, mid) : set_lo(v, mid + 1);
        if (ok && propagate(depth + 1)) search(best, depth + 1);
        rollback(m);
        if (timed_out_) return;
      }
    }
  }

  // ---- independent-subproblem decomposition ------------------------------
  //
  // Once enough variables are fixed the active constraint graph often falls
  // apart into independent blocks (e.g. per-partition tile allocation). Each
  // block is solved on its own; objectives add because every objective term
  // lives in exactly one block.

  std::uint64_t next_decompose_attempt_ = 0;

  bool maybe_decompose(Solution& best, int depth) {
    // Attempt only once the top-priority block (assignment variables) is
    // fully fixed; the remaining subproblems then tend to separate.
    if (nodes_ < next_decompose_attempt_) return false;
    for (int v : branch_order_) {
      if (model_.vars[size_t(v)].branch_priority > 2 && !is_fixed(v)) return false;
      if (model_.vars[size_t(v)].branch_priority <= 2) break;
    }

    // Union-find over free variables through rows that touch >= 2 of them.
    std::vector<int> parent(size_t(n_), 0);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[size_t(x)] != x) {
        parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
        x = parent[size_t(x)];
      }
      return x;
    };
    auto unite = [&](int a, int b) { parent[size_t(find(a))] = find(b); };
    auto free_var = [&](int v) { return !is_fixed(v) || !is_int(v); };

    for (const auto& row : rows_) {
      if (row.redundant) continue;  // implied rows must not glue components
      int first = -1;
      for (const auto& t : row.terms) {
        if (!free_var(t.var)) continue;
        if (first < 0) first = t.var;
        else unite(first, t.var);
      }
    }
    std::map<int, std::vector<int>> comps;
    for (int v = 0; v < n_; ++v)
      if (free_var(v)) comps[find(v)].push_back(v);
    if (comps.size() < 2) {
      // Re-attempt only after substantially more fixing has happened.
      next_decompose_attempt_ = nodes_ + 64;
      return false;
    }

    double combined = model_.objective.constant;
    for (const auto& t : model_.objective.terms)
      if (!free_var(t.var)) combined += t.coef * lo_[size_t(t.var)];

    // Per-component objective floor from the current bounds, so each
    // component solve runs under the tightest budget the others allow.
    std::map<int, double> comp_lb;
    for (auto& [root, comp_vars] : comps) comp_lb[root] = 0;
    for (const auto& t : model_.objective.terms) {
      if (!free_var(t.var)) continue;
      comp_lb[find(t.var)] +=
          t.coef * (t.coef > 0 ? lo_[size_t(t.var)] : hi_[size_t(t.var)]);
    }
    double remaining_lb = 0;
    for (auto& [root, lb] : comp_lb) remaining_lb += lb;

    std::vector<double> merged(size_t(n_), 0.0);
    for (int v = 0; v < n_; ++v) merged[size_t(v)] = lo_[size_t(v)];

    for (auto& [root, comp_vars] : comps) {
      remaining_lb -= comp_lb[root];
      double budget = std::min(best.objective, opt_.objective_cap) - combined - remaining_lb;
      Solution sub = solve_component(comp_vars, budget);
      if (timed_out_) return true;
      if (sub.status == SolveStatus::infeasible) return true;  // nothing within budget
      combined += sub.objective;
      if (combined + remaining_lb >=
          std::min(best.objective, opt_.objective_cap) - 1e-12 * (1.0 + std::abs(best.objective)))
        return true;
      for (int v : comp_vars) merged[size_t(v)] = sub.values[size_t(v)];
    }
    if (combined < best.objective - 1e-12 * (1.0 + std::abs(combined))) {
      best.objective = combined;
      best.values = merged;
      // The caller's bookkeeping expects values for fixed vars too; merged
      // already holds their lo == hi values.
    }
    (void)depth;
    return true;
  }

  // Build a sub-model over `comp_vars` with current bounds and recurse.
  Solution solve_component(const std::vector<int>& comp_vars, double budget) {
    std::vector<int> local(size_t(n_), -1);
    Model sub;
    for (size_t i = 0; i < comp_vars.size(); ++i) {
      int v = comp_vars[i];
      local[size_t(v)] = int(i);
      Variable nv = model_.vars[size_t(v)];
      nv.lo = lo_[size_t(v)];
      nv.hi = hi_[size_t(v)];
      sub.vars.push_back(nv);
    }
    for (const auto& row : rows_) {
      LinExpr e;
      double rhs = row.rhs;
      bool touches = false, crosses = false;
      for (const auto& t : row.terms) {
        if (local[size_t(t.var)] >= 0) {
          e.add(local[size_t(t.var)], t.coef);
          touches = true;
        } else if (!is_fixed(t.var) || !is_int(t.var)) {
          crosses = true;  // only redundant rows can span components
        } else {
          rhs -= t.coef * lo_[size_t(t.var)];
        }
      }
      if (touches && !crosses)
        sub.cons.push_back(
            Constraint{std::move(e), Sense::le, rhs, tags_[size_t(row.tag)], row.redundant});
    }
    LinExpr obj;
    for (const auto& t : model_.objective.terms)
      if (local[size_t(t.var)] >= 0) obj.add(local[size_t(t.var)], t.coef);
    sub.minimize(obj);

    SolveOptions sub_opt = opt_;
    double remain = std::chrono::duration<double>(deadline_ - std::chrono::steady_clock::now()).count();
    sub_opt.timeout_s = std::max(0.0, remain);
    sub_opt.objective_cap = budget;
    BB bb(sub, sub_opt);
    Solution s = bb.run();
    nodes_ += s.nodes;
    if (s.status == SolveStatus::timeout) timed_out_ = true;
    // Re-index values back to parent ids.
    if (!s.values.empty()) {
      std::vector<double> full(size_t(n_), 0);
      for (size_t i = 0; i < comp_vars.size(); ++i) full[size_t(comp_vars[i])] = s.values[i];
      s.values = std::move(full);
    }
    return s;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Backend registry
// ---------------------------------------------------------------------------

class SolverBackend {
public:
  virtual ~SolverBackend() = default;
  virtual Solution solve(const Model& m, const SolveOptions& opt) = 0;
};

inline std::map<std::string, std::function<std::shared_ptr<SolverBackend>()>>& backend_registry() {
  static std::map<std::string, std::function<std::shared_ptr<SolverBackend>()>> r;
  return r;
}

inline void register_backend(const std::string& name,
                             std::function<std::shared_ptr<SolverBackend>()> factory) {
  backend_registry()[name] = std::move(factory);
}

inline Solution solve(const Model& m, const SolveOptions& opt = {}) {
  if (!m.objective_set) throw validation_error("solve: objective not set");
  // builtin_bb restriction: continuous variables act as epigraph variables,
  // so they may not carry negative objective coefficients.
  for (const auto& t : m.objective.terms)
    if (m.vars[size_t(t.var)].type == VarType::continuous && t.coef < 0)
      throw validation_error("builtin_bb: continuous variable '" + m.vars[size_t(t.var)].name +
                             "' has a negative objective coefficient");
  if (opt.backend == "builtin_bb" || opt.backend.empty()) {
    detail::BB bb(m, opt);
    return bb.run();
  }
  auto it = backend_registry().find(opt.backend);
  if (it == backend_registry().end())
    throw validation_error("solver backend '" + opt.backend + "' is not registered");
  return it->second()->solve(m, opt);
}

}  // namespace dfmap::milp
