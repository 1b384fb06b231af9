#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <dfmap/common.hpp>
#include <dfmap/graph.hpp>

namespace dfmap {

// Dense boolean matrix, row-major. Sizes here are tiny (tens by tens).
using BoolMat = std::vector<std::vector<std::uint8_t>>;

inline BoolMat make_bool_mat(int rows, int cols) {
  return BoolMat(size_t(rows), std::vector<std::uint8_t>(size_t(cols), 0));
}

// Kernel-to-partition assignment as one partition index per kernel; the
// boolean matrix A is its one-hot expansion.
inline BoolMat assignment_matrix(const std::vector<int>& part, int p_max) {
  BoolMat a = make_bool_mat(int(part.size()), p_max);
  for (size_t i = 0; i < part.size(); ++i) {
    if (part[i] < 0 || part[i] >= p_max)
      throw validation_error("kernel " + std::to_string(i) + " assigned to partition " +
                             std::to_string(part[i]) + " outside [0, " + std::to_string(p_max) + ")");
    a[i][size_t(part[i])] = 1;
  }
  return a;
}

inline void check_one_hot_rows(const BoolMat& a) {
  for (size_t i = 0; i < a.size(); ++i) {
    int sum = 0;
    for (auto v : a[i]) sum += v;
    if (sum != 1)
      throw validation_error("assignment row " + std::to_string(i) + " is not one-hot");
  }
}

inline int row_argmax(const BoolMat& a, int row) {
  for (size_t k = 0; k < a[size_t(row)].size(); ++k)
    if (a[size_t(row)][k]) return int(k);
  return -1;
}

// Tensors staying inside one partition: B[j,:] = A[src,:] AND A[dst,:].
inline BoolMat derive_B(const BoolMat& a, const std::vector<TensorEdge>& tensors) {
  check_one_hot_rows(a);
  int p = int(a.empty() ? 0 : a[0].size());
  BoolMat b = make_bool_mat(int(tensors.size()), p);
  for (size_t j = 0; j < tensors.size(); ++j)
    for (int k = 0; k < p; ++k)
      b[j][size_t(k)] = a[size_t(tensors[j].src)][size_t(k)] & a[size_t(tensors[j].dst)][size_t(k)];
  return b;
}

// Tensors crossing two partitions: D[j,:] = A[src,:] XOR A[dst,:].
inline BoolMat derive_D(const BoolMat& a, const std::vector<TensorEdge>& tensors) {
  check_one_hot_rows(a);
  int p = int(a.empty() ? 0 : a[0].size());
  BoolMat d = make_bool_mat(int(tensors.size()), p);
  for (size_t j = 0; j < tensors.size(); ++j)
    for (int k = 0; k < p; ++k)
      d[j][size_t(k)] = a[size_t(tensors[j].src)][size_t(k)] ^ a[size_t(tensors[j].dst)][size_t(k)];
  return d;
}

// Lifetime of a cross-partition tensor: with U_s[i,k] = (i <= k) and
// U_t[i,k] = (i < k),
//   L[j,:] = ((A[src,:] U_s) XOR (A[dst,:] U_t)) XOR (A[src,:] AND A[dst,:])
// which marks every partition from the producer's through the consumer's,
// and vanishes for intra-partition tensors. Meaningful only under the
// precedence rule part(dst) >= part(src), which is checked here.
inline BoolMat derive_L(const BoolMat& a, const std::vector<TensorEdge>& tensors) {
  check_one_hot_rows(a);
  int p = int(a.empty() ? 0 : a[0].size());
  BoolMat l = make_bool_mat(int(tensors.size()), p);
  for (size_t j = 0; j < tensors.size(); ++j) {
    int ps = row_argmax(a, tensors[j].src);
    int pd = row_argmax(a, tensors[j].dst);
    if (pd < ps)
      throw validation_error("precedence violation: tensor " + std::to_string(j) +
                             " goes from partition " + std::to_string(ps) + " back to " +
                             std::to_string(pd));
    for (int k = 0; k < p; ++k) {
      std::uint8_t us = ps <= k ? 1 : 0;  // A[src,:] * U_s
      std::uint8_t ut = pd < k ? 1 : 0;   // A[dst,:] * U_t
      std::uint8_t intra = (ps == pd && ps == k) ? 1 : 0;
      l[j][size_t(k)] = (us ^ ut) ^ intra;
    }
  }
  return l;
}

// Tensor placement mirrors the producing kernel: H[j,:] = A[src,:].
inline BoolMat derive_H(const BoolMat& a, const std::vector<TensorEdge>& tensors) {
  check_one_hot_rows(a);
  int p = int(a.empty() ? 0 : a[0].size());
  BoolMat h = make_bool_mat(int(tensors.size()), p);
  for (size_t j = 0; j < tensors.size(); ++j)
    for (int k = 0; k < p; ++k)
      h[j][size_t(k)] = a[size_t(tensors[j].src)][size_t(k)];
  return h;
}

struct AssignmentMatrices {
  BoolMat A, B, D, L, H;
  int p_max = 0;

  static AssignmentMatrices from_partition(const std::vector<int>& part, int p_max,
                                           const std::vector<TensorEdge>& tensors) {
    AssignmentMatrices m;
    m.p_max = p_max;
    m.A = assignment_matrix(part, p_max);
    m.B = derive_B(m.A, tensors);
    m.D = derive_D(m.A, tensors);
    m.L = derive_L(m.A, tensors);
    m.H = derive_H(m.A, tensors);
    return m;
  }
};

// Structural checks tying the derived matrices together; used by the
// evaluation paths to reject malformed fixed mappings.
inline void validate_matrices(const AssignmentMatrices& m, const std::vector<TensorEdge>& tensors) {
  check_one_hot_rows(m.A);
  for (size_t j = 0; j < tensors.size(); ++j) {
    int bsum = 0, dsum = 0, lsum = 0;
    for (int k = 0; k < m.p_max; ++k) {
      bsum += m.B[j][size_t(k)];
      dsum += m.D[j][size_t(k)];
      lsum += m.L[j][size_t(k)];
      if (m.H[j][size_t(k)] != m.A[size_t(tensors[j].src)][size_t(k)])
        throw validation_error("H row " + std::to_string(j) + " does not match its source row");
    }
    if (!((bsum == 1 && dsum == 0) || (bsum == 0 && dsum == 2)))
      throw validation_error("tensor " + std::to_string(j) +
                             ": B/D rows inconsistent (bsum=" + std::to_string(bsum) +
                             ", dsum=" + std::to_string(dsum) + ")");
    int ps = row_argmax(m.A, tensors[j].src);
    int pd = row_argmax(m.A, tensors[j].dst);
    int expect_span = (ps == pd) ? 0 : (pd - ps + 1);
    if (lsum != expect_span)
      throw validation_error("tensor " + std::to_string(j) + ": lifetime row-sum " +
                             std::to_string(lsum) + " != span " + std::to_string(expect_span));
    if (bsum == 1 && lsum != 0)
      throw validation_error("tensor " + std::to_string(j) + ": intra-partition tensor has lifetime");
  }
}

}  // namespace dfmap
