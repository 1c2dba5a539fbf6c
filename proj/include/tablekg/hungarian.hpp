#pragma once

#include <limits>
#include <vector>

#include "tablekg/errors.hpp"

namespace tkg {

// Hungarian method (shortest augmenting path with potentials, O(n^3)).
// Returns, for each row of the square cost matrix, the assigned column.
inline std::vector<std::size_t> solve_assignment(
    const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  for (const auto& row : cost) {
    if (row.size() != n) throw Error("assignment cost matrix must be square");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based arrays; p[j] = row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

// Maximizes total similarity over one-to-one partial matchings of a
// (possibly rectangular) similarity matrix. Pads to square, converts to a
// cost matrix, and drops zero-similarity pairs from the result.
inline std::vector<std::pair<std::size_t, std::size_t>> max_similarity_matching(
    const std::vector<std::vector<double>>& sim, std::size_t n_rows,
    std::size_t n_cols) {
  const std::size_t n = std::max(n_rows, n_cols);
  if (n == 0) return {};
  double max_sim = 1.0;
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j) max_sim = std::max(max_sim, sim[i][j]);

  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j) cost[i][j] = 1.0 - sim[i][j] / max_sim;

  const std::vector<std::size_t> row_to_col = solve_assignment(cost);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const std::size_t j = row_to_col[i];
    if (j < n_cols && sim[i][j] > 0.0) pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace tkg
