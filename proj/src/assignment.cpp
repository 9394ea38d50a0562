#include "relscene/assignment.hpp"

#include <algorithm>
#include <limits>

#include "relscene/errors.hpp"

namespace relscene {

std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost) {
    if (r.size() != cols) throw DomainError("hungarian_assignment: ragged cost matrix");
  }
  // Pad to square with zero-cost dummies; dummy assignments are dropped.
  const std::size_t n = std::max(rows, cols);
  auto at = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? cost[i][j] : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials, col->row matching in p
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
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
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= rows && j <= cols) out[i - 1] = static_cast<int>(j - 1);
  }
  return out;
}

int max_matching_size(const std::vector<std::vector<bool>>& adjacency) {
  if (adjacency.empty() || adjacency.front().empty()) return 0;
  std::vector<std::vector<double>> cost(adjacency.size());
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    for (bool edge : adjacency[i]) cost[i].push_back(edge ? 0.0 : 1.0);
  }
  const auto assignment = hungarian_assignment(cost);
  int matched = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= 0 && adjacency[i][assignment[i]]) ++matched;
  }
  return matched;
}

}  // namespace relscene
