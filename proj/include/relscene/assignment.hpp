#pragma once

#include <vector>

namespace relscene {

/// Minimum-cost assignment on a rectangular cost matrix (rows x cols,
/// row-major nested vectors). Returns, for each row, the assigned column or
/// -1 when rows outnumber columns. Kuhn-Munkres with potentials, O(n^3).
std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost);

/// Size of a maximum matching in a bipartite graph given as an adjacency
/// matrix, solved as an assignment with cost 0 for edges and 1 otherwise.
int max_matching_size(const std::vector<std::vector<bool>>& adjacency);

}  // namespace relscene
