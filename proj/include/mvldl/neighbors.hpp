#pragma once

#include "mvldl/dataset.hpp"

#include <vector>

namespace mvldl {

/// Per-view k-nearest-neighbor lists and their cross-view unions.
///
/// per_view[v][i] holds the k neighbors of sample i in view v, nearest
/// first, self excluded, Euclidean distance with ties broken by ascending
/// index. merged[i] is the sorted, deduplicated union over views.
struct NeighborSets {
    int k = 0;
    std::vector<std::vector<std::vector<int>>> per_view;
    std::vector<std::vector<int>> merged;

    int union_size(int i) const { return static_cast<int>(merged[static_cast<std::size_t>(i)].size()); }
};

/// Exact brute-force kNN in every view. Requires 1 <= k < n.
std::vector<std::vector<std::vector<int>>> knn_per_view(const MultiViewDataset& ds, int k);

/// Union of per-view neighbor lists per sample.
NeighborSets complement_union(std::vector<std::vector<std::vector<int>>> per_view);

/// knn_per_view followed by complement_union.
NeighborSets build_neighbor_sets(const MultiViewDataset& ds, int k);

}  // namespace mvldl
