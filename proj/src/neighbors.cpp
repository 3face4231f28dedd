#include "mvldl/neighbors.hpp"

#include "mvldl/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace mvldl {

std::vector<std::vector<std::vector<int>>> knn_per_view(const MultiViewDataset& ds, int k) {
    const int n = ds.n();
    if (k < 1 || k >= n) throw ParameterError("knn_per_view: need 1 <= k < n");

    std::vector<std::vector<std::vector<int>>> result(static_cast<std::size_t>(ds.num_views()));
    std::vector<std::pair<double, int>> cand(static_cast<std::size_t>(n - 1));
    for (int v = 0; v < ds.num_views(); ++v) {
        const Matrix& X = ds.view(v);
        auto& lists = result[static_cast<std::size_t>(v)];
        lists.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::size_t c = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                cand[c++] = {(X.row(i) - X.row(j)).squaredNorm(), j};
            }
            std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
            auto& out = lists[static_cast<std::size_t>(i)];
            out.resize(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) out[static_cast<std::size_t>(j)] = cand[static_cast<std::size_t>(j)].second;
        }
    }
    return result;
}

NeighborSets complement_union(std::vector<std::vector<std::vector<int>>> per_view) {
    if (per_view.empty() || per_view.front().empty())
        throw ParameterError("complement_union: empty neighbor lists");
    const std::size_t n = per_view.front().size();
    const std::size_t k = per_view.front().front().size();
    for (const auto& lists : per_view) {
        if (lists.size() != n) throw ShapeError("complement_union: views disagree on n");
        for (const auto& l : lists)
            if (l.size() != k) throw ShapeError("complement_union: uneven neighbor counts");
    }

    NeighborSets sets;
    sets.k = static_cast<int>(k);
    sets.merged.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::set<int> u;
        for (const auto& lists : per_view) u.insert(lists[i].begin(), lists[i].end());
        sets.merged[i].assign(u.begin(), u.end());
    }
    sets.per_view = std::move(per_view);
    return sets;
}

NeighborSets build_neighbor_sets(const MultiViewDataset& ds, int k) {
    return complement_union(knn_per_view(ds, k));
}

}  // namespace mvldl
