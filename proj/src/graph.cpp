#include "mvldl/graph.hpp"

#include "mvldl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>
#include <ostream>
#include <string>

namespace mvldl {

SimilarityGraph::SimilarityGraph(int n, int views, SupportStage stage)
    : n_(n), views_(views), stage_(stage), rows_(static_cast<std::size_t>(n) * static_cast<std::size_t>(views)) {}

double SimilarityGraph::weight(int i, int v, int j) const {
    const Row& r = row(i, v);
    const auto it = std::lower_bound(r.support.begin(), r.support.end(), j);
    if (it == r.support.end() || *it != j) return 0.0;
    return r.weights[static_cast<Eigen::Index>(it - r.support.begin())];
}

Eigen::SparseMatrix<double> SimilarityGraph::assemble() const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n_) * static_cast<std::size_t>(views_) * 8);
    for (int i = 0; i < n_; ++i) {
        for (int v = 0; v < views_; ++v) {
            const Row& r = row(i, v);
            const int ri = stacked_index(v, i, n_);
            for (std::size_t j = 0; j < r.support.size(); ++j)
                trips.emplace_back(ri, stacked_index(v, r.support[j], n_),
                                   r.weights[static_cast<Eigen::Index>(j)]);
        }
    }
    Eigen::SparseMatrix<double> S(n_ * views_, n_ * views_);
    S.setFromTriplets(trips.begin(), trips.end());
    return S;
}

void SimilarityGraph::dump_coordinate_list(std::ostream& out) const {
    for (int i = 0; i < n_; ++i) {
        for (int v = 0; v < views_; ++v) {
            const Row& r = row(i, v);
            const int ri = stacked_index(v, i, n_);
            for (std::size_t j = 0; j < r.support.size(); ++j)
                out << ri << ' ' << stacked_index(v, r.support[j], n_) << ' '
                    << r.weights[static_cast<Eigen::Index>(j)] << '\n';
        }
    }
}

int SampleGrams::total() const {
    int t = 0;
    for (int s : sizes) t += s;
    return t;
}

namespace {

// Gram matrix of the difference vectors (row_i - row_j) over a support.
Matrix difference_gram(const Matrix& X, int i, const std::vector<int>& support) {
    const int m = static_cast<int>(support.size());
    Matrix diffs(m, X.cols());
    for (int j = 0; j < m; ++j)
        diffs.row(j) = X.row(i) - X.row(support[static_cast<std::size_t>(j)]);
    return diffs * diffs.transpose();
}

SampleGrams build_grams_over_supports(int i, const MultiViewDataset& ds,
                                      std::vector<std::vector<int>> supports, const Matrix& D) {
    const int V = ds.num_views();
    const int n = ds.n();
    SampleGrams g;
    g.supports = std::move(supports);
    g.sizes.resize(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) g.sizes[static_cast<std::size_t>(v)] = static_cast<int>(g.supports[static_cast<std::size_t>(v)].size());
    const int total = g.total();

    g.Gx = Matrix::Zero(total, total);
    g.Gd = Matrix::Zero(total, total);
    g.Ecross = Matrix::Zero(total, total);

    std::vector<int> offsets(static_cast<std::size_t>(V), 0);
    for (int v = 1; v < V; ++v)
        offsets[static_cast<std::size_t>(v)] = offsets[static_cast<std::size_t>(v - 1)] + g.sizes[static_cast<std::size_t>(v - 1)];

    for (int v = 0; v < V; ++v) {
        const auto& sup = g.supports[static_cast<std::size_t>(v)];
        const int m = g.sizes[static_cast<std::size_t>(v)];
        const int off = offsets[static_cast<std::size_t>(v)];
        if (m == 0) continue;
        g.Gx.block(off, off, m, m) = difference_gram(ds.view(v), i, sup);

        Matrix ddiffs(m, D.cols());
        const int ri = stacked_index(v, i, n);
        for (int j = 0; j < m; ++j)
            ddiffs.row(j) = D.row(ri) - D.row(stacked_index(v, sup[static_cast<std::size_t>(j)], n));
        g.Gd.block(off, off, m, m) = ddiffs * ddiffs.transpose();
    }

    // Cross-view coupling sum_{v<u} over shared neighbor indices; a neighbor
    // present in only one of the two supports contributes its square alone.
    for (int v = 0; v < V; ++v) {
        for (int u = v + 1; u < V; ++u) {
            const auto& sv = g.supports[static_cast<std::size_t>(v)];
            const auto& su = g.supports[static_cast<std::size_t>(u)];
            std::size_t a = 0, b = 0;
            while (a < sv.size() || b < su.size()) {
                const int ja = a < sv.size() ? sv[a] : std::numeric_limits<int>::max();
                const int jb = b < su.size() ? su[b] : std::numeric_limits<int>::max();
                if (ja == jb) {
                    const int pa = offsets[static_cast<std::size_t>(v)] + static_cast<int>(a);
                    const int pb = offsets[static_cast<std::size_t>(u)] + static_cast<int>(b);
                    g.Ecross(pa, pa) += 1.0;
                    g.Ecross(pb, pb) += 1.0;
                    g.Ecross(pa, pb) -= 1.0;
                    g.Ecross(pb, pa) -= 1.0;
                    ++a;
                    ++b;
                } else if (ja < jb) {
                    const int pa = offsets[static_cast<std::size_t>(v)] + static_cast<int>(a);
                    g.Ecross(pa, pa) += 1.0;
                    ++a;
                } else {
                    const int pb = offsets[static_cast<std::size_t>(u)] + static_cast<int>(b);
                    g.Ecross(pb, pb) += 1.0;
                    ++b;
                }
            }
        }
    }
    return g;
}

std::vector<std::vector<int>> current_supports(int i, const SimilarityGraph& graph) {
    std::vector<std::vector<int>> sup(static_cast<std::size_t>(graph.num_views()));
    for (int v = 0; v < graph.num_views(); ++v) sup[static_cast<std::size_t>(v)] = graph.row(i, v).support;
    return sup;
}

}  // namespace

SimilarityGraph init_similarity(const MultiViewDataset& ds, const NeighborSets& nbrs,
                                const qp::SolveOptions& opts) {
    const int n = ds.n();
    const int V = ds.num_views();
    SimilarityGraph graph(n, V, SupportStage::per_view);

    for (int i = 0; i < n; ++i) {
        for (int v = 0; v < V; ++v) {
            std::vector<int> sup = nbrs.per_view[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)];
            std::sort(sup.begin(), sup.end());

            qp::BlockSimplexQP prob;
            prob.G = 2.0 * difference_gram(ds.view(v), i, sup);
            prob.c = Vector::Zero(static_cast<Eigen::Index>(sup.size()));
            prob.blocks.push_back({});
            for (int j = 0; j < static_cast<int>(sup.size()); ++j) prob.blocks.back().push_back(j);

            const qp::QpSolution sol = qp::solve(prob, opts);
            if (!sol.converged)
                throw TrainingError("similarity init did not converge at sample " + std::to_string(i) +
                                    ", view " + std::to_string(v));
            auto& row = graph.row(i, v);
            row.support = std::move(sup);
            row.weights = sol.x;
        }
    }
    return graph;
}

SimilarityGraph to_union_support(const SimilarityGraph& graph, const NeighborSets& nbrs) {
    SimilarityGraph out(graph.n(), graph.num_views(), SupportStage::unioned);
    for (int i = 0; i < graph.n(); ++i) {
        const auto& merged = nbrs.merged[static_cast<std::size_t>(i)];
        for (int v = 0; v < graph.num_views(); ++v) {
            auto& row = out.row(i, v);
            row.support = merged;
            row.weights = Vector::Zero(static_cast<Eigen::Index>(merged.size()));
            for (std::size_t j = 0; j < merged.size(); ++j)
                row.weights[static_cast<Eigen::Index>(j)] = graph.weight(i, v, merged[j]);
        }
    }
    return out;
}

SampleGrams build_sample_grams(int i, const MultiViewDataset& ds, const SimilarityGraph& graph,
                               const Matrix& D) {
    return build_grams_over_supports(i, ds, current_supports(i, graph), D);
}

SampleGrams build_sample_grams(int i, const MultiViewDataset& ds, const NeighborSets& nbrs,
                               const Matrix& D) {
    std::vector<std::vector<int>> sup(static_cast<std::size_t>(ds.num_views()),
                                      nbrs.merged[static_cast<std::size_t>(i)]);
    return build_grams_over_supports(i, ds, std::move(sup), D);
}

Vector solve_similarity_row(const SampleGrams& grams, const Hyperparams& hp,
                            const qp::SolveOptions& opts, const Vector* warm) {
    const int total = grams.total();
    qp::BlockSimplexQP prob;
    prob.G = 2.0 * (hp.mu1 * grams.Gx + hp.mu2 * grams.Gd + 2.0 * hp.sigma * grams.Ecross);
    // The linear term is zero, so rescaling the quadratic form leaves the
    // minimizer untouched while making the residual tolerance scale-free.
    const double scale = prob.G.size() > 0 ? prob.G.cwiseAbs().maxCoeff() : 0.0;
    if (scale > 0.0) prob.G /= scale;
    prob.c = Vector::Zero(total);
    int off = 0;
    for (int size : grams.sizes) {
        std::vector<int> blk(static_cast<std::size_t>(size));
        for (int j = 0; j < size; ++j) blk[static_cast<std::size_t>(j)] = off + j;
        prob.blocks.push_back(std::move(blk));
        off += size;
    }

    qp::SolveOptions local = opts;
    if (warm != nullptr) local.initial = *warm;
    const qp::QpSolution sol = qp::solve(prob, local);
    if (!sol.converged) throw TrainingError("similarity row update did not converge");
    return sol.x;
}

void update_similarity_rows(SimilarityGraph& graph, const MultiViewDataset& ds, const Matrix& D,
                            const Hyperparams& hp, const qp::SolveOptions& opts) {
    const int V = graph.num_views();
    const int n = graph.n();

    // Each sample's rows decouple given the D snapshot, so the sweep fans
    // out over a small pool; every worker writes only its own rows and the
    // result does not depend on scheduling.
    const auto update_one = [&](int i) {
        const SampleGrams grams = build_sample_grams(i, ds, graph, D);
        Vector warm(grams.total());
        int off = 0;
        for (int v = 0; v < V; ++v) {
            warm.segment(off, grams.sizes[static_cast<std::size_t>(v)]) = graph.row(i, v).weights;
            off += grams.sizes[static_cast<std::size_t>(v)];
        }
        const Vector x = solve_similarity_row(grams, hp, opts, &warm);
        off = 0;
        for (int v = 0; v < V; ++v) {
            graph.row(i, v).weights = x.segment(off, grams.sizes[static_cast<std::size_t>(v)]);
            off += grams.sizes[static_cast<std::size_t>(v)];
        }
    };

    const unsigned hw = std::thread::hardware_concurrency();
    const int threads = std::max(1, std::min({static_cast<int>(hw), n, 8}));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            try {
                update_one(i);
            } catch (const TrainingError&) {
                throw TrainingError("similarity row update did not converge at sample " +
                                    std::to_string(i));
            }
        }
        return;
    }

    std::atomic<int> next{0};
    std::atomic<int> failed{std::numeric_limits<int>::max()};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    update_one(i);
                } catch (const Error&) {
                    int seen = failed.load();
                    while (i < seen && !failed.compare_exchange_weak(seen, i)) {
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load() != std::numeric_limits<int>::max())
        throw TrainingError("similarity row update did not converge at sample " +
                            std::to_string(failed.load()));
}

}  // namespace mvldl
