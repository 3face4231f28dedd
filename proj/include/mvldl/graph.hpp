#pragma once

#include "mvldl/dataset.hpp"
#include "mvldl/hyperparams.hpp"
#include "mvldl/neighbors.hpp"
#include "mvldl/qp.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <vector>

namespace mvldl {

/// Which neighbor support the similarity rows live on: the per-view kNN
/// sets (initialization, and the per-view ablation variant), or the
/// cross-view union sets.
enum class SupportStage { per_view, unioned };

/// Global row/column index of (view v, sample i) in every nV-sized matrix:
/// view-major, samples contiguous within a view.
inline int stacked_index(int v, int i, int n) { return v * n + i; }

/// The learned similarity weights. For each (sample, view) pair the weights
/// are supported on that pair's active neighbor list, are nonnegative, and
/// sum to one.
class SimilarityGraph {
public:
    struct Row {
        std::vector<int> support;  ///< neighbor sample indices, ascending
        Vector weights;            ///< same length, >= 0, sums to 1
    };

    SimilarityGraph(int n, int views, SupportStage stage);

    int n() const { return n_; }
    int num_views() const { return views_; }
    SupportStage stage() const { return stage_; }
    void set_stage(SupportStage s) { stage_ = s; }

    Row& row(int i, int v) { return rows_[static_cast<std::size_t>(i * views_ + v)]; }
    const Row& row(int i, int v) const { return rows_[static_cast<std::size_t>(i * views_ + v)]; }

    /// Weight s_ij^v, zero when j is outside the support of (i, v).
    double weight(int i, int v, int j) const;

    /// The nV x nV row-stochastic matrix: entry (stacked_index(v, i),
    /// stacked_index(v, j)) = s_ij^v; no cross-view entries.
    Eigen::SparseMatrix<double> assemble() const;

    /// Debug dump, one "row col value" line per stored entry.
    void dump_coordinate_list(std::ostream& out) const;

private:
    int n_;
    int views_;
    SupportStage stage_;
    std::vector<Row> rows_;
};

/// Per-sample Gram matrices of the similarity-row QP, laid out view-major
/// over the sample's active supports (V equal blocks of size n_i on the
/// union support).
///
/// Gx and Gd are block-diagonal: block v is the Gram matrix of the
/// difference vectors x_i^v - x_j^v (resp. d_i^v - d_j^v) over the support,
/// so that a quadratic form in the stacked weights reproduces the per-view
/// reconstruction residuals exactly. Ecross couples equal neighbor indices
/// across view pairs (v < u); weights for a neighbor absent from one view's
/// support are structurally zero and fold into the diagonal.
struct SampleGrams {
    std::vector<int> sizes;                  ///< per-view support sizes
    std::vector<std::vector<int>> supports;  ///< per-view neighbor lists
    Matrix Gx;
    Matrix Gd;
    Matrix Ecross;

    int total() const;
};

/// Reconstruction weights over each per-view kNN set: for every (i, v) the
/// simplex-constrained least-squares fit of x_i^v by its neighbors, solved
/// with the simplex QP (zero residual problems return the uniform start).
/// Throws TrainingError naming (i, v) if the inner solve does not converge.
SimilarityGraph init_similarity(const MultiViewDataset& ds, const NeighborSets& nbrs,
                                const qp::SolveOptions& opts = {});

/// Re-embeds per-view-support rows into the union supports, padding new
/// entries with zeros; weights (and any quadratic form of them) are
/// unchanged.
SimilarityGraph to_union_support(const SimilarityGraph& graph, const NeighborSets& nbrs);

/// Gram matrices for sample i over the graph's current supports.
SampleGrams build_sample_grams(int i, const MultiViewDataset& ds, const SimilarityGraph& graph,
                               const Matrix& D);

/// Spec'd union-support overload.
SampleGrams build_sample_grams(int i, const MultiViewDataset& ds, const NeighborSets& nbrs,
                               const Matrix& D);

/// Solves the per-sample similarity QP
///   min  mu1 * s' Gx s + mu2 * s' Gd s + 2 sigma * s' Ecross s
/// over one simplex per view (the factor 2 matches the ordered-pair
/// cross-view sum of the global objective) and returns the stacked weights.
/// `warm` is the current row, used as the starting point.
Vector solve_similarity_row(const SampleGrams& grams, const Hyperparams& hp,
                            const qp::SolveOptions& opts, const Vector* warm = nullptr);

/// One full sweep of per-sample row updates against a snapshot of D.
/// Throws TrainingError carrying the sample index on non-convergence.
void update_similarity_rows(SimilarityGraph& graph, const MultiViewDataset& ds, const Matrix& D,
                            const Hyperparams& hp, const qp::SolveOptions& opts);

}  // namespace mvldl
