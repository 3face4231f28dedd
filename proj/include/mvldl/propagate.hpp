#pragma once

#include "mvldl/dataset.hpp"
#include "mvldl/graph.hpp"
#include "mvldl/hyperparams.hpp"
#include "mvldl/qp.hpp"

#include <Eigen/Sparse>

namespace mvldl {

/// The predicted label-distribution matrix: nV x q, row stacked_index(v, i)
/// holds the distribution of sample i seen from view v. Rows of labeled
/// samples are pinned to the ground truth (all views alike).
struct DistributionMatrix {
    Matrix values;
    std::vector<int> pinned_rows;  ///< stacked indices of labeled rows
};

/// Graph operators of the distribution update:
///   LD = I - S         (reconstruction residual operator)
///   LQ                 (view-consistency Laplacian: per sample the complete
///                       graph over its V rows, V*I - 11')
///   M  = LD' LD        (cached Gram)
/// tr(D' M D) sums the reconstruction residuals; 2 * tr(D' LQ D) sums the
/// ordered-pair view disagreements.
struct GraphLaplacians {
    Eigen::SparseMatrix<double> LD;
    Eigen::SparseMatrix<double> LQ;
    Eigen::SparseMatrix<double> M;
    int n = 0;
    int V = 0;
};

/// Builds LD, LQ and M from an assembled similarity matrix. Throws
/// ValidationError when S is not row-stochastic (rows must sum to 1 within
/// 1e-9).
GraphLaplacians build_laplacians(const Eigen::SparseMatrix<double>& S, int n, int V);

/// Stacked ground-truth rows for the labeled samples (every view of a
/// labeled sample gets its distribution), plus the pinned row list.
DistributionMatrix pinned_template(const MultiViewDataset& ds);

/// Initial distributions: minimizes the graph reconstruction residual
/// tr(D' LD' LD D) over simplex rows with labeled rows pinned, on the
/// initial (per-view support) similarity graph. Throws TrainingError when
/// no sample is labeled.
DistributionMatrix init_distributions(const SimilarityGraph& S, const MultiViewDataset& ds,
                                      const qp::SolveOptions& opts = {});

/// Distribution update:
///   min_D  lambda ||D - H||_F^2 + mu2 tr(D' M D) + 2 gamma tr(D' LQ D)
/// over simplex rows with labeled rows pinned, where H stacks the per-view
/// linear predictions. Labeled variables are eliminated by substitution and
/// the free block solved as one row-simplex QP (when mu2 = gamma = 0 the
/// problem separates and each free row is the simplex projection of its H
/// row). Throws TrainingError on non-convergence.
DistributionMatrix update_distributions(const GraphLaplacians& lap, const Matrix& H,
                                        const MultiViewDataset& ds, const Hyperparams& hp,
                                        const qp::SolveOptions& opts,
                                        const DistributionMatrix* warm = nullptr,
                                        bool allow_fast_path = true);

}  // namespace mvldl
