#include "mvldl/propagate.hpp"

#include "mvldl/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mvldl {

namespace {

// Free (unpinned) stacked row indices, view-major.
std::vector<int> free_rows(const MultiViewDataset& ds) {
    std::vector<int> rows;
    for (int v = 0; v < ds.num_views(); ++v)
        for (int i = 0; i < ds.n(); ++i)
            if (!ds.is_labeled(i)) rows.push_back(stacked_index(v, i, ds.n()));
    return rows;
}

// Shared core of init and update:
//   min_D lambda ||D - H||^2 + tr(D' A D)   (A = mu2 M + 2 gamma LQ)
// over simplex rows, labeled rows pinned by substitution.
DistributionMatrix solve_distribution_qp(const Eigen::SparseMatrix<double>& A, double lambda,
                                         const Matrix* H, const MultiViewDataset& ds,
                                         const qp::SolveOptions& opts,
                                         const DistributionMatrix* warm) {
    const int n = ds.n();
    const int V = ds.num_views();
    const int q = ds.q();
    const int nV = n * V;

    DistributionMatrix out = pinned_template(ds);
    const std::vector<int> F = free_rows(ds);
    const int mf = static_cast<int>(F.size());
    if (mf == 0) return out;

    std::vector<int> pos_of(static_cast<std::size_t>(nV), -1);
    for (int a = 0; a < mf; ++a) pos_of[static_cast<std::size_t>(F[static_cast<std::size_t>(a)])] = a;

    // Dense free-free block of A plus the ridge; the pinned columns feed the
    // linear term. Desk-scale nV keeps a dense slice cheap and lets the QP
    // run one GEMM per iteration.
    Matrix B = Matrix::Zero(mf, mf);
    Matrix C = Matrix::Zero(mf, q);  // linear coefficients, tr(C' D_f)
    for (int a = 0; a < mf; ++a) B(a, a) = lambda;

    for (int col = 0; col < A.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
            const int r = static_cast<int>(it.row());
            const int c = static_cast<int>(it.col());
            const int pr = pos_of[static_cast<std::size_t>(r)];
            const int pc = pos_of[static_cast<std::size_t>(c)];
            if (pr >= 0 && pc >= 0) {
                B(pr, pc) += it.value();
            } else if (pr >= 0 && pc < 0) {
                C.row(pr) += 2.0 * it.value() * out.values.row(c);
            }
            // pinned-row/free-column entries are the transpose of the above
            // (A is symmetric) and fold into the same linear term; rows with
            // both ends pinned only shift the constant.
        }
    }
    if (H != nullptr) {
        for (int a = 0; a < mf; ++a)
            C.row(a) -= 2.0 * lambda * H->row(F[static_cast<std::size_t>(a)]);
    }
    B = 0.5 * (B + B.transpose()).eval();

    // Scaling B and C together leaves the minimizer untouched and makes the
    // residual tolerance scale-free.
    const double scale = B.cwiseAbs().maxCoeff();
    if (scale > 0.0) {
        B /= scale;
        C /= scale;
    }

    qp::SolveOptions local = opts;
    if (warm != nullptr) {
        Vector x0(static_cast<Eigen::Index>(mf) * q);
        Eigen::Map<Matrix> X0(x0.data(), mf, q);
        for (int a = 0; a < mf; ++a) X0.row(a) = warm->values.row(F[static_cast<std::size_t>(a)]);
        local.initial = x0;
    }

    Matrix Df;
    const qp::QpSolution sol = qp::solve_row_simplex_matrix(B, C, local, Df);
    if (!sol.converged)
        throw TrainingError("distribution update did not converge (residual " +
                            std::to_string(sol.kkt_residual) + " after " +
                            std::to_string(sol.iterations) + " iterations)");

    for (int a = 0; a < mf; ++a) out.values.row(F[static_cast<std::size_t>(a)]) = Df.row(a);
    return out;
}

}  // namespace

GraphLaplacians build_laplacians(const Eigen::SparseMatrix<double>& S, int n, int V) {
    const int nV = n * V;
    if (S.rows() != nV || S.cols() != nV)
        throw ShapeError("build_laplacians: S must be nV x nV");

    Vector row_sums = Vector::Zero(nV);
    for (int col = 0; col < S.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(S, col); it; ++it)
            row_sums[it.row()] += it.value();
    for (int r = 0; r < nV; ++r)
        if (std::abs(row_sums[r] - 1.0) > 1e-9)
            throw ValidationError("build_laplacians: S row " + std::to_string(r) +
                                  " is not stochastic");

    GraphLaplacians lap;
    lap.n = n;
    lap.V = V;

    Eigen::SparseMatrix<double> I(nV, nV);
    I.setIdentity();
    lap.LD = I - S;
    lap.M = Eigen::SparseMatrix<double>(lap.LD.transpose() * lap.LD);

    // Per sample, the complete-graph Laplacian over its V stacked rows.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(V) * static_cast<std::size_t>(V));
    for (int i = 0; i < n; ++i) {
        for (int v = 0; v < V; ++v) {
            for (int u = 0; u < V; ++u) {
                const double val = (v == u) ? static_cast<double>(V - 1) : -1.0;
                if (val != 0.0)
                    trips.emplace_back(stacked_index(v, i, n), stacked_index(u, i, n), val);
            }
        }
    }
    lap.LQ = Eigen::SparseMatrix<double>(nV, nV);
    lap.LQ.setFromTriplets(trips.begin(), trips.end());
    return lap;
}

DistributionMatrix pinned_template(const MultiViewDataset& ds) {
    DistributionMatrix out;
    out.values = Matrix::Zero(ds.n() * ds.num_views(), ds.q());
    for (int v = 0; v < ds.num_views(); ++v) {
        for (int i : ds.labeled_indices()) {
            const int r = stacked_index(v, i, ds.n());
            out.values.row(r) = ds.label(i).values().transpose();
            out.pinned_rows.push_back(r);
        }
    }
    return out;
}

DistributionMatrix init_distributions(const SimilarityGraph& S, const MultiViewDataset& ds,
                                      const qp::SolveOptions& opts) {
    if (ds.num_labeled() == 0)
        throw TrainingError("init_distributions: no labeled samples to anchor the graph");
    const GraphLaplacians lap = build_laplacians(S.assemble(), ds.n(), ds.num_views());
    return solve_distribution_qp(lap.M, 0.0, nullptr, ds, opts, nullptr);
}

DistributionMatrix update_distributions(const GraphLaplacians& lap, const Matrix& H,
                                        const MultiViewDataset& ds, const Hyperparams& hp,
                                        const qp::SolveOptions& opts,
                                        const DistributionMatrix* warm, bool allow_fast_path) {
    const int nV = ds.n() * ds.num_views();
    if (H.rows() != nV || H.cols() != ds.q())
        throw ShapeError("update_distributions: H must be nV x q");

    if (allow_fast_path && hp.mu2 == 0.0 && hp.gamma == 0.0) {
        // The QP separates: each free row minimizes ||d - h||^2 alone.
        DistributionMatrix out = pinned_template(ds);
        for (const int r : free_rows(ds))
            out.values.row(r) = qp::project_simplex(H.row(r).transpose()).transpose();
        return out;
    }

    Eigen::SparseMatrix<double> A = hp.mu2 * lap.M + 2.0 * hp.gamma * lap.LQ;
    return solve_distribution_qp(A, hp.lambda, &H, ds, opts, warm);
}

}  // namespace mvldl
