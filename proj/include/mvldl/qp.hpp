#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace mvldl::qp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Convex quadratic program
///
///     min  1/2 x^T G x + c^T x
///     s.t. x >= 0 and, for each block b, sum_{i in b} x_i = target_b,
///
/// i.e. the feasible set is a product of (scaled) probability simplices.
/// Individual variables may additionally be pinned to fixed values; pinned
/// variables are eliminated by substitution before the solve and reproduced
/// exactly in the returned solution. Blocks must be disjoint and must cover
/// every non-pinned variable.
struct BlockSimplexQP {
    Matrix G;                                   ///< symmetric PSD, m x m
    Vector c;                                   ///< linear term, length m
    std::vector<std::vector<int>> blocks;       ///< disjoint index blocks
    std::vector<double> targets;                ///< per-block sums; empty = all 1
    std::vector<std::pair<int, double>> fixed;  ///< pinned (index, value) pairs
};

struct QpSolution {
    Vector x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct SolveOptions {
    double tol = 1e-8;   ///< stop when the fixed-point residual drops below
    int max_iter = 10000;
    /// Optional warm start (full-length vector); projected onto the feasible
    /// set before use. Defaults to the uniform point of each block.
    std::optional<Vector> initial;
};

/// Euclidean projection of v onto {y >= 0, sum y = target} by
/// sort-and-threshold. target must be >= 0.
Vector project_simplex(const Vector& v, double target = 1.0);

/// Blockwise simplex projection. Entries not covered by any block are passed
/// through unchanged. Throws ParameterError on an empty block.
Vector project_block_simplex(const Vector& x,
                             const std::vector<std::vector<int>>& blocks,
                             const std::vector<double>& targets = {});

/// Accelerated projected-gradient solve of a BlockSimplexQP.
///
/// Runs FISTA-style momentum steps with the blockwise simplex projection as
/// the prox operator, starting from the uniform feasible point (or the
/// projected warm start). The step size is 1/L with L a power-iteration
/// estimate of the largest eigenvalue of G, doubled at runtime whenever a
/// plain gradient step fails to descend. Momentum steps that would increase
/// the objective are rejected and replaced by a plain step, so accepted
/// iterates are monotone. Terminates when the step-1 fixed-point residual
///     max_b || x - P(x - (Gx + c)) ||_inf
/// drops to tol; if max_iter is reached first the best feasible iterate is
/// returned with converged = false.
///
/// Throws NumericError if negative curvature beyond -1e-8 is met along an
/// iterate direction (G not PSD), ParameterError on malformed inputs.
QpSolution solve(const BlockSimplexQP& problem, const SolveOptions& opts = {});

/// Step-1 fixed-point residual of the projected-gradient map at x, the
/// quantity solve() reports and thresholds. x must be feasible within 1e-6
/// (FeasibilityError otherwise). Pinned variables are held at their values.
double kkt_residual(const BlockSimplexQP& problem, const Vector& x);

/// Structured solve used by the distribution updates:
///
///     min_X  tr(X^T B X) + tr(C^T X)   s.t. every row of X on the simplex,
///
/// with X an m x q matrix. This is the BlockSimplexQP with G = I_q (x) (2B)
/// and one block per row of X, solved without materializing the Kronecker
/// product (the Hessian is applied as B * X, one GEMM per iteration).
/// Options and the returned residual mean exactly what they do in solve().
QpSolution solve_row_simplex_matrix(const Matrix& B, const Matrix& C,
                                    const SolveOptions& opts, Matrix& X_out);

}  // namespace mvldl::qp
