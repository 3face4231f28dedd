#include "mvldl/qp.hpp"

#include "mvldl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvldl::qp {

namespace {

// Feasibility slack accepted when validating inputs.
constexpr double kFeasTol = 1e-6;
// Per-step objective increase tolerated before a momentum step is rejected.
constexpr double kAcceptSlack = 1e-12;

void check_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw NumericError(std::string("qp: non-finite ") + what);
}

}  // namespace

Vector project_simplex(const Vector& v, double target) {
    if (target < 0.0) throw ParameterError("qp: simplex target must be nonnegative");
    const Eigen::Index m = v.size();
    if (m == 0) throw ParameterError("qp: cannot project an empty block");
    if (target == 0.0) return Vector::Zero(m);

    std::vector<double> u(v.data(), v.data() + m);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    int support = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double candidate = (cumsum - target) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
            tau = candidate;
            support = static_cast<int>(j + 1);
        }
    }
    (void)support;
    return (v.array() - tau).max(0.0).matrix();
}

Vector project_block_simplex(const Vector& x,
                             const std::vector<std::vector<int>>& blocks,
                             const std::vector<double>& targets) {
    if (!targets.empty() && targets.size() != blocks.size())
        throw ParameterError("qp: targets/blocks size mismatch");
    Vector out = x;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        if (blk.empty()) throw ParameterError("qp: empty block");
        const double target = targets.empty() ? 1.0 : targets[b];
        Vector sub(blk.size());
        for (std::size_t j = 0; j < blk.size(); ++j) {
            const int idx = blk[j];
            if (idx < 0 || idx >= x.size()) throw ParameterError("qp: block index out of range");
            sub[static_cast<Eigen::Index>(j)] = x[idx];
        }
        sub = project_simplex(sub, target);
        for (std::size_t j = 0; j < blk.size(); ++j)
            out[blk[j]] = sub[static_cast<Eigen::Index>(j)];
    }
    return out;
}

namespace {

// Power-iteration estimate of the largest eigenvalue of G, padded by 5%.
// Also the first line of defense against indefinite inputs: a clearly
// negative Rayleigh quotient is reported as non-PSD.
template <typename ApplyG>
double estimate_lipschitz(int m, ApplyG&& applyG) {
    Vector v(m), w(m);
    for (int i = 0; i < m; ++i) {
        const std::uint64_t h = static_cast<std::uint64_t>(i + 1) * 2654435761ULL;
        v[i] = 0.5 + static_cast<double>(h & 0xffffULL) / 65536.0;
    }
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < 50; ++it) {
        applyG(v, w);
        lam = v.dot(w);
        const double nrm = w.norm();
        if (nrm < 1e-300) {
            lam = 0.0;
            break;
        }
        v = w / nrm;
    }
    if (lam < -1e-8 * std::max(1.0, std::abs(lam)))
        throw NumericError("qp: Hessian is not positive semidefinite (negative Rayleigh quotient)");
    return std::max(lam, 0.0) * 1.05 + 1e-12;
}

// Monotone accelerated projected gradient over an abstract Hessian operator
// and projection. `x` on entry is the (feasible) starting point.
template <typename ApplyG, typename Project>
QpSolution apgd_core(int m, ApplyG&& applyG, const Vector& c, Project&& project,
                     const SolveOptions& opts, Vector x) {
    QpSolution sol;
    if (m == 0) {
        sol.converged = true;
        return sol;
    }
    if (opts.tol <= 0.0) throw ParameterError("qp: tol must be positive");
    if (opts.max_iter < 1) throw ParameterError("qp: max_iter must be >= 1");

    Vector g(m), gy(m), y(m), z(m), gz(m), xprev(m), gprev(m), d(m);
    const auto value = [&](const Vector& xx, const Vector& gg) {
        return 0.5 * (xx.dot(gg) + xx.dot(c));
    };
    const auto residual_at = [&](const Vector& xx, const Vector& gg) {
        return (xx - project(xx - gg)).template lpNorm<Eigen::Infinity>();
    };

    applyG(x, g);
    g += c;
    double f = value(x, g);
    double res = residual_at(x, g);
    sol.kkt_residual = res;
    if (res <= opts.tol) {
        sol.x = x;
        sol.objective = f;
        sol.converged = true;
        return sol;
    }

    double L = estimate_lipschitz(m, applyG);

    Vector best_x = x;
    double best_f = f;
    double best_res = res;

    xprev = x;
    gprev = g;
    double t = 1.0;
    bool stalled = false;

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;

        // Extrapolated point and its gradient; G is linear so the gradient at
        // y is an affine combination of the two stored gradients (no matvec).
        y = x + beta * (x - xprev);
        gy = g + beta * (g - gprev);
        z = project(y - gy / L);
        applyG(z, gz);
        gz += c;
        double fz = value(z, gz);

        const double slack = kAcceptSlack * std::max(1.0, std::abs(f));
        bool accepted = fz <= f + slack;
        if (accepted) {
            t = t_next;
        } else {
            // Momentum overshoot: restart and fall back to plain projected
            // gradient from x, doubling L until the step descends.
            t = 1.0;
            for (int tries = 0; tries < 60 && !accepted; ++tries) {
                z = project(x - g / L);
                applyG(z, gz);
                gz += c;
                fz = value(z, gz);
                accepted = fz <= f + slack;
                if (!accepted) L *= 2.0;
            }
            if (!accepted) {
                stalled = true;  // at the numerical floor, nothing to gain
            }
        }
        sol.iterations = iter;
        if (stalled) break;

        // Curvature probe along the accepted displacement.
        d = z - x;
        const double dn2 = d.squaredNorm();
        if (dn2 > 0.0) {
            const double curv = d.dot(gz - g);
            if (curv < -1e-8 * dn2)
                throw NumericError("qp: negative curvature along an iterate direction (G not PSD)");
        }

        xprev.swap(x);
        gprev.swap(g);
        x = z;
        g = gz;
        f = fz;

        res = residual_at(x, g);
        if (f < best_f) {
            best_f = f;
            best_x = x;
            best_res = res;
        }
        if (res <= opts.tol) {
            sol.x = x;
            sol.objective = f;
            sol.kkt_residual = res;
            sol.converged = true;
            return sol;
        }
    }

    // Out of iterations (or stalled at the rounding floor): hand back the
    // best feasible iterate, flagged as non-converged unless it already
    // meets the tolerance.
    sol.x = best_x;
    sol.objective = best_f;
    sol.kkt_residual = best_res;
    sol.converged = best_res <= opts.tol;
    return sol;
}

struct Reduced {
    std::vector<int> free_idx;                  // free position -> original index
    std::vector<int> pos_of;                    // original index -> free position or -1
    std::vector<std::vector<int>> blocks;       // over free positions
    std::vector<double> targets;
    std::vector<std::pair<int, double>> fixed;  // validated copy
};

Reduced reduce_problem(const BlockSimplexQP& p) {
    const int m = static_cast<int>(p.G.rows());
    if (p.G.cols() != m) throw ParameterError("qp: G must be square");
    if (p.c.size() != m) throw ParameterError("qp: c length must match G");
    if (!p.targets.empty() && p.targets.size() != p.blocks.size())
        throw ParameterError("qp: targets/blocks size mismatch");

    const double gmax = m > 0 ? p.G.cwiseAbs().maxCoeff() : 0.0;
    if ((p.G - p.G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, gmax))
        throw ParameterError("qp: G is not symmetric");

    Reduced r;
    std::vector<char> is_fixed(static_cast<std::size_t>(m), 0);
    std::vector<double> fixed_val(static_cast<std::size_t>(m), 0.0);
    for (const auto& [idx, val] : p.fixed) {
        if (idx < 0 || idx >= m) throw ParameterError("qp: fixed index out of range");
        if (is_fixed[static_cast<std::size_t>(idx)]) throw ParameterError("qp: duplicate fixed index");
        if (!std::isfinite(val) || val < -1e-12)
            throw ParameterError("qp: fixed value must be finite and nonnegative");
        is_fixed[static_cast<std::size_t>(idx)] = 1;
        fixed_val[static_cast<std::size_t>(idx)] = val;
        r.fixed.emplace_back(idx, val);
    }

    r.pos_of.assign(static_cast<std::size_t>(m), -1);
    std::vector<char> covered(static_cast<std::size_t>(m), 0);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const auto& blk = p.blocks[b];
        if (blk.empty()) throw ParameterError("qp: empty block");
        double target = p.targets.empty() ? 1.0 : p.targets[b];
        std::vector<int> free_members;
        for (int idx : blk) {
            if (idx < 0 || idx >= m) throw ParameterError("qp: block index out of range");
            if (covered[static_cast<std::size_t>(idx)])
                throw ParameterError("qp: blocks are not disjoint");
            covered[static_cast<std::size_t>(idx)] = 1;
            if (is_fixed[static_cast<std::size_t>(idx)]) {
                target -= fixed_val[static_cast<std::size_t>(idx)];
            } else {
                free_members.push_back(idx);
            }
        }
        if (target < -1e-9)
            throw ParameterError("qp: block target smaller than its fixed entries");
        target = std::max(target, 0.0);
        if (free_members.empty()) {
            if (target > 1e-9)
                throw ParameterError("qp: fully pinned block cannot reach its target");
            continue;
        }
        std::vector<int> blk_pos;
        for (int idx : free_members) {
            r.pos_of[static_cast<std::size_t>(idx)] = static_cast<int>(r.free_idx.size());
            blk_pos.push_back(static_cast<int>(r.free_idx.size()));
            r.free_idx.push_back(idx);
        }
        r.blocks.push_back(std::move(blk_pos));
        r.targets.push_back(target);
    }
    for (int i = 0; i < m; ++i) {
        if (!is_fixed[static_cast<std::size_t>(i)] && r.pos_of[static_cast<std::size_t>(i)] < 0)
            throw ParameterError("qp: variable not covered by any block or pin");
    }
    return r;
}

}  // namespace

QpSolution solve(const BlockSimplexQP& problem, const SolveOptions& opts) {
    check_finite(problem.c, "linear term");
    const Reduced red = reduce_problem(problem);
    const int m = static_cast<int>(problem.G.rows());
    const int mf = static_cast<int>(red.free_idx.size());

    Vector full = Vector::Zero(m);
    for (const auto& [idx, val] : red.fixed) full[idx] = val;

    if (mf == 0) {
        QpSolution sol;
        sol.x = full;
        sol.objective = 0.5 * full.dot(problem.G * full) + problem.c.dot(full);
        sol.converged = true;
        return sol;
    }

    Matrix Gff(mf, mf);
    Vector cf(mf);
    for (int a = 0; a < mf; ++a) {
        const int ia = red.free_idx[static_cast<std::size_t>(a)];
        for (int b = 0; b < mf; ++b)
            Gff(a, b) = problem.G(ia, red.free_idx[static_cast<std::size_t>(b)]);
        double lin = problem.c[ia];
        for (const auto& [idx, val] : red.fixed) lin += problem.G(ia, idx) * val;
        cf[a] = lin;
    }
    // Symmetrize: the solve sees one matrix, not two triangles.
    Gff = 0.5 * (Gff + Gff.transpose()).eval();

    Vector start(mf);
    if (opts.initial.has_value()) {
        if (opts.initial->size() != m) throw ParameterError("qp: initial point has wrong length");
        for (int a = 0; a < mf; ++a) start[a] = (*opts.initial)[red.free_idx[static_cast<std::size_t>(a)]];
        start = project_block_simplex(start, red.blocks, red.targets);
    } else {
        for (std::size_t b = 0; b < red.blocks.size(); ++b)
            for (int pos : red.blocks[b])
                start[pos] = red.targets[b] / static_cast<double>(red.blocks[b].size());
    }

    const auto applyG = [&](const Vector& v, Vector& out) { out.noalias() = Gff * v; };
    const auto project = [&](const Vector& v) {
        return project_block_simplex(v, red.blocks, red.targets);
    };
    QpSolution sol = apgd_core(mf, applyG, cf, project, opts, std::move(start));

    for (int a = 0; a < mf; ++a) full[red.free_idx[static_cast<std::size_t>(a)]] = sol.x[a];
    sol.x = full;
    sol.objective = 0.5 * full.dot(problem.G * full) + problem.c.dot(full);
    return sol;
}

double kkt_residual(const BlockSimplexQP& problem, const Vector& x) {
    const Reduced red = reduce_problem(problem);
    const int m = static_cast<int>(problem.G.rows());
    if (x.size() != m) throw ParameterError("qp: x has wrong length");

    // Feasibility gate: nonnegativity, block sums, pins.
    if (x.minCoeff() < -kFeasTol) throw FeasibilityError("qp: x has negative entries");
    for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
        double sum = 0.0;
        for (int idx : problem.blocks[b]) sum += x[idx];
        const double target = problem.targets.empty() ? 1.0 : problem.targets[b];
        if (std::abs(sum - target) > kFeasTol)
            throw FeasibilityError("qp: block sum violates its target");
    }
    for (const auto& [idx, val] : red.fixed)
        if (std::abs(x[idx] - val) > kFeasTol)
            throw FeasibilityError("qp: pinned variable off its value");

    const Vector g = problem.G * x + problem.c;
    double res = 0.0;
    for (std::size_t b = 0; b < red.blocks.size(); ++b) {
        Vector sub(red.blocks[b].size());
        for (std::size_t j = 0; j < red.blocks[b].size(); ++j) {
            const int idx = red.free_idx[static_cast<std::size_t>(red.blocks[b][j])];
            sub[static_cast<Eigen::Index>(j)] = x[idx] - g[idx];
        }
        sub = project_simplex(sub, red.targets[b]);
        for (std::size_t j = 0; j < red.blocks[b].size(); ++j) {
            const int idx = red.free_idx[static_cast<std::size_t>(red.blocks[b][j])];
            res = std::max(res, std::abs(x[idx] - sub[static_cast<Eigen::Index>(j)]));
        }
    }
    return res;
}

QpSolution solve_row_simplex_matrix(const Matrix& B, const Matrix& C,
                                    const SolveOptions& opts, Matrix& X_out) {
    const int m = static_cast<int>(B.rows());
    const int q = static_cast<int>(C.cols());
    if (B.cols() != m) throw ParameterError("qp: B must be square");
    if (C.rows() != m) throw ParameterError("qp: B/C row mismatch");
    if (m == 0) {
        X_out.resize(0, q);
        QpSolution sol;
        sol.converged = true;
        return sol;
    }
    if (q < 1) throw ParameterError("qp: need at least one column");
    const double bmax = B.cwiseAbs().maxCoeff();
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, bmax))
        throw ParameterError("qp: B is not symmetric");

    const int total = m * q;
    Vector c(total);
    Eigen::Map<Matrix>(c.data(), m, q) = C;

    Vector start(total);
    if (opts.initial.has_value()) {
        if (opts.initial->size() != total) throw ParameterError("qp: initial point has wrong length");
        start = *opts.initial;
    } else {
        start.setConstant(1.0 / static_cast<double>(q));
    }

    const auto applyG = [&](const Vector& v, Vector& out) {
        out.resize(total);
        Eigen::Map<const Matrix> V(v.data(), m, q);
        Eigen::Map<Matrix> O(out.data(), m, q);
        O.noalias() = 2.0 * (B * V);
    };
    const auto project = [&](const Vector& v) {
        Vector out(total);
        Eigen::Map<const Matrix> V(v.data(), m, q);
        Eigen::Map<Matrix> O(out.data(), m, q);
        Vector row(q);
        for (int r = 0; r < m; ++r) {
            row = V.row(r).transpose();
            O.row(r) = project_simplex(row).transpose();
        }
        return out;
    };

    QpSolution sol = apgd_core(total, applyG, c,
                               [&](const Vector& v) { return project(v); }, opts,
                               project(start));
    X_out = Eigen::Map<const Matrix>(sol.x.data(), m, q);
    return sol;
}

}  // namespace mvldl::qp
