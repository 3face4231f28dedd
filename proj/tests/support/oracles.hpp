#pragma once

// Independent reference implementations the test suites check the library
// against. Everything here is deliberately written the straightforward way
// (scalar loops, exhaustive enumeration) and shares no code with the
// library paths under test.

#include "mvldl/dataset.hpp"
#include "mvldl/qp.hpp"
#include "mvldl/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

using mvldl::Matrix;
using mvldl::Vector;

// ---------------------------------------------------------------------------
// Exhaustive grid search over a product of simplices at resolution `step`.
// Feasible grid points have block coordinates that are multiples of step and
// sum to the block target (1). Suitable for total dimension <= 4.
inline double grid_search_qp(const Matrix& G, const Vector& c,
                             const std::vector<std::vector<int>>& blocks, double step) {
    const int levels = static_cast<int>(std::lround(1.0 / step));
    Vector x = Vector::Zero(G.rows());
    double best = std::numeric_limits<double>::infinity();

    std::function<void(std::size_t)> per_block = [&](std::size_t b) {
        if (b == blocks.size()) {
            best = std::min(best, 0.5 * x.dot(G * x) + c.dot(x));
            return;
        }
        const auto& blk = blocks[b];
        // Enumerate compositions of `levels` into |blk| parts.
        std::function<void(std::size_t, int)> fill = [&](std::size_t pos, int left) {
            if (pos + 1 == blk.size()) {
                x[blk[pos]] = left * step;
                per_block(b + 1);
                return;
            }
            for (int units = 0; units <= left; ++units) {
                x[blk[pos]] = units * step;
                fill(pos + 1, left - units);
            }
        };
        fill(0, levels);
    };
    per_block(0);
    return best;
}

// ---------------------------------------------------------------------------
// Scalar-loop versions of the six distribution metrics.
struct MetricValues {
    double chebyshev, clark, canberra, kl, cosine, intersection;
};

inline MetricValues metrics_reference(const Vector& p, const Vector& q) {
    MetricValues m{0, 0, 0, 0, 0, 0};
    double clark2 = 0, dot = 0, np = 0, nq = 0;
    for (int i = 0; i < p.size(); ++i) {
        const double a = p[i], b = q[i];
        if (std::abs(a - b) > m.chebyshev) m.chebyshev = std::abs(a - b);
        if (a + b > 0) {
            clark2 += (a - b) * (a - b) / ((a + b) * (a + b));
            m.canberra += std::abs(a - b) / (a + b);
        }
        if (a > 0) m.kl += a * std::log(a / std::max(b, 1e-12));
        m.intersection += std::min(a, b);
        dot += a * b;
        np += a * a;
        nq += b * b;
    }
    m.clark = std::sqrt(clark2);
    m.cosine = dot / (std::sqrt(np) * std::sqrt(nq));
    return m;
}

// ---------------------------------------------------------------------------
// O(n^2) full-sort nearest neighbors in one view.
inline std::vector<int> knn_reference(const Matrix& X, int i, int k) {
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < X.rows(); ++j) {
        if (j == i) continue;
        all.emplace_back((X.row(i) - X.row(j)).norm(), j);
    }
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (int j = 0; j < k; ++j) out.push_back(all[static_cast<std::size_t>(j)].second);
    return out;
}

// ---------------------------------------------------------------------------
// Central finite differences of f at W, step h.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& W,
                          double h) {
    Matrix g(W.rows(), W.cols());
    Matrix probe = W;
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) {
            probe(r, c) = W(r, c) + h;
            const double fp = f(probe);
            probe(r, c) = W(r, c) - h;
            const double fm = f(probe);
            probe(r, c) = W(r, c);
            g(r, c) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Random points on the q-simplex (normalized exponentials).
inline Vector random_simplex_point(mvldl::RandomStream& rng, int q) {
    Vector v(q);
    for (int i = 0; i < q; ++i) v[i] = -std::log(1.0 - rng.uniform());
    return v / v.sum();
}

// Random symmetric PSD matrix R' R (+ optional diagonal boost).
inline Matrix random_psd(mvldl::RandomStream& rng, int m, double diag = 0.0) {
    Matrix R(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) R(r, c) = rng.normal();
    Matrix G = R.transpose() * R;
    G.diagonal().array() += diag;
    return G;
}

}  // namespace oracles
