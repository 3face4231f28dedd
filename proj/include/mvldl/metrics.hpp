#pragma once

#include "mvldl/dataset.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace mvldl {

/// The six distribution-comparison measures. Chebyshev, Clark, Canberra and
/// KL are distances (lower is better); cosine and intersection are
/// similarities (higher is better).
struct MetricReport {
    double chebyshev = 0.0;
    double clark = 0.0;
    double canberra = 0.0;
    double kl = 0.0;
    double cosine = 0.0;
    double intersection = 0.0;
    long count = 0;  ///< number of (truth, prediction) pairs averaged
};

/// Per-metric mean and sample standard deviation across folds.
struct AggregateReport {
    MetricReport mean;
    MetricReport stddev;
    int folds = 0;
};

/// All six measures for one (truth, prediction) pair. Both arguments must be
/// on the simplex within 1e-6. Zero-handling: Clark/Canberra terms with
/// p_i + q_i = 0 contribute nothing, KL terms with p_i = 0 contribute
/// nothing, and q_i is clamped below at 1e-12 inside the KL logarithm.
MetricReport evaluate_pair(const Vector& truth, const Vector& prediction);

/// Arithmetic mean of per-pair reports over a test set.
MetricReport evaluate_set(const std::vector<Vector>& truths, const std::vector<Vector>& predictions);

/// Mean and sample (n-1) standard deviation across at least two fold reports.
AggregateReport aggregate_folds(const std::vector<MetricReport>& reports);

/// Fixed-key JSON with metrics in report order.
nlohmann::ordered_json to_json(const MetricReport& report);
nlohmann::ordered_json to_json(const AggregateReport& report);

}  // namespace mvldl
