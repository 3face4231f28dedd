#include "mvldl/metrics.hpp"

#include "mvldl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mvldl {

namespace {

constexpr double kSimplexTol = 1e-6;
constexpr double kKlFloor = 1e-12;

void check_on_simplex(const Vector& v, const char* name) {
    if (v.size() == 0) throw ValidationError(std::string(name) + " is empty");
    if (!v.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
    if (v.minCoeff() < -kSimplexTol)
        throw ValidationError(std::string(name) + " has negative entries");
    if (std::abs(v.sum() - 1.0) > kSimplexTol)
        throw ValidationError(std::string(name) + " does not sum to 1");
}

}  // namespace

MetricReport evaluate_pair(const Vector& truth, const Vector& prediction) {
    check_on_simplex(truth, "truth");
    check_on_simplex(prediction, "prediction");
    if (truth.size() != prediction.size())
        throw ValidationError("truth/prediction length mismatch");

    MetricReport r;
    r.count = 1;
    double clark2 = 0.0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const double p = truth[i];
        const double q = prediction[i];
        r.chebyshev = std::max(r.chebyshev, std::abs(p - q));
        if (p + q != 0.0) {
            const double d = (p - q) / (p + q);
            clark2 += d * d;
            r.canberra += std::abs(p - q) / (p + q);
        }
        if (p > 0.0) r.kl += p * std::log(p / std::max(q, kKlFloor));
        r.intersection += std::min(p, q);
    }
    r.clark = std::sqrt(clark2);
    r.cosine = truth.dot(prediction) / (truth.norm() * prediction.norm());
    return r;
}

MetricReport evaluate_set(const std::vector<Vector>& truths,
                          const std::vector<Vector>& predictions) {
    if (truths.empty()) throw ParameterError("evaluate_set: empty input");
    if (truths.size() != predictions.size())
        throw ParameterError("evaluate_set: size mismatch");

    MetricReport mean;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const MetricReport r = evaluate_pair(truths[i], predictions[i]);
        mean.chebyshev += r.chebyshev;
        mean.clark += r.clark;
        mean.canberra += r.canberra;
        mean.kl += r.kl;
        mean.cosine += r.cosine;
        mean.intersection += r.intersection;
    }
    const double inv = 1.0 / static_cast<double>(truths.size());
    mean.chebyshev *= inv;
    mean.clark *= inv;
    mean.canberra *= inv;
    mean.kl *= inv;
    mean.cosine *= inv;
    mean.intersection *= inv;
    mean.count = static_cast<long>(truths.size());
    return mean;
}

AggregateReport aggregate_folds(const std::vector<MetricReport>& reports) {
    if (reports.size() < 2) throw ParameterError("aggregate_folds: need at least 2 reports");

    const auto fields = {&MetricReport::chebyshev, &MetricReport::clark, &MetricReport::canberra,
                         &MetricReport::kl,        &MetricReport::cosine, &MetricReport::intersection};
    AggregateReport agg;
    agg.folds = static_cast<int>(reports.size());
    const double n = static_cast<double>(reports.size());
    for (auto field : fields) {
        double mean = 0.0;
        for (const auto& r : reports) mean += r.*field;
        mean /= n;
        double var = 0.0;
        for (const auto& r : reports) {
            const double d = r.*field - mean;
            var += d * d;
        }
        var /= (n - 1.0);
        agg.mean.*field = mean;
        agg.stddev.*field = std::sqrt(var);
    }
    long count = 0;
    for (const auto& r : reports) count += r.count;
    agg.mean.count = count;
    return agg;
}

nlohmann::ordered_json to_json(const MetricReport& report) {
    return nlohmann::ordered_json{{"chebyshev", report.chebyshev}, {"clark", report.clark},
                                  {"canberra", report.canberra},   {"kl", report.kl},
                                  {"cosine", report.cosine},       {"intersection", report.intersection}};
}

nlohmann::ordered_json to_json(const AggregateReport& report) {
    nlohmann::ordered_json metrics;
    const auto put = [&](const char* name, double MetricReport::*field) {
        metrics[name] = {{"mean", report.mean.*field}, {"std", report.stddev.*field}};
    };
    put("chebyshev", &MetricReport::chebyshev);
    put("clark", &MetricReport::clark);
    put("canberra", &MetricReport::canberra);
    put("kl", &MetricReport::kl);
    put("cosine", &MetricReport::cosine);
    put("intersection", &MetricReport::intersection);
    return nlohmann::ordered_json{{"folds", report.folds}, {"metrics", metrics}};
}

}  // namespace mvldl
