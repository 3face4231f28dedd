#include "mvldl/experiment.hpp"

#include "mvldl/errors.hpp"
#include "mvldl/log.hpp"
#include "mvldl/rng.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

namespace mvldl {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("MVLDL_LOG");
        if (env == nullptr) return LogLevel::off;
        const std::string s(env);
        if (s == "2" || s == "debug") return LogLevel::debug;
        if (s == "1" || s == "info") return LogLevel::info;
        return LogLevel::off;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "[mvldl] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::fprintf(stderr, "[mvldl] %s\n", msg.c_str());
}

AblationVariant parse_variant(const std::string& name) {
    if (name == "full") return AblationVariant::full;
    if (name == "no-sigma") return AblationVariant::no_sigma;
    if (name == "no-gamma") return AblationVariant::no_gamma;
    if (name == "per-view-nbrs") return AblationVariant::per_view_nbrs;
    throw ParameterError("unknown variant '" + name +
                         "' (expected full, no-sigma, no-gamma or per-view-nbrs)");
}

std::string variant_name(AblationVariant variant) {
    switch (variant) {
        case AblationVariant::full: return "full";
        case AblationVariant::no_sigma: return "no-sigma";
        case AblationVariant::no_gamma: return "no-gamma";
        case AblationVariant::per_view_nbrs: return "per-view-nbrs";
    }
    return "full";
}

namespace {

// The variant's overrides: knocked-out regularizers or per-view supports.
std::pair<Hyperparams, NeighborMode> apply_variant(const Hyperparams& hp, AblationVariant variant) {
    Hyperparams out = hp;
    NeighborMode mode = NeighborMode::unioned;
    switch (variant) {
        case AblationVariant::full: break;
        case AblationVariant::no_sigma: out.sigma = 0.0; break;
        case AblationVariant::no_gamma: out.gamma = 0.0; break;
        case AblationVariant::per_view_nbrs: mode = NeighborMode::per_view; break;
    }
    return {out, mode};
}

MetricReport run_fold(const MultiViewDataset& ds, const CvConfig& config,
                      const std::vector<int>& train_idx, const std::vector<int>& test_idx,
                      int fold) {
    const auto [hp, mode] = apply_variant(config.hyper, config.variant);

    MultiViewDataset train_ds = subset(ds, train_idx);
    if (config.labeled_ratio < 1.0)
        train_ds = mask_labels(train_ds, config.labeled_ratio,
                               RandomStream::mix(config.seed, static_cast<std::uint64_t>(fold)));

    const TrainResult trained = train(train_ds, hp, mode);

    std::vector<Vector> truths, preds;
    std::vector<Vector> sample(static_cast<std::size_t>(ds.num_views()));
    for (int i : test_idx) {
        if (!ds.has_eval_label(i))
            throw ValidationError("cross validation: test sample " + std::to_string(i) +
                                  " has no ground truth");
        for (int v = 0; v < ds.num_views(); ++v) sample[static_cast<std::size_t>(v)] = ds.x(i, v).transpose();
        preds.push_back(predict(trained.params, sample).values());
        truths.push_back(ds.eval_label(i).values());
    }
    return evaluate_set(truths, preds);
}

}  // namespace

CvResult run_cv(const MultiViewDataset& ds, const CvConfig& config) {
    if (!(config.labeled_ratio > 0.0) || config.labeled_ratio > 1.0)
        throw ParameterError("cv: labeled ratio must be in (0, 1]");
    if (config.jobs < 1) throw ParameterError("cv: jobs must be >= 1");
    config.hyper.validate();

    const FoldPlan plan = split_folds(ds, config.folds, config.seed);
    const int folds = static_cast<int>(plan.folds.size());

    std::vector<MetricReport> reports(static_cast<std::size_t>(folds));
    std::exception_ptr failure;
    std::atomic<int> next{0};
    std::atomic<int> failed_fold{-1};

    const auto worker = [&] {
        for (;;) {
            const int f = next.fetch_add(1);
            if (f >= folds || failed_fold.load() >= 0) return;
            try {
                log_info("fold " + std::to_string(f) + "/" + std::to_string(folds));
                reports[static_cast<std::size_t>(f)] =
                    run_fold(ds, config, plan.folds[static_cast<std::size_t>(f)].first,
                             plan.folds[static_cast<std::size_t>(f)].second, f);
            } catch (...) {
                int expected = -1;
                if (failed_fold.compare_exchange_strong(expected, f)) failure = std::current_exception();
                return;
            }
        }
    };

    if (config.jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int threads = std::min(config.jobs, folds);
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed_fold.load() >= 0) {
        try {
            std::rethrow_exception(failure);
        } catch (const Error& e) {
            throw TrainingError("fold " + std::to_string(failed_fold.load()) + ": " + e.what());
        }
    }

    CvResult result;
    result.per_fold = std::move(reports);
    result.aggregate = aggregate_folds(result.per_fold);
    return result;
}

std::vector<SweepRow> run_sweep(const MultiViewDataset& ds, const CvConfig& base, SweepKind kind,
                                const std::vector<double>& grid) {
    if (grid.empty()) throw ParameterError("sweep: empty grid");
    std::vector<SweepRow> rows;
    for (double value : grid) {
        CvConfig config = base;
        if (kind == SweepKind::labeled_ratio)
            config.labeled_ratio = value;
        else
            config.hyper.lambda = value;
        log_info("sweep point " + std::to_string(value));
        rows.push_back({value, run_cv(ds, config).aggregate});
    }
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_metric_columns(std::string& row, const AggregateReport& agg) {
    const auto fields = {&MetricReport::chebyshev, &MetricReport::clark, &MetricReport::canberra,
                         &MetricReport::kl,        &MetricReport::cosine, &MetricReport::intersection};
    for (auto field : fields) row += "," + fmt(agg.mean.*field);
    for (auto field : fields) row += "," + fmt(agg.stddev.*field);
}

constexpr const char* kMetricHeader =
    "chebyshev_mean,clark_mean,canberra_mean,kl_mean,cosine_mean,intersection_mean,"
    "chebyshev_std,clark_std,canberra_std,kl_std,cosine_std,intersection_std";

}  // namespace

nlohmann::ordered_json cv_report_json(const CvConfig& config, const CvResult& result) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(config.variant);
    j["folds"] = config.folds;
    j["labeled_ratio"] = config.labeled_ratio;
    j["seed"] = config.seed;
    j["hyperparams"] = {{"lambda", config.hyper.lambda}, {"mu1", config.hyper.mu1},
                        {"mu2", config.hyper.mu2},       {"sigma", config.hyper.sigma},
                        {"gamma", config.hyper.gamma},   {"k", config.hyper.k}};
    j["metrics"] = to_json(result.aggregate)["metrics"];
    nlohmann::ordered_json per_fold = nlohmann::ordered_json::array();
    for (const auto& r : result.per_fold) per_fold.push_back(to_json(r));
    j["per_fold"] = std::move(per_fold);
    return j;
}

std::string cv_report_csv_row(const CvConfig& config, const CvResult& result) {
    std::string out = "variant,folds,labeled_ratio,";
    out += kMetricHeader;
    out += "\n";
    out += variant_name(config.variant) + "," + std::to_string(config.folds) + "," +
           fmt(config.labeled_ratio);
    append_metric_columns(out, result.aggregate);
    out += "\n";
    return out;
}

std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows) {
    std::string out = kind == SweepKind::labeled_ratio ? "labeled_ratio," : "lambda,";
    out += kMetricHeader;
    out += "\n";
    for (const auto& row : rows) {
        out += fmt(row.value);
        append_metric_columns(out, row.report);
        out += "\n";
    }
    return out;
}

}  // namespace mvldl
