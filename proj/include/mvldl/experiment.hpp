#pragma once

#include "mvldl/dataset.hpp"
#include "mvldl/hyperparams.hpp"
#include "mvldl/metrics.hpp"
#include "mvldl/model.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace mvldl {

/// Ablation variants: the full model, the two regularizer knock-outs, and
/// the structural variant that keeps every coupled term on per-view
/// neighbor sets instead of their cross-view unions.
enum class AblationVariant { full, no_sigma, no_gamma, per_view_nbrs };

AblationVariant parse_variant(const std::string& name);  // throws ParameterError
std::string variant_name(AblationVariant variant);

struct CvConfig {
    int folds = 10;
    double labeled_ratio = 0.1;
    std::uint64_t seed = 0;
    Hyperparams hyper;
    AblationVariant variant = AblationVariant::full;
    int jobs = 1;
};

struct CvResult {
    AggregateReport aggregate;
    std::vector<MetricReport> per_fold;
};

/// Cross validation: per fold, hides all but labeled_ratio of the training
/// portion's labels (seeded per fold), trains, and scores predictions on the
/// held-out samples against their ground truth. Fold results are gathered in
/// fold order regardless of --jobs scheduling. The dataset must carry ground
/// truth for every sample.
CvResult run_cv(const MultiViewDataset& ds, const CvConfig& config);

/// One grid of CV runs: labeled-ratio values or lambda values.
enum class SweepKind { labeled_ratio, lambda };

struct SweepRow {
    double value = 0.0;
    AggregateReport report;
};

std::vector<SweepRow> run_sweep(const MultiViewDataset& ds, const CvConfig& base,
                                SweepKind kind, const std::vector<double>& grid);

/// Report serialization shared by the CLI commands.
nlohmann::ordered_json cv_report_json(const CvConfig& config, const CvResult& result);
std::string cv_report_csv_row(const CvConfig& config, const CvResult& result);
std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows);

}  // namespace mvldl
