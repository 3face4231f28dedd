#pragma once

#include "mvldl/dataset.hpp"
#include "mvldl/graph.hpp"
#include "mvldl/hyperparams.hpp"
#include "mvldl/neighbors.hpp"
#include "mvldl/propagate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvldl {

/// Per-view linear predictors W^v (dim_v x q); a view's prediction for a
/// sample is (W^v)' x_i^v.
struct ModelParams {
    std::vector<Matrix> per_view;

    /// Vertically stacked predictors, total_dim x q.
    Matrix concatenated() const;
};

/// The six additive terms of the training objective, reported separately.
/// Every term is computed by direct summation over samples, views and
/// neighbor supports; this is the reference the matrix/Laplacian forms used
/// inside the updates are checked against.
struct ObjectiveBreakdown {
    double fit = 0.0;                       ///< lambda * prediction residuals
    double weight_reg = 0.0;                ///< sum ||W^v||_F^2
    double feature_recon = 0.0;             ///< mu1 * feature reconstruction
    double distribution_recon = 0.0;        ///< mu2 * distribution reconstruction
    double similarity_consistency = 0.0;    ///< sigma * ordered cross-view weight gaps
    double distribution_consistency = 0.0;  ///< gamma * ordered cross-view row gaps

    double total() const {
        return fit + weight_reg + feature_recon + distribution_recon + similarity_consistency +
               distribution_consistency;
    }
};

/// One recorded optimization step (a W, S or D sub-step of a sweep).
struct TraceStep {
    int sweep = 0;
    char step = '?';  ///< 'I' init, 'W', 'S', 'D'
    double objective = 0.0;
    double seconds = 0.0;
};

struct TrainTrace {
    std::vector<TraceStep> steps;           ///< objective after every sub-step
    std::vector<double> sweep_objectives;   ///< objective after each full sweep
    bool converged = false;
    int iterations = 0;
};

/// Which neighbor supports the coupled terms run over: the cross-view union
/// sets, or each view's own kNN set (the structural ablation).
enum class NeighborMode { unioned, per_view };

struct TrainResult {
    ModelParams params;
    SimilarityGraph graph;
    DistributionMatrix distributions;
    TrainTrace trace;
};

/// Ridge solve of the per-view predictors for a fixed D:
///   W^v = (lambda * Xv' Xv + I)^{-1} * lambda * Xv' Dv,
/// the stationary point of lambda ||Xv W - Dv||^2 + ||W||^2, via LDLT.
ModelParams update_weights(const MultiViewDataset& ds, const Matrix& D, double lambda);

/// Stacked per-view predictions H (nV x q): row stacked_index(v, i) is
/// (W^v)' x_i^v.
Matrix predictions_matrix(const MultiViewDataset& ds, const ModelParams& params);

/// Direct-summation evaluation of the full training objective.
ObjectiveBreakdown objective(const MultiViewDataset& ds, const SimilarityGraph& S,
                             const Matrix& D, const ModelParams& params, const Hyperparams& hp);

/// Alternating-optimization trainer: kNN, similarity init, distribution
/// init, then sweeps of { W solve, per-sample similarity rows, distribution
/// update } until the relative objective decrease over a sweep drops below
/// hp.tol or hp.max_iter sweeps have run. Every sub-step minimizes its block
/// of the shared objective, so the recorded trace is nonincreasing.
TrainResult train(const MultiViewDataset& ds, const Hyperparams& hp,
                  NeighborMode mode = NeighborMode::unioned);

/// Prediction for one sample given per-view features: per-view linear
/// outputs, averaged over views, projected onto the simplex.
LabelDistribution predict(const ModelParams& params, const std::vector<Vector>& sample_views);

/// predict() for every sample of a dataset; rows are distributions.
Matrix predict_all(const ModelParams& params, const MultiViewDataset& ds);

/// Model file payload: predictors plus the dataset shape and hyperparameters
/// they were trained with.
struct SavedModel {
    ModelParams params;
    Hyperparams hyper;
    int q = 0;
    std::vector<int> dims;
};

/// JSON round trip; reloaded predictors reproduce predictions bit-exactly.
void save_model(const SavedModel& model, const std::filesystem::path& file);
SavedModel load_model(const std::filesystem::path& file);

}  // namespace mvldl
