#include "mvldl/model.hpp"

#include "mvldl/errors.hpp"
#include "mvldl/log.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <limits>
#include <fstream>
#include <string>

namespace mvldl {

using ordered_json = nlohmann::ordered_json;

Matrix ModelParams::concatenated() const {
    int rows = 0;
    for (const auto& w : per_view) rows += static_cast<int>(w.rows());
    Matrix out(rows, per_view.empty() ? 0 : per_view.front().cols());
    int off = 0;
    for (const auto& w : per_view) {
        out.middleRows(off, static_cast<int>(w.rows())) = w;
        off += static_cast<int>(w.rows());
    }
    return out;
}

void Hyperparams::validate() const {
    if (!(lambda > 0.0)) throw ParameterError("hyperparams: lambda must be > 0");
    if (mu1 < 0.0 || mu2 < 0.0 || sigma < 0.0 || gamma < 0.0)
        throw ParameterError("hyperparams: mu1, mu2, sigma, gamma must be >= 0");
    if (k < 1) throw ParameterError("hyperparams: k must be >= 1");
    if (!(tol > 0.0)) throw ParameterError("hyperparams: tol must be > 0");
    if (max_iter < 1) throw ParameterError("hyperparams: max_iter must be >= 1");
    if (!(qp_tol > 0.0)) throw ParameterError("hyperparams: qp_tol must be > 0");
    if (qp_max_iter < 1) throw ParameterError("hyperparams: qp_max_iter must be >= 1");
}

ModelParams update_weights(const MultiViewDataset& ds, const Matrix& D, double lambda) {
    const int n = ds.n();
    if (D.rows() != static_cast<Eigen::Index>(n) * ds.num_views() || D.cols() != ds.q())
        throw ShapeError("update_weights: D must be nV x q");
    if (!D.allFinite()) throw NumericError("update_weights: D has non-finite entries");

    ModelParams params;
    for (int v = 0; v < ds.num_views(); ++v) {
        const Matrix& X = ds.view(v);
        if (!X.allFinite()) throw NumericError("update_weights: features are non-finite");
        const Matrix Dv = D.middleRows(v * n, n);
        Matrix lhs = lambda * (X.transpose() * X);
        lhs.diagonal().array() += 1.0;
        const Matrix rhs = lambda * (X.transpose() * Dv);
        params.per_view.push_back(lhs.ldlt().solve(rhs));
    }
    return params;
}

Matrix predictions_matrix(const MultiViewDataset& ds, const ModelParams& params) {
    const int n = ds.n();
    Matrix H(n * ds.num_views(), ds.q());
    for (int v = 0; v < ds.num_views(); ++v)
        H.middleRows(v * n, n) = ds.view(v) * params.per_view[static_cast<std::size_t>(v)];
    return H;
}

ObjectiveBreakdown objective(const MultiViewDataset& ds, const SimilarityGraph& S,
                             const Matrix& D, const ModelParams& params, const Hyperparams& hp) {
    const int n = ds.n();
    const int V = ds.num_views();
    if (static_cast<int>(params.per_view.size()) != V)
        throw ShapeError("objective: predictor count disagrees with views");
    if (D.rows() != static_cast<Eigen::Index>(n) * V || D.cols() != ds.q())
        throw ShapeError("objective: D must be nV x q");

    ObjectiveBreakdown b;

    const Matrix H = predictions_matrix(ds, params);
    b.fit = hp.lambda * (H - D).squaredNorm();
    for (const auto& w : params.per_view) b.weight_reg += w.squaredNorm();

    for (int i = 0; i < n; ++i) {
        for (int v = 0; v < V; ++v) {
            const auto& row = S.row(i, v);
            Vector xrec = Vector::Zero(ds.dim(v));
            Vector drec = Vector::Zero(ds.q());
            for (std::size_t j = 0; j < row.support.size(); ++j) {
                const double w = row.weights[static_cast<Eigen::Index>(j)];
                xrec += w * ds.view(v).row(row.support[j]).transpose();
                drec += w * D.row(stacked_index(v, row.support[j], n)).transpose();
            }
            b.feature_recon += (ds.view(v).row(i).transpose() - xrec).squaredNorm();
            b.distribution_recon += (D.row(stacked_index(v, i, n)).transpose() - drec).squaredNorm();
        }

        // Ordered pairwise sums over views (each unordered pair twice).
        for (int v = 0; v < V; ++v) {
            for (int u = v + 1; u < V; ++u) {
                b.distribution_consistency +=
                    2.0 * (D.row(stacked_index(v, i, n)) - D.row(stacked_index(u, i, n))).squaredNorm();
                const auto& rv = S.row(i, v);
                const auto& ru = S.row(i, u);
                std::size_t a = 0, c = 0;
                while (a < rv.support.size() || c < ru.support.size()) {
                    const int ja = a < rv.support.size() ? rv.support[a] : std::numeric_limits<int>::max();
                    const int jc = c < ru.support.size() ? ru.support[c] : std::numeric_limits<int>::max();
                    double sv = 0.0, su = 0.0;
                    if (ja <= jc) sv = rv.weights[static_cast<Eigen::Index>(a++)];
                    if (jc <= ja) su = ru.weights[static_cast<Eigen::Index>(c++)];
                    const double diff = sv - su;
                    b.similarity_consistency += 2.0 * diff * diff;
                }
            }
        }
    }
    b.feature_recon *= hp.mu1;
    b.distribution_recon *= hp.mu2;
    b.similarity_consistency *= hp.sigma;
    b.distribution_consistency *= hp.gamma;
    return b;
}

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult train(const MultiViewDataset& ds, const Hyperparams& hp, NeighborMode mode) {
    hp.validate();
    if (ds.num_labeled() < 1) throw TrainingError("train: need at least one labeled sample");
    if (hp.k >= ds.n()) throw ParameterError("train: k must be smaller than the sample count");

    qp::SolveOptions qp_opts;
    qp_opts.tol = hp.qp_tol;
    qp_opts.max_iter = hp.qp_max_iter;

    const NeighborSets nbrs = build_neighbor_sets(ds, hp.k);

    TrainResult result{ModelParams{}, SimilarityGraph(ds.n(), ds.num_views(), SupportStage::per_view),
                       DistributionMatrix{}, TrainTrace{}};
    auto& trace = result.trace;

    auto t0 = std::chrono::steady_clock::now();
    result.graph = init_similarity(ds, nbrs, qp_opts);
    result.distributions = init_distributions(result.graph, ds, qp_opts);
    if (mode == NeighborMode::unioned)
        result.graph = to_union_support(result.graph, nbrs);

    // The first W solve happens inside the loop, but the trace needs a
    // starting value; an all-zero predictor keeps the fit term meaningful.
    result.params.per_view.assign(static_cast<std::size_t>(ds.num_views()), Matrix());
    for (int v = 0; v < ds.num_views(); ++v)
        result.params.per_view[static_cast<std::size_t>(v)] = Matrix::Zero(ds.dim(v), ds.q());

    double prev = objective(ds, result.graph, result.distributions.values, result.params, hp).total();
    trace.steps.push_back({0, 'I', prev, seconds_since(t0)});

    for (int sweep = 1; sweep <= hp.max_iter; ++sweep) {
        t0 = std::chrono::steady_clock::now();
        result.params = update_weights(ds, result.distributions.values, hp.lambda);
        trace.steps.push_back(
            {sweep, 'W',
             objective(ds, result.graph, result.distributions.values, result.params, hp).total(),
             seconds_since(t0)});

        t0 = std::chrono::steady_clock::now();
        try {
            update_similarity_rows(result.graph, ds, result.distributions.values, hp, qp_opts);
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " (sweep " + std::to_string(sweep) + ")");
        }
        trace.steps.push_back(
            {sweep, 'S',
             objective(ds, result.graph, result.distributions.values, result.params, hp).total(),
             seconds_since(t0)});

        t0 = std::chrono::steady_clock::now();
        const GraphLaplacians lap =
            build_laplacians(result.graph.assemble(), ds.n(), ds.num_views());
        const Matrix H = predictions_matrix(ds, result.params);
        try {
            result.distributions = update_distributions(lap, H, ds, hp, qp_opts,
                                                        &result.distributions);
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " (sweep " + std::to_string(sweep) + ")");
        }
        const double now =
            objective(ds, result.graph, result.distributions.values, result.params, hp).total();
        trace.steps.push_back({sweep, 'D', now, seconds_since(t0)});
        if (log_level() >= LogLevel::debug) {
            const auto& s = trace.steps;
            log_debug("sweep " + std::to_string(sweep) + ": obj " + std::to_string(now) + "  (W " +
                      std::to_string(s[s.size() - 3].seconds) + "s, S " +
                      std::to_string(s[s.size() - 2].seconds) + "s, D " +
                      std::to_string(s[s.size() - 1].seconds) + "s)");
        }

        trace.sweep_objectives.push_back(now);
        trace.iterations = sweep;
        if (prev - now < hp.tol * std::max(1.0, std::abs(prev))) {
            trace.converged = true;
            break;
        }
        prev = now;
    }
    return result;
}

LabelDistribution predict(const ModelParams& params, const std::vector<Vector>& sample_views) {
    if (sample_views.size() != params.per_view.size())
        throw ValidationError("predict: view count disagrees with the model");
    if (params.per_view.empty()) throw ValidationError("predict: empty model");

    const int q = static_cast<int>(params.per_view.front().cols());
    Vector avg = Vector::Zero(q);
    for (std::size_t v = 0; v < sample_views.size(); ++v) {
        if (sample_views[v].size() != params.per_view[v].rows())
            throw ValidationError("predict: feature dimension disagrees with the model at view " +
                                  std::to_string(v));
        avg += params.per_view[v].transpose() * sample_views[v];
    }
    avg /= static_cast<double>(sample_views.size());
    return LabelDistribution(qp::project_simplex(avg));
}

Matrix predict_all(const ModelParams& params, const MultiViewDataset& ds) {
    Matrix out(ds.n(), static_cast<int>(params.per_view.front().cols()));
    std::vector<Vector> views(static_cast<std::size_t>(ds.num_views()));
    for (int i = 0; i < ds.n(); ++i) {
        for (int v = 0; v < ds.num_views(); ++v)
            views[static_cast<std::size_t>(v)] = ds.x(i, v).transpose();
        out.row(i) = predict(params, views).values().transpose();
    }
    return out;
}

void save_model(const SavedModel& model, const std::filesystem::path& file) {
    ordered_json j;
    j["q"] = model.q;
    j["views"] = model.params.per_view.size();
    j["dims"] = model.dims;
    j["hyperparams"] = {{"lambda", model.hyper.lambda}, {"mu1", model.hyper.mu1},
                        {"mu2", model.hyper.mu2},       {"sigma", model.hyper.sigma},
                        {"gamma", model.hyper.gamma},   {"k", model.hyper.k},
                        {"tol", model.hyper.tol},       {"max_iter", model.hyper.max_iter},
                        {"qp_tol", model.hyper.qp_tol}, {"qp_max_iter", model.hyper.qp_max_iter},
                        {"seed", model.hyper.seed}};
    ordered_json weights = ordered_json::array();
    for (const auto& w : model.params.per_view) {
        ordered_json mat = ordered_json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) mat.push_back(w(r, c));
        weights.push_back(std::move(mat));
    }
    j["weights"] = std::move(weights);

    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

SavedModel load_model(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("model file " + file.string() + " is not valid JSON: " + e.what());
    }

    SavedModel model;
    try {
        model.q = j.at("q").get<int>();
        model.dims = j.at("dims").get<std::vector<int>>();
        const auto& h = j.at("hyperparams");
        model.hyper.lambda = h.at("lambda").get<double>();
        model.hyper.mu1 = h.at("mu1").get<double>();
        model.hyper.mu2 = h.at("mu2").get<double>();
        model.hyper.sigma = h.at("sigma").get<double>();
        model.hyper.gamma = h.at("gamma").get<double>();
        model.hyper.k = h.at("k").get<int>();
        model.hyper.tol = h.at("tol").get<double>();
        model.hyper.max_iter = h.at("max_iter").get<int>();
        model.hyper.qp_tol = h.at("qp_tol").get<double>();
        model.hyper.qp_max_iter = h.at("qp_max_iter").get<int>();
        model.hyper.seed = h.at("seed").get<std::uint64_t>();

        const auto& weights = j.at("weights");
        const std::size_t V = j.at("views").get<std::size_t>();
        if (weights.size() != V || model.dims.size() != V)
            throw ValidationError("model file: view count disagrees with weights");
        for (std::size_t v = 0; v < V; ++v) {
            const int dv = model.dims[v];
            const auto& flat = weights[v];
            if (static_cast<int>(flat.size()) != dv * model.q)
                throw ValidationError("model file: weight matrix size mismatch");
            Matrix w(dv, model.q);
            int idx = 0;
            for (int r = 0; r < dv; ++r)
                for (int c = 0; c < model.q; ++c) w(r, c) = flat[static_cast<std::size_t>(idx++)].get<double>();
            model.params.per_view.push_back(std::move(w));
        }
    } catch (const ordered_json::exception& e) {
        throw ValidationError("model file " + file.string() + ": " + e.what());
    }
    return model;
}

}  // namespace mvldl
