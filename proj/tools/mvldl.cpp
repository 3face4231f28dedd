// mvldl: multi-view semi-supervised label distribution learning.
//
// Subcommands: generate, train, predict, cv, sweep, ablate. All randomness
// flows through --seed, so any command rerun with identical flags writes
// byte-identical outputs. Exit codes: 0 success, 1 runtime/training failure,
// 2 usage or parameter error.

#include "mvldl/dataset.hpp"
#include "mvldl/errors.hpp"
#include "mvldl/experiment.hpp"
#include "mvldl/log.hpp"
#include "mvldl/metrics.hpp"
#include "mvldl/model.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw mvldl::ParameterError(std::string("bad value '") + cell + "' in " + what);
        }
    }
    if (out.empty()) throw mvldl::ParameterError(std::string(what) + " is empty");
    return out;
}

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
    std::vector<int> out;
    for (double v : parse_double_list(csv, what)) out.push_back(static_cast<int>(v));
    return out;
}

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(file.parent_path(), ec);
    }
    std::ofstream out(file);
    if (!out) throw mvldl::IoError("cannot write " + file.string());
    out << text;
}

void write_json(const fs::path& file, const ordered_json& j) { write_text(file, j.dump(2) + "\n"); }

struct HyperFlags {
    mvldl::Hyperparams hp;
    void attach(CLI::App* cmd) {
        cmd->add_option("--lambda", hp.lambda, "Prediction-fit weight");
        cmd->add_option("--mu1", hp.mu1, "Feature reconstruction weight");
        cmd->add_option("--mu2", hp.mu2, "Distribution reconstruction weight");
        cmd->add_option("--sigma", hp.sigma, "Cross-view similarity consistency weight");
        cmd->add_option("--gamma", hp.gamma, "Cross-view distribution consistency weight");
        cmd->add_option("-k,--neighbors", hp.k, "Neighbors per view");
        cmd->add_option("--tol", hp.tol, "Outer-loop relative tolerance");
        cmd->add_option("--max-iter", hp.max_iter, "Outer-loop iteration cap");
        cmd->add_option("--qp-tol", hp.qp_tol, "Inner QP residual tolerance");
        cmd->add_option("--qp-max-iter", hp.qp_max_iter, "Inner QP iteration cap");
    }
};

std::string predictions_csv(const mvldl::Matrix& preds) {
    std::string out;
    char buf[64];
    for (Eigen::Index i = 0; i < preds.rows(); ++i) {
        for (Eigen::Index j = 0; j < preds.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", preds(i, j));
            out += buf;
            if (j + 1 < preds.cols()) out += ',';
        }
        out += '\n';
    }
    return out;
}

fs::path derive_csv_path(const fs::path& json_path) {
    fs::path p = json_path;
    p.replace_extension(".csv");
    return p;
}

int cmd_generate(const mvldl::SyntheticSpec& spec_in, const std::string& dims_csv,
                 const std::string& out_dir) {
    mvldl::SyntheticSpec spec = spec_in;
    if (!dims_csv.empty())
        spec.dims = parse_int_list(dims_csv, "--dims");
    else
        spec.dims.assign(static_cast<std::size_t>(std::max(spec.V, 0)), 16);
    if (spec.clusters == 0) spec.clusters = spec.q;

    const mvldl::MultiViewDataset ds = mvldl::generate_synthetic(spec);
    mvldl::save_dataset(ds, out_dir);

    std::string dims;
    for (std::size_t v = 0; v < spec.dims.size(); ++v)
        dims += (v ? "," : "") + std::to_string(spec.dims[v]);
    std::printf("generated %s: n=%d V=%d q=%d dims=[%s]\n", out_dir.c_str(), ds.n(),
                ds.num_views(), ds.q(), dims.c_str());
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_file,
              const mvldl::Hyperparams& hp, const std::string& dump_similarity) {
    const mvldl::MultiViewDataset ds = mvldl::load_dataset(data_dir);
    const mvldl::TrainResult result = mvldl::train(ds, hp);

    mvldl::SavedModel model;
    model.params = result.params;
    model.hyper = hp;
    model.q = ds.q();
    for (int v = 0; v < ds.num_views(); ++v) model.dims.push_back(ds.dim(v));
    mvldl::save_model(model, out_file);

    if (!dump_similarity.empty()) {
        std::ofstream out(dump_similarity);
        if (!out) throw mvldl::IoError("cannot write " + dump_similarity);
        result.graph.dump_coordinate_list(out);
    }

    std::printf("trained on %s: %d sweeps, %s, objective %.6g -> %s\n", data_dir.c_str(),
                result.trace.iterations, result.trace.converged ? "converged" : "iteration cap",
                result.trace.steps.back().objective, out_file.c_str());
    return 0;
}

int cmd_predict(const std::string& model_file, const std::string& data_dir,
                const std::string& views_csv, const std::string& out_file) {
    const mvldl::SavedModel model = mvldl::load_model(model_file);

    std::vector<mvldl::Matrix> views;
    if (!data_dir.empty()) {
        const mvldl::MultiViewDataset ds = mvldl::load_dataset(data_dir);
        for (int v = 0; v < ds.num_views(); ++v) views.push_back(ds.view(v));
    } else {
        std::stringstream ss(views_csv);
        std::string file;
        while (std::getline(ss, file, ',')) {
            std::ifstream in(file);
            if (!in) throw mvldl::IoError("cannot open " + file);
            std::vector<std::vector<double>> rows;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::vector<double> row;
                std::stringstream ls(line);
                std::string cell;
                while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
                rows.push_back(std::move(row));
            }
            mvldl::Matrix m(static_cast<Eigen::Index>(rows.size()),
                            rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = 0; j < rows[i].size(); ++j)
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            views.push_back(std::move(m));
        }
    }

    if (views.size() != model.params.per_view.size())
        throw mvldl::ValidationError("model expects " + std::to_string(model.params.per_view.size()) +
                                     " views, data has " + std::to_string(views.size()));
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].cols() != model.params.per_view[v].rows())
            throw mvldl::ValidationError("view " + std::to_string(v) + " dimension " +
                                         std::to_string(views[v].cols()) + " disagrees with model (" +
                                         std::to_string(model.params.per_view[v].rows()) + ")");
        if (views[v].rows() != views.front().rows())
            throw mvldl::ShapeError("view files disagree on the sample count");
    }

    const Eigen::Index rows = views.front().rows();
    mvldl::Matrix preds(rows, model.q);
    std::vector<mvldl::Vector> sample(views.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (std::size_t v = 0; v < views.size(); ++v) sample[v] = views[v].row(i).transpose();
        preds.row(i) = mvldl::predict(model.params, sample).values().transpose();
    }
    write_text(out_file, predictions_csv(preds));
    std::printf("wrote %lld predictions to %s\n", static_cast<long long>(rows), out_file.c_str());
    return 0;
}

int cmd_cv(const std::string& data_dir, mvldl::CvConfig config, const std::string& out_file,
           std::string csv_file) {
    const mvldl::MultiViewDataset ds = mvldl::load_dataset(data_dir);
    const mvldl::CvResult result = mvldl::run_cv(ds, config);
    write_json(out_file, mvldl::cv_report_json(config, result));
    if (csv_file.empty()) csv_file = derive_csv_path(out_file).string();
    write_text(csv_file, mvldl::cv_report_csv_row(config, result));
    std::printf("cv %s: chebyshev %.4f±%.4f -> %s\n", data_dir.c_str(),
                result.aggregate.mean.chebyshev, result.aggregate.stddev.chebyshev,
                out_file.c_str());
    return 0;
}

int cmd_sweep(const std::string& data_dir, const mvldl::CvConfig& base, const std::string& ratios,
              const std::string& lambda_grid, const std::string& out_file) {
    if (ratios.empty() == lambda_grid.empty())
        throw mvldl::ParameterError("sweep needs exactly one of --ratios or --lambda-grid");
    const mvldl::MultiViewDataset ds = mvldl::load_dataset(data_dir);

    const mvldl::SweepKind kind =
        ratios.empty() ? mvldl::SweepKind::lambda : mvldl::SweepKind::labeled_ratio;
    const std::vector<double> grid = ratios.empty()
                                         ? parse_double_list(lambda_grid, "--lambda-grid")
                                         : parse_double_list(ratios, "--ratios");
    const std::vector<mvldl::SweepRow> rows = mvldl::run_sweep(ds, base, kind, grid);
    write_text(out_file, mvldl::sweep_csv(kind, rows));
    std::printf("swept %zu grid points -> %s\n", rows.size(), out_file.c_str());
    return 0;
}

int cmd_ablate(const std::string& data_dir, mvldl::CvConfig config, const std::string& variant,
               const std::string& out_file) {
    config.variant = mvldl::parse_variant(variant);
    const mvldl::MultiViewDataset ds = mvldl::load_dataset(data_dir);
    const mvldl::CvResult result = mvldl::run_cv(ds, config);
    write_json(out_file, mvldl::cv_report_json(config, result));
    std::printf("ablation %s: chebyshev %.4f±%.4f -> %s\n", variant.c_str(),
                result.aggregate.mean.chebyshev, result.aggregate.stddev.chebyshev,
                out_file.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view semi-supervised label distribution learning"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset directory");
    mvldl::SyntheticSpec spec;
    spec.n = 200;
    spec.V = 3;
    spec.q = 4;
    spec.clusters = 0;  // defaults to q
    spec.noise = 0.05;
    spec.temperature = 0.08;
    std::string dims_csv, gen_out;
    gen->add_option("--n", spec.n, "Sample count");
    gen->add_option("--views", spec.V, "View count");
    gen->add_option("--labels", spec.q, "Label count");
    gen->add_option("--dims", dims_csv, "Per-view feature dimensions, comma separated");
    gen->add_option("--clusters", spec.clusters, "Latent cluster count (default: label count)");
    gen->add_option("--noise", spec.noise, "Per-view observation noise");
    gen->add_option("--temperature", spec.temperature, "Softmax sharpness of ground truth");
    gen->add_option("--seed", spec.seed, "Random seed");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train a model on a dataset directory");
    std::string tr_data, tr_out, tr_dump;
    HyperFlags tr_hp;
    tr->add_option("--data", tr_data, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Model JSON path")->required();
    tr->add_option("--seed", tr_hp.hp.seed, "Random seed (recorded in the model file)");
    tr->add_option("--dump-similarity", tr_dump, "Write the learned similarity matrix as "
                                                 "'row col value' lines");
    tr_hp.attach(tr);

    // predict
    auto* pr = app.add_subcommand("predict", "Predict label distributions");
    std::string pr_model, pr_data, pr_views, pr_out;
    pr->add_option("--model", pr_model, "Model JSON path")->required();
    pr->add_option("--data", pr_data, "Dataset directory");
    pr->add_option("--views", pr_views, "Comma-separated per-view CSV files");
    pr->add_option("--out", pr_out, "Predictions CSV path")->required();

    // cv
    auto* cv = app.add_subcommand("cv", "Cross-validate on a dataset directory");
    std::string cv_data, cv_out, cv_csv;
    mvldl::CvConfig cv_cfg;
    HyperFlags cv_hp;
    cv->add_option("--data", cv_data, "Dataset directory")->required();
    cv->add_option("--folds", cv_cfg.folds, "Fold count");
    cv->add_option("--labeled-ratio", cv_cfg.labeled_ratio, "Visible-label fraction per training split");
    cv->add_option("--seed", cv_cfg.seed, "Random seed");
    cv->add_option("--jobs", cv_cfg.jobs, "Folds trained in parallel");
    cv->add_option("--out", cv_out, "Report JSON path")->required();
    cv->add_option("--csv", cv_csv, "Report CSV path (default: JSON path with .csv)");
    cv_hp.attach(cv);

    // sweep
    auto* sw = app.add_subcommand("sweep", "Grid of CV runs over ratios or lambda");
    std::string sw_data, sw_out, sw_ratios, sw_lambdas;
    mvldl::CvConfig sw_cfg;
    HyperFlags sw_hp;
    sw->add_option("--data", sw_data, "Dataset directory")->required();
    sw->add_option("--ratios", sw_ratios, "Comma-separated labeled ratios");
    sw->add_option("--lambda-grid", sw_lambdas, "Comma-separated lambda values");
    sw->add_option("--folds", sw_cfg.folds, "Fold count");
    sw->add_option("--labeled-ratio", sw_cfg.labeled_ratio, "Labeled ratio for lambda sweeps");
    sw->add_option("--seed", sw_cfg.seed, "Random seed");
    sw->add_option("--jobs", sw_cfg.jobs, "Folds trained in parallel");
    sw->add_option("--out", sw_out, "Sweep CSV path")->required();
    sw_hp.attach(sw);

    // ablate
    auto* ab = app.add_subcommand("ablate", "Cross-validate an ablation variant");
    std::string ab_data, ab_out, ab_variant;
    mvldl::CvConfig ab_cfg;
    HyperFlags ab_hp;
    ab->add_option("--data", ab_data, "Dataset directory")->required();
    ab->add_option("--variant", ab_variant, "full | no-sigma | no-gamma | per-view-nbrs")->required();
    ab->add_option("--folds", ab_cfg.folds, "Fold count");
    ab->add_option("--labeled-ratio", ab_cfg.labeled_ratio, "Visible-label fraction per training split");
    ab->add_option("--seed", ab_cfg.seed, "Random seed");
    ab->add_option("--jobs", ab_cfg.jobs, "Folds trained in parallel");
    ab->add_option("--out", ab_out, "Report JSON path")->required();
    ab_hp.attach(ab);

    try {
        app.parse(argc, argv);

        if (gen->parsed()) return cmd_generate(spec, dims_csv, gen_out);
        if (tr->parsed()) return cmd_train(tr_data, tr_out, tr_hp.hp, tr_dump);
        if (pr->parsed()) {
            if (pr_data.empty() == pr_views.empty())
                throw mvldl::ParameterError("predict needs exactly one of --data or --views");
            return cmd_predict(pr_model, pr_data, pr_views, pr_out);
        }
        if (cv->parsed()) {
            cv_cfg.hyper = cv_hp.hp;
            return cmd_cv(cv_data, cv_cfg, cv_out, cv_csv);
        }
        if (sw->parsed()) {
            sw_cfg.hyper = sw_hp.hp;
            return cmd_sweep(sw_data, sw_cfg, sw_ratios, sw_lambdas, sw_out);
        }
        if (ab->parsed()) {
            ab_cfg.hyper = ab_hp.hp;
            return cmd_ablate(ab_data, ab_cfg, ab_variant, ab_out);
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    } catch (const mvldl::ParameterError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const mvldl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
