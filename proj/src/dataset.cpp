#include "mvldl/dataset.hpp"

#include "mvldl/errors.hpp"
#include "mvldl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace mvldl {

namespace {

constexpr double kLoadSumTol = 1e-6;

// Substreams of the synthetic generator. Each view draws from its own
// stream so the output does not depend on the order views are materialized.
constexpr std::uint64_t kLatentStream = 0;
constexpr std::uint64_t kViewStreamBase = 1000;

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError("bad number '" + cell + "' in " + file.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ShapeError("ragged rows in " + file.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("no data rows in " + file.string());
    return rows;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void write_csv(const Matrix& m, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf;
            if (j + 1 < m.cols()) out << ',';
        }
        out << '\n';
    }
}

// A row qualifies as ground truth when it is a distribution up to the
// loader tolerance: nonnegative and summing to 1 within 1e-6.
bool looks_like_distribution(const Vector& row) {
    return row.minCoeff() >= 0.0 && std::abs(row.sum() - 1.0) <= kLoadSumTol;
}

// Loader rows are accepted within 1e-6 of unit sum, then renormalized so the
// stored distribution meets the 1e-9 type invariant.
LabelDistribution normalize_row(const Vector& row) {
    return LabelDistribution(row / row.sum());
}

}  // namespace

LabelDistribution::LabelDistribution(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw ValidationError("label distribution is empty");
    if (!values_.allFinite()) throw ValidationError("label distribution has non-finite entries");
    if (values_.minCoeff() < 0.0 || values_.maxCoeff() > 1.0 + kSumTol)
        throw ValidationError("label distribution entries must lie in [0, 1]");
    if (std::abs(values_.sum() - 1.0) > kSumTol)
        throw ValidationError("label distribution must sum to 1");
}

MultiViewDataset::MultiViewDataset(std::vector<Matrix> views,
                                   std::vector<std::optional<LabelDistribution>> labels,
                                   std::vector<int> labeled_indices, int q)
    : MultiViewDataset(std::move(views), labels, labels, std::move(labeled_indices), q) {}

MultiViewDataset::MultiViewDataset(std::vector<Matrix> views,
                                   std::vector<std::optional<LabelDistribution>> labels,
                                   std::vector<std::optional<LabelDistribution>> shadow,
                                   std::vector<int> labeled_indices, int q)
    : views_(std::move(views)),
      labels_(std::move(labels)),
      shadow_(std::move(shadow)),
      labeled_(std::move(labeled_indices)),
      q_(q) {
    if (views_.empty()) throw ShapeError("dataset needs at least one view");
    n_ = static_cast<int>(views_.front().rows());
    std::sort(labeled_.begin(), labeled_.end());
    labeled_.erase(std::unique(labeled_.begin(), labeled_.end()), labeled_.end());
    labeled_mask_.assign(static_cast<std::size_t>(n_), 0);
    for (int i : labeled_) {
        if (i < 0 || i >= n_) throw ValidationError("labeled index out of range");
        labeled_mask_[static_cast<std::size_t>(i)] = 1;
    }
    validate();
}

void MultiViewDataset::validate() const {
    if (q_ < 1) throw ValidationError("dataset needs at least one label");
    for (const auto& v : views_) {
        if (v.rows() != n_) throw ShapeError("views disagree on the sample count");
        if (!v.allFinite()) throw ValidationError("view matrix has non-finite entries");
        if (v.cols() < 1) throw ShapeError("view has zero feature dimensions");
    }
    if (labels_.size() != static_cast<std::size_t>(n_) ||
        shadow_.size() != static_cast<std::size_t>(n_))
        throw ShapeError("label slots must match the sample count");
    for (int i : labeled_) {
        const auto& lab = labels_[static_cast<std::size_t>(i)];
        if (!lab.has_value()) throw ValidationError("labeled sample without a label");
        if (lab->size() != q_) throw ShapeError("label width disagrees with q");
    }
    for (const auto& s : shadow_)
        if (s.has_value() && s->size() != q_) throw ShapeError("label width disagrees with q");
}

const LabelDistribution& MultiViewDataset::label(int i) const {
    if (!is_labeled(i)) throw ValidationError("sample is not labeled");
    return *labels_[static_cast<std::size_t>(i)];
}

const LabelDistribution& MultiViewDataset::eval_label(int i) const {
    if (!has_eval_label(i)) throw ValidationError("sample has no evaluation ground truth");
    return *shadow_[static_cast<std::size_t>(i)];
}

int MultiViewDataset::total_dim() const {
    int d = 0;
    for (const auto& v : views_) d += static_cast<int>(v.cols());
    return d;
}

MultiViewDataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::vector<Matrix> views;
    for (int v = 0;; ++v) {
        const fs::path f = dir / "views" / ("view_" + std::to_string(v) + ".csv");
        if (!fs::exists(f)) {
            if (v == 0) throw IoError("missing " + f.string());
            break;
        }
        views.push_back(to_matrix(read_csv(f)));
    }
    const fs::path labels_file = dir / "labels.csv";
    if (!std::filesystem::exists(labels_file)) throw IoError("missing " + labels_file.string());
    const Matrix raw_labels = to_matrix(read_csv(labels_file));

    const int n = static_cast<int>(views.front().rows());
    for (std::size_t v = 0; v < views.size(); ++v)
        if (views[v].rows() != n)
            throw ShapeError("views/view_" + std::to_string(v) + ".csv row count disagrees");
    if (raw_labels.rows() != n) throw ShapeError("labels.csv row count disagrees with views");
    const int q = static_cast<int>(raw_labels.cols());

    std::vector<int> labeled;
    const fs::path mask_file = dir / "labeled_mask.txt";
    const bool has_mask = fs::exists(mask_file);
    if (has_mask) {
        std::ifstream in(mask_file);
        if (!in) throw IoError("cannot open " + mask_file.string());
        int idx;
        while (in >> idx) {
            if (idx < 0 || idx >= n) throw ValidationError("labeled_mask.txt index out of range");
            labeled.push_back(idx);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const Vector row = raw_labels.row(i).transpose();
            if (std::abs(row.sum() - 1.0) <= kLoadSumTol) labeled.push_back(i);
        }
    }

    std::vector<char> is_labeled(static_cast<std::size_t>(n), 0);
    for (int i : labeled) is_labeled[static_cast<std::size_t>(i)] = 1;

    std::vector<std::optional<LabelDistribution>> labels(static_cast<std::size_t>(n));
    std::vector<std::optional<LabelDistribution>> shadow(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vector row = raw_labels.row(i).transpose();
        if (is_labeled[static_cast<std::size_t>(i)]) {
            if (row.minCoeff() < 0.0)
                throw ValidationError("labels.csv row " + std::to_string(i) + " has negative entries");
            if (std::abs(row.sum() - 1.0) > kLoadSumTol)
                throw ValidationError("labels.csv row " + std::to_string(i) + " does not sum to 1");
            labels[static_cast<std::size_t>(i)] = normalize_row(row);
            shadow[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)];
        } else if (looks_like_distribution(row)) {
            // Ground truth for a hidden sample: usable by evaluation only.
            shadow[static_cast<std::size_t>(i)] = normalize_row(row);
        }
    }
    return MultiViewDataset(std::move(views), std::move(labels), std::move(shadow),
                            std::move(labeled), q);
}

void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "views", ec);
    if (ec) throw IoError("cannot create " + (dir / "views").string());

    for (int v = 0; v < ds.num_views(); ++v)
        write_csv(ds.view(v), dir / "views" / ("view_" + std::to_string(v) + ".csv"));

    Matrix labels = Matrix::Zero(ds.n(), ds.q());
    for (int i = 0; i < ds.n(); ++i) {
        if (ds.is_labeled(i))
            labels.row(i) = ds.label(i).values().transpose();
        else if (ds.has_eval_label(i))
            labels.row(i) = ds.eval_label(i).values().transpose();
    }
    write_csv(labels, dir / "labels.csv");

    if (ds.num_labeled() < ds.n()) {
        std::ofstream out(dir / "labeled_mask.txt");
        if (!out) throw IoError("cannot write " + (dir / "labeled_mask.txt").string());
        for (int i : ds.labeled_indices()) out << i << '\n';
    } else {
        fs::remove(dir / "labeled_mask.txt", ec);
    }
}

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 2 * spec.q || spec.q < 1) throw ParameterError("synthetic: need n >= 2q and q >= 1");
    if (spec.V < 1) throw ParameterError("synthetic: need at least one view");
    if (static_cast<int>(spec.dims.size()) != spec.V)
        throw ParameterError("synthetic: dims must list one dimension per view");
    for (int d : spec.dims)
        if (d < 1) throw ParameterError("synthetic: view dimensions must be >= 1");
    if (spec.clusters < spec.q) throw ParameterError("synthetic: need clusters >= q");
    if (spec.noise < 0.0) throw ParameterError("synthetic: noise must be >= 0");
    if (!(spec.temperature > 0.0)) throw ParameterError("synthetic: temperature must be > 0");

    const int latent_dim = std::max(2 * spec.q, 4);

    // Latent geometry: cluster centers, per-sample latent points, and
    // ground-truth distributions from distances to the q label anchors
    // (anchors = the first q cluster centers).
    RandomStream lat(spec.seed, kLatentStream);
    Matrix centers(spec.clusters, latent_dim);
    for (int c = 0; c < spec.clusters; ++c)
        for (int d = 0; d < latent_dim; ++d) centers(c, d) = 3.0 * lat.normal();

    Matrix latent(spec.n, latent_dim);
    for (int i = 0; i < spec.n; ++i) {
        const int z = static_cast<int>(lat.uniform_index(static_cast<std::uint64_t>(spec.clusters)));
        for (int d = 0; d < latent_dim; ++d) latent(i, d) = centers(z, d) + lat.normal();
    }

    std::vector<std::optional<LabelDistribution>> labels(static_cast<std::size_t>(spec.n));
    std::vector<int> labeled(static_cast<std::size_t>(spec.n));
    Vector logits(spec.q);
    for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.q; ++j)
            logits[j] = (latent.row(i) - centers.row(j)).squaredNorm();
        logits = (-spec.temperature * (logits.array() - logits.minCoeff())).matrix();
        Vector d = logits.array().exp().matrix();
        d /= d.sum();
        labels[static_cast<std::size_t>(i)] = LabelDistribution(d);
        labeled[static_cast<std::size_t>(i)] = i;
    }

    // Each view observes the latent point through a random linear map that
    // emphasizes a view-specific subset of latent coordinates (round-robin,
    // off-subset coordinates damped), so views carry overlapping but
    // complementary parts of the cluster structure.
    constexpr double kOffSubsetWeight = 0.25;
    std::vector<Matrix> views(static_cast<std::size_t>(spec.V));
    for (int v = 0; v < spec.V; ++v) {
        RandomStream vr(spec.seed, kViewStreamBase + static_cast<std::uint64_t>(v));
        const int dv = spec.dims[static_cast<std::size_t>(v)];
        Matrix A(latent_dim, dv);
        const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
        for (int d = 0; d < latent_dim; ++d) {
            const double w = (d % spec.V == v % spec.V) ? 1.0 : kOffSubsetWeight;
            for (int c = 0; c < dv; ++c) A(d, c) = w * scale * vr.normal();
        }
        Matrix X = latent * A;
        if (spec.noise > 0.0) {
            for (int i = 0; i < spec.n; ++i)
                for (int c = 0; c < dv; ++c) X(i, c) += spec.noise * vr.normal();
        }
        views[static_cast<std::size_t>(v)] = std::move(X);
    }

    return MultiViewDataset(std::move(views), std::move(labels), std::move(labeled), spec.q);
}

MultiViewDataset mask_labels(const MultiViewDataset& ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0) throw ParameterError("mask_labels: ratio must be in (0, 1]");
    if (ds.num_labeled() != ds.n())
        throw ParameterError("mask_labels: dataset must have ground truth for all samples");

    const int keep = static_cast<int>(std::ceil(ratio * ds.n()));
    std::vector<int> order(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) order[static_cast<std::size_t>(i)] = i;
    RandomStream rng(seed);
    rng.shuffle(order);
    std::vector<int> visible(order.begin(), order.begin() + keep);
    std::sort(visible.begin(), visible.end());

    std::vector<char> keep_mask(static_cast<std::size_t>(ds.n()), 0);
    for (int i : visible) keep_mask[static_cast<std::size_t>(i)] = 1;

    std::vector<Matrix> views;
    views.reserve(static_cast<std::size_t>(ds.num_views()));
    for (int v = 0; v < ds.num_views(); ++v) views.push_back(ds.view(v));

    std::vector<std::optional<LabelDistribution>> labels(static_cast<std::size_t>(ds.n()));
    std::vector<std::optional<LabelDistribution>> shadow(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) {
        shadow[static_cast<std::size_t>(i)] = ds.label(i);
        if (keep_mask[static_cast<std::size_t>(i)]) labels[static_cast<std::size_t>(i)] = ds.label(i);
    }
    return MultiViewDataset(std::move(views), std::move(labels), std::move(shadow),
                            std::move(visible), ds.q());
}

FoldPlan split_folds(const MultiViewDataset& ds, int folds, std::uint64_t seed) {
    if (folds < 2) throw ParameterError("split_folds: need at least 2 folds");
    if (folds > ds.n()) throw ParameterError("split_folds: more folds than samples");

    std::vector<int> order(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) order[static_cast<std::size_t>(i)] = i;
    RandomStream rng(seed);
    rng.shuffle(order);

    FoldPlan plan;
    plan.seed = seed;
    const int base = ds.n() / folds;
    const int rem = ds.n() % folds;
    int cursor = 0;
    for (int f = 0; f < folds; ++f) {
        const int size = base + (f < rem ? 1 : 0);
        std::vector<int> test(order.begin() + cursor, order.begin() + cursor + size);
        std::vector<int> train;
        train.reserve(order.size() - test.size());
        train.insert(train.end(), order.begin(), order.begin() + cursor);
        train.insert(train.end(), order.begin() + cursor + size, order.end());
        std::sort(test.begin(), test.end());
        std::sort(train.begin(), train.end());
        plan.folds.emplace_back(std::move(train), std::move(test));
        cursor += size;
    }
    return plan;
}

MultiViewDataset subset(const MultiViewDataset& ds, const std::vector<int>& indices) {
    for (int i : indices)
        if (i < 0 || i >= ds.n()) throw ParameterError("subset: index out of range");

    std::vector<Matrix> views;
    views.reserve(static_cast<std::size_t>(ds.num_views()));
    for (int v = 0; v < ds.num_views(); ++v) {
        Matrix m(static_cast<Eigen::Index>(indices.size()), ds.dim(v));
        for (std::size_t r = 0; r < indices.size(); ++r)
            m.row(static_cast<Eigen::Index>(r)) = ds.view(v).row(indices[r]);
        views.push_back(std::move(m));
    }
    std::vector<std::optional<LabelDistribution>> labels(indices.size());
    std::vector<std::optional<LabelDistribution>> shadow(indices.size());
    std::vector<int> labeled;
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int i = indices[r];
        if (ds.is_labeled(i)) {
            labels[r] = ds.label(i);
            labeled.push_back(static_cast<int>(r));
        }
        if (ds.has_eval_label(i)) shadow[r] = ds.eval_label(i);
    }
    return MultiViewDataset(std::move(views), std::move(labels), std::move(shadow),
                            std::move(labeled), ds.q());
}

}  // namespace mvldl
