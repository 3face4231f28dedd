#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace mvldl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A probability vector over q labels: entries in [0, 1], summing to 1
/// within 1e-9. Construction validates; throws ValidationError.
class LabelDistribution {
public:
    explicit LabelDistribution(Vector values);

    const Vector& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int j) const { return values_[j]; }

    static constexpr double kSumTol = 1e-9;

private:
    Vector values_;
};

/// n samples, each represented by V per-view feature vectors, with an
/// optional ground-truth label distribution per sample.
///
/// Labels visible to training are those of the samples in labeled_indices();
/// ground truth kept for evaluation after masking lives in the shadow slots
/// and is never consulted by the learning code.
class MultiViewDataset {
public:
    MultiViewDataset(std::vector<Matrix> views,
                     std::vector<std::optional<LabelDistribution>> labels,
                     std::vector<int> labeled_indices, int q);

    // As above, with an explicit evaluation-only ground-truth store.
    MultiViewDataset(std::vector<Matrix> views,
                     std::vector<std::optional<LabelDistribution>> labels,
                     std::vector<std::optional<LabelDistribution>> shadow,
                     std::vector<int> labeled_indices, int q);

    int n() const { return n_; }
    int num_views() const { return static_cast<int>(views_.size()); }
    int q() const { return q_; }
    int dim(int v) const { return static_cast<int>(views_[static_cast<std::size_t>(v)].cols()); }
    int total_dim() const;

    const Matrix& view(int v) const { return views_[static_cast<std::size_t>(v)]; }
    Eigen::Ref<const Eigen::RowVectorXd> x(int i, int v) const {
        return views_[static_cast<std::size_t>(v)].row(i);
    }

    bool is_labeled(int i) const { return labeled_mask_[static_cast<std::size_t>(i)]; }
    /// Training-visible ground truth; only valid for labeled samples.
    const LabelDistribution& label(int i) const;
    const std::vector<int>& labeled_indices() const { return labeled_; }
    int num_labeled() const { return static_cast<int>(labeled_.size()); }
    int num_unlabeled() const { return n_ - num_labeled(); }

    /// Evaluation-only ground truth (survives label masking).
    bool has_eval_label(int i) const { return shadow_[static_cast<std::size_t>(i)].has_value(); }
    const LabelDistribution& eval_label(int i) const;

private:
    void validate() const;

    std::vector<Matrix> views_;
    std::vector<std::optional<LabelDistribution>> labels_;
    std::vector<std::optional<LabelDistribution>> shadow_;
    std::vector<int> labeled_;
    std::vector<char> labeled_mask_;
    int n_ = 0;
    int q_ = 0;
};

/// Parameters of the synthetic generator: latent Gaussian clusters observed
/// through per-view random linear maps, with ground-truth distributions
/// softmax-shaped by distance to the q label anchors.
struct SyntheticSpec {
    int n = 0;
    int V = 0;
    int q = 0;
    std::vector<int> dims;
    int clusters = 0;
    double noise = 0.0;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

/// Cross-validation plan: folds.size() (train, test) index pairs whose test
/// sets partition 0..n-1.
struct FoldPlan {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
    std::uint64_t seed = 0;
};

/// Loads a dataset directory: views/view_<v>.csv, labels.csv, and optional
/// labeled_mask.txt (one 0-based index per line). Without a mask file, every
/// sample whose labels.csv row sums to 1 within 1e-6 counts as labeled.
MultiViewDataset load_dataset(const std::filesystem::path& dir);

/// Writes the directory format load_dataset() reads. Unlabeled samples get
/// their evaluation ground truth row when one exists, an all-zero row
/// otherwise; a labeled_mask.txt is emitted only for partially labeled data.
void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);

/// Deterministic synthetic multi-view dataset (all samples labeled).
MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

/// Keeps ceil(ratio * n) uniformly sampled labels visible and hides the
/// rest; the full ground truth is retained for evaluation only.
MultiViewDataset mask_labels(const MultiViewDataset& ds, double ratio, std::uint64_t seed);

/// Seeded shuffle followed by a contiguous partition into folds test sets of
/// sizes differing by at most one.
FoldPlan split_folds(const MultiViewDataset& ds, int folds, std::uint64_t seed);

/// Row subset (views, labels and evaluation ground truth alike), in the
/// order given by indices.
MultiViewDataset subset(const MultiViewDataset& ds, const std::vector<int>& indices);

}  // namespace mvldl
