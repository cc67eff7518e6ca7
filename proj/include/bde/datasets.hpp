#ifndef BDE_DATASETS_HPP
#define BDE_DATASETS_HPP

#include <optional>
#include <string>
#include <utility>

#include "bde/nn.hpp"

namespace bde {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable sample collection. Inputs are (N x p_x), targets (N x p_y).
/// Synthetic generators also record the noise-free regression values;
/// they are reserved for evaluation and never used in training.
struct Dataset {
    Matrix inputs;
    Matrix targets;
    std::optional<Matrix> ground_truth;
    std::string tag;

    Eigen::Index size() const { return inputs.rows(); }
    Eigen::Index input_dim() const { return inputs.cols(); }
    Eigen::Index target_dim() const { return targets.cols(); }
};

/// Per-column affine normalization stats, computed from training data only.
struct NormStats {
    Vector target_mean;
    Vector target_std;
    std::optional<Vector> input_mean;
    std::optional<Vector> input_std;

    Matrix apply_targets(const Matrix& y) const;
    Matrix invert_targets(const Matrix& y) const;
    Matrix apply_inputs(const Matrix& x) const;
};

/// 1-D quartic regression task: eta(x) = ((4.5x)^4 - (18x)^2 + 22.5x)/2,
/// x uniform on [-1,1], additive Gaussian noise with standard deviation 10.
Dataset gen_quartic_1d(int n, std::uint64_t seed);
double quartic_1d_mean(double x);

/// 2-D task: eta(x) = sum_i (1.5 x_i - 1)^2 (1.3 x_i + 1)^2 on [-1,1]^2,
/// noise standard deviation 0.2.
Dataset gen_quartic_2d(int n, std::uint64_t seed);
double quartic_2d_mean(double x1, double x2);

struct LoadOptions {
    char delimiter = ',';      // ',' or ' ' (whitespace mode)
    int target_column = -1;    // -1 means last column
    bool has_header = false;
};

Dataset load_delimited(const std::string& path, const LoadOptions& opts = {});

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed);

struct NormalizeOptions {
    bool normalize_inputs = false;   // synthetic inputs already live in [-1,1]
};

/// Stats come from `train` alone and are applied to both sets.
std::tuple<Dataset, Dataset, NormStats> normalize(const Dataset& train,
                                                  const Dataset& test,
                                                  const NormalizeOptions& opts = {});

}  // namespace bde

#endif
