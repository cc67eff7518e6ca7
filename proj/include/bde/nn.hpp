#ifndef BDE_NN_HPP
#define BDE_NN_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Activation { Relu, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// One dense layer, weight is (out x in), bias optional.
struct Layer {
    Matrix weight;
    Vector bias;
    bool has_bias = true;
    Activation act = Activation::Relu;

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }
};

/// Parameters of a dense feed-forward network. Batches are stored
/// row-major: X is (n x in_dim), every activation matrix is (n x width).
struct MlpParams {
    std::vector<Layer> layers;

    Eigen::Index in_dim() const { return layers.front().in_dim(); }
    Eigen::Index out_dim() const { return layers.back().out_dim(); }
    std::vector<int> layer_dims() const;
    std::size_t num_params() const;
    double squared_norm() const;
    bool all_finite() const;
};

enum class InitScheme { HeUniform };

struct InitConfig {
    InitScheme scheme = InitScheme::HeUniform;
    Activation hidden_act = Activation::Relu;
    Activation output_act = Activation::Identity;
    bool hidden_bias = true;
    bool output_bias = false;
};

MlpParams init_mlp(const std::vector<int>& layer_dims, const InitConfig& config,
                   std::uint64_t seed);

/// Zero-valued parameters with the same shapes, used as gradient storage.
MlpParams zeros_like(const MlpParams& params);

struct ForwardTrace {
    Matrix input;                 // (n x in_dim)
    std::vector<Matrix> pre;      // pre-activations per layer
    std::vector<Matrix> post;     // activations per layer

    const Matrix& output() const { return post.back(); }
    /// Activation feeding the final layer (the input for single-layer nets).
    const Matrix& penultimate() const
    {
        return post.size() >= 2 ? post[post.size() - 2] : input;
    }
};

ForwardTrace forward(const MlpParams& params, const Matrix& x);

struct BackwardResult {
    MlpParams grads;       // same shapes as the parameters
    Matrix input_grad;     // (n x in_dim)
};

/// Reverse accumulation of d(objective)/d(params) given d(objective)/d(output).
BackwardResult backward(const MlpParams& params, const ForwardTrace& trace,
                        const Matrix& output_grad);

struct AdamState {
    MlpParams m;
    MlpParams v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(const MlpParams& params);

/// Standard bias-corrected Adam update, in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               double lr);

/// splitmix64; the counter scheme used to derive all secondary seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

}  // namespace bde

#endif
