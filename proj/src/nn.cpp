#include "bde/nn.hpp"

#include <cmath>
#include <random>

namespace bde {

std::string to_string(Activation a)
{
    return a == Activation::Relu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& s)
{
    if (s == "relu") return Activation::Relu;
    if (s == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: " + s);
}

std::vector<int> MlpParams::layer_dims() const
{
    std::vector<int> dims;
    dims.push_back(static_cast<int>(in_dim()));
    for (const auto& layer : layers) dims.push_back(static_cast<int>(layer.out_dim()));
    return dims;
}

std::size_t MlpParams::num_params() const
{
    std::size_t n = 0;
    for (const auto& layer : layers) {
        n += static_cast<std::size_t>(layer.weight.size());
        if (layer.has_bias) n += static_cast<std::size_t>(layer.bias.size());
    }
    return n;
}

double MlpParams::squared_norm() const
{
    double s = 0.0;
    for (const auto& layer : layers) {
        s += layer.weight.squaredNorm();
        if (layer.has_bias) s += layer.bias.squaredNorm();
    }
    return s;
}

bool MlpParams::all_finite() const
{
    for (const auto& layer : layers) {
        if (!layer.weight.allFinite()) return false;
        if (layer.has_bias && !layer.bias.allFinite()) return false;
    }
    return true;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter)
{
    std::uint64_t z = seed + counter * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

MlpParams init_mlp(const std::vector<int>& layer_dims, const InitConfig& config,
                   std::uint64_t seed)
{
    if (layer_dims.size() < 2)
        throw ConfigError("init_mlp: need at least input and output dimensions");
    for (int d : layer_dims)
        if (d <= 0)
            throw ConfigError("init_mlp: non-positive layer dimension " + std::to_string(d));

    std::mt19937_64 rng(mix_seed(seed, 0));
    MlpParams params;
    const std::size_t n_layers = layer_dims.size() - 1;
    for (std::size_t k = 0; k < n_layers; ++k) {
        const bool last = (k + 1 == n_layers);
        Layer layer;
        layer.act = last ? config.output_act : config.hidden_act;
        layer.has_bias = last ? config.output_bias : config.hidden_bias;
        const int fan_in = layer_dims[k];
        const int fan_out = layer_dims[k + 1];
        const double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        layer.weight.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                layer.weight(r, c) = dist(rng);
        layer.bias = Vector::Zero(fan_out);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

MlpParams zeros_like(const MlpParams& params)
{
    MlpParams out = params;
    for (auto& layer : out.layers) {
        layer.weight.setZero();
        layer.bias.setZero();
    }
    return out;
}

ForwardTrace forward(const MlpParams& params, const Matrix& x)
{
    if (x.cols() != params.in_dim())
        throw ShapeError("forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects " + std::to_string(params.in_dim()));
    ForwardTrace trace;
    trace.input = x;
    const Matrix* current = &trace.input;
    for (const auto& layer : params.layers) {
        Matrix pre = (*current) * layer.weight.transpose();
        if (layer.has_bias) pre.rowwise() += layer.bias.transpose();
        Matrix post = (layer.act == Activation::Relu) ? pre.cwiseMax(0.0) : pre;
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
        current = &trace.post.back();
    }
    return trace;
}

BackwardResult backward(const MlpParams& params, const ForwardTrace& trace,
                        const Matrix& output_grad)
{
    const std::size_t n_layers = params.layers.size();
    if (trace.post.size() != n_layers)
        throw ShapeError("backward: trace does not match network depth");
    if (output_grad.rows() != trace.input.rows() ||
        output_grad.cols() != params.out_dim())
        throw ShapeError("backward: output_grad shape mismatch");

    BackwardResult result;
    result.grads = zeros_like(params);
    Matrix delta = output_grad;
    for (std::size_t k = n_layers; k-- > 0;) {
        const Layer& layer = params.layers[k];
        if (layer.act == Activation::Relu)
            delta = delta.cwiseProduct(
                (trace.pre[k].array() > 0.0).cast<double>().matrix());
        const Matrix& below = (k == 0) ? trace.input : trace.post[k - 1];
        result.grads.layers[k].weight = delta.transpose() * below;
        if (layer.has_bias)
            result.grads.layers[k].bias = delta.colwise().sum().transpose();
        delta = delta * layer.weight;
    }
    result.input_grad = std::move(delta);
    return result;
}

AdamState make_adam_state(const MlpParams& params)
{
    AdamState state;
    state.m = zeros_like(params);
    state.v = zeros_like(params);
    return state;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               double lr)
{
    if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
    if (grads.layers.size() != params.layers.size())
        throw ShapeError("adam_step: gradient/parameter layer count mismatch");
    if (!grads.all_finite())
        throw NumericError("adam_step: non-finite gradient");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        auto& w = params.layers[k].weight;
        auto& gw = grads.layers[k].weight;
        auto& mw = state.m.layers[k].weight;
        auto& vw = state.v.layers[k].weight;
        mw = state.beta1 * mw + (1.0 - state.beta1) * gw;
        vw = state.beta2 * vw.array().matrix() +
             (1.0 - state.beta2) * gw.cwiseProduct(gw);
        w.array() -= lr * (mw.array() / bc1) /
                     ((vw.array() / bc2).sqrt() + state.eps);
        if (params.layers[k].has_bias) {
            auto& b = params.layers[k].bias;
            auto& gb = grads.layers[k].bias;
            auto& mb = state.m.layers[k].bias;
            auto& vb = state.v.layers[k].bias;
            mb = state.beta1 * mb + (1.0 - state.beta1) * gb;
            vb = state.beta2 * vb + (1.0 - state.beta2) * gb.cwiseProduct(gb);
            b.array() -= lr * (mb.array() / bc1) /
                         ((vb.array() / bc2).sqrt() + state.eps);
        }
    }
}

}  // namespace bde
