#include "bde/hetero.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bde {

std::string to_string(LrSchedule s)
{
    switch (s) {
        case LrSchedule::Constant: return "constant";
        case LrSchedule::DropLast5: return "drop_last5";
        case LrSchedule::HalveLast5: return "halve_last5";
    }
    return "constant";
}

LrSchedule schedule_from_string(const std::string& s)
{
    if (s == "constant") return LrSchedule::Constant;
    if (s == "drop_last5") return LrSchedule::DropLast5;
    if (s == "halve_last5") return LrSchedule::HalveLast5;
    throw ConfigError("unknown learning-rate schedule: " + s);
}

void TrainConfig::validate(Eigen::Index n_data) const
{
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1 || batch_size > n_data)
        throw ConfigError("train: batch size must lie in [1, N]");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
    if (lambda < 0.0) throw ConfigError("train: lambda must be >= 0");
}

HeteroNet make_hetero_net(int input_dim, const std::vector<int>& hidden_dims,
                          int output_dim, std::uint64_t seed, double variance_floor)
{
    if (hidden_dims.empty())
        throw ConfigError("hetero net needs at least one hidden layer");
    HeteroNet net;
    net.variance_floor = variance_floor;

    std::vector<int> trunk_dims;
    trunk_dims.push_back(input_dim);
    trunk_dims.insert(trunk_dims.end(), hidden_dims.begin(), hidden_dims.end());
    InitConfig trunk_cfg;
    trunk_cfg.output_act = Activation::Relu;
    trunk_cfg.output_bias = true;
    net.trunk = init_mlp(trunk_dims, trunk_cfg, mix_seed(seed, 11));

    InitConfig mean_cfg;  // identity, bias-free
    net.mean_head =
        init_mlp({hidden_dims.back(), output_dim}, mean_cfg, mix_seed(seed, 12));

    InitConfig var_cfg;
    var_cfg.output_bias = true;
    net.var_head = init_mlp({hidden_dims.back(), 1}, var_cfg, mix_seed(seed, 13));
    return net;
}

namespace {

double softplus(double r)
{
    return std::max(r, 0.0) + std::log1p(std::exp(-std::abs(r)));
}

double sigmoid(double r) { return 1.0 / (1.0 + std::exp(-r)); }

}  // namespace

HeteroTrace hetero_forward(const HeteroNet& net, const Matrix& x)
{
    HeteroTrace trace;
    trace.trunk = forward(net.trunk, x);
    trace.mean = forward(net.mean_head, trace.trunk.output());
    trace.var = forward(net.var_head, trace.trunk.output());
    trace.variance = trace.var.output().unaryExpr(
        [&](double r) { return net.variance_floor + softplus(r); });
    return trace;
}

Prediction predict(const HeteroNet& net, const Matrix& x)
{
    HeteroTrace trace = hetero_forward(net, x);
    return {trace.means(), trace.variance.col(0)};
}

namespace {

double data_term(const HeteroTrace& trace, const Matrix& y)
{
    const Matrix residual = trace.means() - y;
    const auto s2 = trace.variance.col(0).array();
    const double p_y = static_cast<double>(y.cols());
    return 0.5 * (residual.rowwise().squaredNorm().array() / s2 + p_y * s2.log()).sum();
}

}  // namespace

double nll_loss(const HeteroNet& net, const Matrix& x, const Matrix& y,
                double lambda, Eigen::Index n_total)
{
    if (x.rows() == 0) throw DomainError("nll_loss: empty batch");
    if (x.rows() != y.rows()) throw ShapeError("nll_loss: input/target row mismatch");
    HeteroTrace trace = hetero_forward(net, x);
    const double scale = static_cast<double>(x.rows()) / static_cast<double>(n_total);
    return data_term(trace, y) + scale * 0.5 * lambda * net.squared_norm();
}

double nll_loss_grad(const HeteroNet& net, const Matrix& x, const Matrix& y,
                     double lambda, Eigen::Index n_total, HeteroGrads& grads)
{
    HeteroTrace trace = hetero_forward(net, x);
    const Matrix residual = trace.means() - y;
    const auto s2 = trace.variance.col(0).array();
    const double p_y = static_cast<double>(y.cols());
    const double scale = static_cast<double>(x.rows()) / static_cast<double>(n_total);
    const double loss =
        data_term(trace, y) + scale * 0.5 * lambda * net.squared_norm();

    // d/d eta = (eta - y) / sigma^2
    Matrix d_mean = residual.array().colwise() / s2;
    // d/d sigma^2 = (p_y / sigma^2 - ||r||^2 / sigma^4) / 2, through softplus
    Matrix d_raw(x.rows(), 1);
    const auto r2 = residual.rowwise().squaredNorm().array();
    d_raw.col(0) = (0.5 * (p_y / s2 - r2 / (s2 * s2)) *
                    trace.var.output().col(0).array().unaryExpr(
                        [](double r) { return sigmoid(r); }))
                       .matrix();

    BackwardResult mean_bwd = backward(net.mean_head, trace.mean, d_mean);
    BackwardResult var_bwd = backward(net.var_head, trace.var, d_raw);
    Matrix d_penult = mean_bwd.input_grad + var_bwd.input_grad;
    BackwardResult trunk_bwd = backward(net.trunk, trace.trunk, d_penult);

    grads.trunk = std::move(trunk_bwd.grads);
    grads.mean_head = std::move(mean_bwd.grads);
    grads.var_head = std::move(var_bwd.grads);

    if (lambda > 0.0) {
        auto add_l2 = [&](MlpParams& g, const MlpParams& p) {
            for (std::size_t k = 0; k < g.layers.size(); ++k) {
                g.layers[k].weight += scale * lambda * p.layers[k].weight;
                if (g.layers[k].has_bias)
                    g.layers[k].bias += scale * lambda * p.layers[k].bias;
            }
        };
        add_l2(grads.trunk, net.trunk);
        add_l2(grads.mean_head, net.mean_head);
        add_l2(grads.var_head, net.var_head);
    }
    return loss;
}

double lr_at_epoch(const TrainConfig& cfg, int epoch)
{
    const int tail_start = std::max(cfg.epochs - 5, 0);
    switch (cfg.schedule) {
        case LrSchedule::Constant:
            return cfg.learning_rate;
        case LrSchedule::DropLast5:
            return epoch >= tail_start ? 0.1 * cfg.learning_rate : cfg.learning_rate;
        case LrSchedule::HalveLast5:
            return epoch >= tail_start
                       ? cfg.learning_rate * std::pow(0.5, epoch - tail_start + 1)
                       : cfg.learning_rate;
    }
    return cfg.learning_rate;
}

void train_map_inplace(HeteroNet& net, const Dataset& data, const TrainConfig& cfg,
                       std::vector<double>* epoch_losses)
{
    const Eigen::Index n = data.size();
    if (n == 0) throw DomainError("train: empty dataset");
    cfg.validate(n);

    AdamState trunk_state = make_adam_state(net.trunk);
    AdamState mean_state = make_adam_state(net.mean_head);
    AdamState var_state = make_adam_state(net.var_head);

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    HeteroGrads grads;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 1000 + epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const double lr = lr_at_epoch(cfg, epoch);
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0, batch_idx = 0; start < n;
             start += cfg.batch_size, ++batch_idx) {
            const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
            Matrix bx(count, data.input_dim());
            Matrix by(count, data.target_dim());
            for (Eigen::Index i = 0; i < count; ++i) {
                bx.row(i) = data.inputs.row(order[start + i]);
                by.row(i) = data.targets.row(order[start + i]);
            }
            const double loss = nll_loss_grad(net, bx, by, cfg.lambda, n, grads);
            if (!std::isfinite(loss))
                throw TrainingError("training diverged at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_idx));
            adam_step(net.trunk, grads.trunk, trunk_state, lr);
            adam_step(net.mean_head, grads.mean_head, mean_state, lr);
            adam_step(net.var_head, grads.var_head, var_state, lr);
            epoch_loss += loss;
        }
        if (epoch_losses) epoch_losses->push_back(epoch_loss);
    }
}

HeteroNet train_map(const Dataset& data, const TrainConfig& cfg,
                    const std::vector<int>& hidden_dims,
                    std::vector<double>* epoch_losses)
{
    HeteroNet net = make_hetero_net(static_cast<int>(data.input_dim()), hidden_dims,
                                    static_cast<int>(data.target_dim()), cfg.seed);
    train_map_inplace(net, data, cfg, epoch_losses);
    return net;
}

}  // namespace bde
