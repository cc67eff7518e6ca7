#ifndef BDE_HETERO_HPP
#define BDE_HETERO_HPP

#include "bde/datasets.hpp"
#include "bde/nn.hpp"

namespace bde {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LrSchedule {
    Constant,
    DropLast5,   // multiply the base rate once by 0.1 at epoch E-5 and hold
    HalveLast5,  // multiply by 0.5 in each of the last five epochs
};

std::string to_string(LrSchedule s);
LrSchedule schedule_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 60;
    int batch_size = 64;
    double learning_rate = 1e-3;
    LrSchedule schedule = LrSchedule::DropLast5;
    double lambda = 0.0;  // L2 strength, the prior precision
    std::uint64_t seed = 0;

    void validate(Eigen::Index n_data) const;
};

/// Heteroscedastic regression network: a shared rectifier trunk feeding a
/// bias-free linear mean head and a scalar variance head (softplus + floor).
struct HeteroNet {
    MlpParams trunk;      // p_x -> ... -> p_penult, rectifier throughout
    MlpParams mean_head;  // single linear layer, no bias
    MlpParams var_head;   // single linear layer with bias, raw output
    double variance_floor = 1e-6;

    Eigen::Index input_dim() const { return trunk.in_dim(); }
    Eigen::Index output_dim() const { return mean_head.out_dim(); }
    Eigen::Index penult_dim() const { return trunk.out_dim(); }
    double squared_norm() const
    {
        return trunk.squared_norm() + mean_head.squared_norm() +
               var_head.squared_norm();
    }
};

HeteroNet make_hetero_net(int input_dim, const std::vector<int>& hidden_dims,
                          int output_dim, std::uint64_t seed,
                          double variance_floor = 1e-6);

struct HeteroTrace {
    ForwardTrace trunk;
    ForwardTrace mean;
    ForwardTrace var;
    Matrix variance;  // (n x 1), after softplus and floor

    const Matrix& means() const { return mean.output(); }
    const Matrix& penultimate() const { return trunk.output(); }
};

HeteroTrace hetero_forward(const HeteroNet& net, const Matrix& x);

struct Prediction {
    Matrix mean;      // (n x p_y)
    Vector variance;  // (n), sigma^2 >= floor
};

Prediction predict(const HeteroNet& net, const Matrix& x);

/// Gradients for all three parameter groups.
struct HeteroGrads {
    MlpParams trunk;
    MlpParams mean_head;
    MlpParams var_head;
};

/// Mini-batch negative log posterior contribution:
///   1/2 sum_batch(||y - eta||^2 / sigma^2 + p_y log sigma^2)
///   + (|batch| / N_total) * (lambda/2) ||theta||^2,
/// so that summing over one epoch of disjoint batches gives the full loss.
double nll_loss(const HeteroNet& net, const Matrix& x, const Matrix& y,
                double lambda, Eigen::Index n_total);

double nll_loss_grad(const HeteroNet& net, const Matrix& x, const Matrix& y,
                     double lambda, Eigen::Index n_total, HeteroGrads& grads);

double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// MAP training of a single network by Adam over shuffled mini-batches.
/// Deterministic for a fixed cfg.seed; initialization uses cfg.seed, the
/// epoch-e shuffle uses mix_seed(cfg.seed, 1000 + e).
HeteroNet train_map(const Dataset& data, const TrainConfig& cfg,
                    const std::vector<int>& hidden_dims = {128, 64, 32},
                    std::vector<double>* epoch_losses = nullptr);

/// Continues training an already initialized network (used by the trainer
/// and by tests that need hand-built starting points). If epoch_losses is
/// given, the summed mini-batch loss of each epoch is appended to it.
void train_map_inplace(HeteroNet& net, const Dataset& data, const TrainConfig& cfg,
                       std::vector<double>* epoch_losses = nullptr);

}  // namespace bde

#endif
