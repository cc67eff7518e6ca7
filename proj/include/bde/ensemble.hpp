#ifndef BDE_ENSEMBLE_HPP
#define BDE_ENSEMBLE_HPP

#include "bde/hetero.hpp"

namespace bde {

struct EnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// L independently trained members sharing architecture, data and lambda.
/// Member l is seeded with cfg.seed + l.
struct Ensemble {
    std::vector<HeteroNet> members;
    TrainConfig cfg;
    std::vector<std::uint64_t> member_seeds;

    std::size_t size() const { return members.size(); }
    Eigen::Index output_dim() const { return members.front().output_dim(); }
    Eigen::Index penult_dim() const { return members.front().penult_dim(); }
};

/// Algorithm step 1: independent training of L members. With threads > 1
/// the members are trained concurrently; results are identical to serial
/// execution because no state is shared.
Ensemble train_ensemble(const Dataset& data, const TrainConfig& cfg, int n_members,
                        const std::vector<int>& hidden_dims = {128, 64, 32},
                        int threads = 1);

/// Activation vector feeding the mean head, eta_hat(x); one row per input.
Matrix penultimate_features(const HeteroNet& member, const Matrix& x);

}  // namespace bde

#endif
