#include "bde/ensemble.hpp"

#include <atomic>
#include <thread>

namespace bde {

Ensemble train_ensemble(const Dataset& data, const TrainConfig& cfg, int n_members,
                        const std::vector<int>& hidden_dims, int threads)
{
    if (n_members < 1) throw EnsembleError("ensemble: need L >= 1");
    Ensemble ens;
    ens.cfg = cfg;
    ens.members.resize(n_members);
    ens.member_seeds.resize(n_members);
    for (int l = 0; l < n_members; ++l)
        ens.member_seeds[l] = cfg.seed + static_cast<std::uint64_t>(l);

    std::vector<std::string> failures(n_members);
    auto train_one = [&](int l) {
        try {
            TrainConfig member_cfg = cfg;
            member_cfg.seed = ens.member_seeds[l];
            ens.members[l] = train_map(data, member_cfg, hidden_dims);
        } catch (const std::exception& e) {
            failures[l] = e.what();
        }
    };

    if (threads <= 1 || n_members == 1) {
        for (int l = 0; l < n_members; ++l) train_one(l);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int l = next.fetch_add(1); l < n_members; l = next.fetch_add(1))
                train_one(l);
        };
        std::vector<std::thread> pool;
        const int n_threads = std::min(threads, n_members);
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (int l = 0; l < n_members; ++l)
        if (!failures[l].empty())
            throw EnsembleError("member " + std::to_string(l) +
                                " failed: " + failures[l]);
    return ens;
}

Matrix penultimate_features(const HeteroNet& member, const Matrix& x)
{
    return forward(member.trunk, x).output();
}

}  // namespace bde
