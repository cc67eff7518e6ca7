#ifndef BDE_SERIALIZE_HPP
#define BDE_SERIALIZE_HPP

#include <filesystem>

#include <json.hpp>

#include "bde/bayes.hpp"
#include "bde/ensemble.hpp"

namespace bde {

// JSON schemas are documented in the README. All floating-point values are
// written so that reloading reproduces them bit-exactly.

nlohmann::json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HeteroNet& net);
HeteroNet hetero_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

void save_hetero(const std::filesystem::path& path, const HeteroNet& net);
HeteroNet load_hetero(const std::filesystem::path& path);

/// Writes member_###.json files plus a manifest referencing them.
void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble,
                   const NormStats& stats);

struct LoadedEnsemble {
    Ensemble ensemble;
    NormStats stats;
};

LoadedEnsemble load_ensemble(const std::filesystem::path& manifest_path);

void save_gammas(const std::filesystem::path& path, const GammaSet& set);
GammaSet load_gammas(const std::filesystem::path& path);

}  // namespace bde

#endif
