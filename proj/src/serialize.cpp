#include "bde/serialize.hpp"

#include <fstream>

namespace bde {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j)
{
    const auto n_rows = static_cast<Eigen::Index>(j.size());
    if (n_rows == 0) throw ParseError("model file: empty matrix");
    const auto n_cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r)
        for (Eigen::Index c = 0; c < n_cols; ++c)
            m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

json vector_to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j)
{
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

void write_json_file(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

json to_json(const MlpParams& params)
{
    json layers = json::array();
    for (const auto& layer : params.layers) {
        json jl;
        jl["activation"] = to_string(layer.act);
        jl["weight"] = matrix_to_json(layer.weight);
        if (layer.has_bias)
            jl["bias"] = vector_to_json(layer.bias);
        else
            jl["bias"] = nullptr;
        layers.push_back(std::move(jl));
    }
    return json{{"layer_dims", params.layer_dims()}, {"layers", std::move(layers)}};
}

MlpParams mlp_from_json(const json& j)
{
    MlpParams params;
    for (const auto& jl : j.at("layers")) {
        Layer layer;
        layer.act = activation_from_string(jl.at("activation").get<std::string>());
        layer.weight = matrix_from_json(jl.at("weight"));
        if (jl.at("bias").is_null()) {
            layer.has_bias = false;
            layer.bias = Vector::Zero(layer.weight.rows());
        } else {
            layer.has_bias = true;
            layer.bias = vector_from_json(jl.at("bias"));
            if (layer.bias.size() != layer.weight.rows())
                throw ParseError("model file: bias/weight dimension mismatch");
        }
        params.layers.push_back(std::move(layer));
    }
    if (params.layers.empty()) throw ParseError("model file: no layers");
    const auto dims = params.layer_dims();
    const auto stored = j.at("layer_dims").get<std::vector<int>>();
    if (dims != stored) throw ParseError("model file: inconsistent layer_dims");
    for (std::size_t k = 1; k < params.layers.size(); ++k)
        if (params.layers[k].in_dim() != params.layers[k - 1].out_dim())
            throw ParseError("model file: incompatible consecutive layers");
    if (!params.all_finite()) throw ParseError("model file: non-finite parameters");
    return params;
}

json to_json(const HeteroNet& net)
{
    return json{{"input_dim", net.input_dim()},
                {"output_dim", net.output_dim()},
                {"penult_dim", net.penult_dim()},
                {"variance_floor", net.variance_floor},
                {"trunk", to_json(net.trunk)},
                {"mean_head", to_json(net.mean_head)},
                {"var_head", to_json(net.var_head)}};
}

HeteroNet hetero_from_json(const json& j)
{
    HeteroNet net;
    net.variance_floor = j.at("variance_floor").get<double>();
    net.trunk = mlp_from_json(j.at("trunk"));
    net.mean_head = mlp_from_json(j.at("mean_head"));
    net.var_head = mlp_from_json(j.at("var_head"));
    if (net.mean_head.in_dim() != net.trunk.out_dim() ||
        net.var_head.in_dim() != net.trunk.out_dim())
        throw ParseError("model file: head/trunk dimension mismatch");
    if (net.mean_head.layers.size() != 1 || net.mean_head.layers.front().has_bias ||
        net.mean_head.layers.front().act != Activation::Identity)
        throw ParseError("model file: mean head must be one bias-free linear layer");
    return net;
}

json to_json(const TrainConfig& cfg)
{
    return json{{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"schedule", to_string(cfg.schedule)},
                {"lambda", cfg.lambda},
                {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j)
{
    TrainConfig cfg;
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.schedule = schedule_from_string(j.at("schedule").get<std::string>());
    cfg.lambda = j.at("lambda").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

json to_json(const NormStats& stats)
{
    json j{{"target_mean", vector_to_json(stats.target_mean)},
           {"target_std", vector_to_json(stats.target_std)}};
    if (stats.input_mean) {
        j["input_mean"] = vector_to_json(*stats.input_mean);
        j["input_std"] = vector_to_json(*stats.input_std);
    }
    return j;
}

NormStats norm_stats_from_json(const json& j)
{
    NormStats stats;
    stats.target_mean = vector_from_json(j.at("target_mean"));
    stats.target_std = vector_from_json(j.at("target_std"));
    if (j.contains("input_mean")) {
        stats.input_mean = vector_from_json(j.at("input_mean"));
        stats.input_std = vector_from_json(j.at("input_std"));
    }
    return stats;
}

void save_hetero(const std::filesystem::path& path, const HeteroNet& net)
{
    write_json_file(path, to_json(net));
}

HeteroNet load_hetero(const std::filesystem::path& path)
{
    return hetero_from_json(read_json_file(path));
}

void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble,
                   const NormStats& stats)
{
    std::filesystem::create_directories(dir);
    json members = json::array();
    for (std::size_t l = 0; l < ensemble.size(); ++l) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%03zu.json", l);
        save_hetero(dir / name, ensemble.members[l]);
        members.push_back(name);
    }
    json manifest{{"n_members", ensemble.size()},
                  {"members", std::move(members)},
                  {"member_seeds", ensemble.member_seeds},
                  {"train_config", to_json(ensemble.cfg)},
                  {"norm_stats", to_json(stats)}};
    write_json_file(dir / "manifest.json", manifest);
}

LoadedEnsemble load_ensemble(const std::filesystem::path& manifest_path)
{
    const json manifest = read_json_file(manifest_path);
    const auto dir = manifest_path.parent_path();
    LoadedEnsemble out;
    out.ensemble.cfg = train_config_from_json(manifest.at("train_config"));
    out.ensemble.member_seeds =
        manifest.at("member_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& name : manifest.at("members"))
        out.ensemble.members.push_back(load_hetero(dir / name.get<std::string>()));
    if (out.ensemble.members.size() != manifest.at("n_members").get<std::size_t>())
        throw ParseError("manifest: member count mismatch");
    out.stats = norm_stats_from_json(manifest.at("norm_stats"));
    return out;
}

void save_gammas(const std::filesystem::path& path, const GammaSet& set)
{
    json coeffs = json::array();
    for (const auto& c : set.coeffs)
        coeffs.push_back(json{{"a", c.a}, {"b", c.b}, {"c", c.c}});
    write_json_file(path, json{{"lambda", set.lambda},
                               {"n_train", set.n_train},
                               {"gammas", set.gammas},
                               {"coeffs", std::move(coeffs)}});
}

GammaSet load_gammas(const std::filesystem::path& path)
{
    const json j = read_json_file(path);
    GammaSet set;
    set.lambda = j.at("lambda").get<double>();
    set.n_train = j.at("n_train").get<Eigen::Index>();
    set.gammas = j.at("gammas").get<std::vector<double>>();
    for (const auto& jc : j.at("coeffs"))
        set.coeffs.push_back({jc.at("a").get<double>(), jc.at("b").get<double>(),
                              jc.at("c").get<double>()});
    if (set.coeffs.size() != set.gammas.size())
        throw ParseError("gamma file: gamma/coefficient count mismatch");
    return set;
}

}  // namespace bde
