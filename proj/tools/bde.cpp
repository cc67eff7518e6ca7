#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bde/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

bde::ExperimentConfig load_config(const CommonOpts& opts)
{
    bde::ExperimentConfig cfg = bde::parse_config_file(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.threads) cfg.threads = *opts.threads;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_config = true)
{
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (need_config) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--threads", opts.threads, "worker threads for member training");
}

std::vector<double> parse_point(const std::string& text)
{
    std::vector<double> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"deep ensembles with Bayesian post-processing"};
    app.require_subcommand(1);

    CommonOpts run_opts, train_opts, gamma_opts, eval_opts, sweep_opts;

    auto* run = app.add_subcommand("run", "full experiment: train, gamma, eval, plots");
    add_common(run, run_opts);

    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
    std::string gen_dataset = "quartic1d", gen_out = "data.csv";
    int gen_n = 200;
    std::uint64_t gen_seed = 0;
    gen->add_option("--dataset", gen_dataset, "quartic1d or quartic2d")->required();
    gen->add_option("--n", gen_n, "number of samples");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV path");

    auto* train = app.add_subcommand("train", "train the ensemble and save the manifest");
    add_common(train, train_opts);

    auto* gamma = app.add_subcommand("gamma", "compute posterior variances for a saved ensemble");
    add_common(gamma, gamma_opts);
    std::string gamma_manifest;
    gamma->add_option("--manifest", gamma_manifest, "ensemble manifest")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a saved ensemble + gamma file");
    add_common(eval, eval_opts);
    std::string eval_manifest, eval_gammas, eval_variant = "both";
    eval->add_option("--manifest", eval_manifest, "ensemble manifest")->required();
    eval->add_option("--gammas", eval_gammas, "gamma file")->required();
    eval->add_option("--variant", eval_variant, "classical|extended|both")
        ->check(CLI::IsMember({"classical", "extended", "both"}));

    auto* sample = app.add_subcommand("sample", "draw from the posterior at a point");
    std::string sample_manifest, sample_gammas, sample_x;
    int sample_n = 10;
    std::uint64_t sample_seed = 0;
    bool sample_pred = false;
    sample->add_option("--manifest", sample_manifest, "ensemble manifest")->required();
    sample->add_option("--gammas", sample_gammas, "gamma file")->required();
    sample->add_option("--x", sample_x, "input point, comma separated")->required();
    sample->add_option("--n", sample_n, "number of draws");
    sample->add_option("--seed", sample_seed, "sampler seed");
    sample->add_flag("--predictive", sample_pred,
                     "sample observations instead of regression values");

    auto* sweep_cmd = app.add_subcommand("sweep", "run the experiment along an axis");
    add_common(sweep_cmd, sweep_opts);
    std::string sweep_axis = "ensemble_size", sweep_values;
    sweep_cmd->add_option("--axis", sweep_axis, "train_size|ensemble_size")
        ->check(CLI::IsMember({"train_size", "ensemble_size"}));
    sweep_cmd->add_option("--values", sweep_values, "ascending ints, comma separated")
        ->required();

    auto* report = app.add_subcommand("report", "merge report tables");
    std::vector<std::string> report_inputs;
    report->add_option("--inputs", report_inputs, "report .tsv files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = load_config(run_opts);
            const auto result = bde::run_experiment(cfg, cfg.out_dir);
            std::cout << bde::report_table({result.classical, result.extended});
        } else if (*gen) {
            bde::Dataset data = gen_dataset == "quartic1d"
                                    ? bde::gen_quartic_1d(gen_n, gen_seed)
                                    : bde::gen_quartic_2d(gen_n, gen_seed);
            std::ofstream out(gen_out);
            out.precision(17);
            for (Eigen::Index i = 0; i < data.size(); ++i) {
                for (Eigen::Index j = 0; j < data.input_dim(); ++j)
                    out << data.inputs(i, j) << ',';
                out << data.targets(i, 0) << '\n';
            }
            std::cout << "wrote " << data.size() << " rows to " << gen_out << '\n';
        } else if (*train) {
            const auto cfg = load_config(train_opts);
            const bde::PreparedData data = bde::prepare_data(cfg);
            bde::TrainConfig tc;
            tc.epochs = cfg.epochs;
            tc.batch_size =
                std::min<int>(cfg.batch_size, static_cast<int>(data.train.size()));
            tc.learning_rate = cfg.learning_rate_inv_n
                                   ? 1.0 / static_cast<double>(data.train.size())
                                   : cfg.learning_rate;
            tc.schedule = cfg.schedule;
            tc.lambda = cfg.lambda_inv_n
                            ? 1.0 / static_cast<double>(data.train.size())
                            : cfg.lambda;
            tc.seed = bde::seed_plan(cfg.seed).ensemble;
            const auto ensemble = bde::train_ensemble(
                data.train, tc, cfg.n_members, cfg.hidden_dims, cfg.threads);
            bde::save_ensemble(fs::path(cfg.out_dir) / "ensemble", ensemble,
                               data.stats);
            std::cout << "trained " << ensemble.size() << " members, manifest at "
                      << (fs::path(cfg.out_dir) / "ensemble" / "manifest.json")
                      << '\n';
        } else if (*gamma) {
            const auto cfg = load_config(gamma_opts);
            const bde::PreparedData data = bde::prepare_data(cfg);
            auto loaded = bde::load_ensemble(gamma_manifest);
            const auto gammas = bde::compute_gammas(loaded.ensemble, data.train);
            const fs::path out =
                fs::path(cfg.out_dir.empty() ? "." : cfg.out_dir) / "gammas.json";
            fs::create_directories(out.parent_path());
            bde::save_gammas(out, gammas);
            std::cout << "wrote " << out << '\n';
        } else if (*eval) {
            const auto cfg = load_config(eval_opts);
            const bde::PreparedData data = bde::prepare_data(cfg);
            auto loaded = bde::load_ensemble(eval_manifest);
            const auto gammas = bde::load_gammas(eval_gammas);
            const auto evaluation =
                bde::evaluate_points(loaded.ensemble, gammas, data.test.inputs);
            auto [classical, extended] = bde::make_reports(
                evaluation, data.test, data.name,
                static_cast<int>(loaded.ensemble.size()), cfg.ratio_mode);
            std::vector<bde::EvalReport> rows;
            if (eval_variant != "extended") rows.push_back(classical);
            if (eval_variant != "classical") rows.push_back(extended);
            std::cout << bde::report_table(rows);
        } else if (*sample) {
            auto loaded = bde::load_ensemble(sample_manifest);
            const auto gammas = bde::load_gammas(sample_gammas);
            const auto point = parse_point(sample_x);
            bde::Vector x =
                Eigen::Map<const bde::Vector>(point.data(), point.size());
            std::mt19937_64 rng(bde::mix_seed(sample_seed, 5));
            std::cout.precision(17);
            for (int i = 0; i < sample_n; ++i) {
                const bde::Vector draw =
                    sample_pred ? bde::sample_predictive(loaded.ensemble,
                                                         gammas.gammas, x, rng)
                                : bde::sample_regression(loaded.ensemble,
                                                         gammas.gammas, x, rng);
                for (Eigen::Index j = 0; j < draw.size(); ++j)
                    std::cout << (j ? "," : "") << draw(j);
                std::cout << '\n';
            }
        } else if (*sweep_cmd) {
            const auto cfg = load_config(sweep_opts);
            std::vector<int> values;
            {
                std::istringstream ss(sweep_values);
                std::string item;
                while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
            }
            const auto axis = sweep_axis == "train_size"
                                  ? bde::SweepAxis::TrainSize
                                  : bde::SweepAxis::EnsembleSize;
            const auto entries = bde::sweep(cfg, axis, values, cfg.out_dir);
            for (const auto& e : entries) {
                if (e.result)
                    std::cout << bde::report_row(e.result->classical) << '\n'
                              << bde::report_row(e.result->extended) << '\n';
                else
                    std::cerr << sweep_axis << "=" << e.value
                              << " failed: " << e.error << '\n';
            }
        } else if (*report) {
            std::vector<bde::EvalReport> rows;
            for (const auto& path : report_inputs) {
                std::ifstream in(path);
                if (!in) throw bde::ConfigError("cannot open " + path);
                std::string line;
                std::getline(in, line);  // header
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    std::istringstream ss(line);
                    bde::EvalReport r;
                    ss >> r.dataset >> r.variant >> r.n_members >> r.rmse >>
                        r.epistemic_coverage >> r.total_coverage >> r.variance_ratio;
                    rows.push_back(std::move(r));
                }
            }
            std::cout << bde::report_table(rows);
        }
    } catch (const bde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const bde::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const bde::TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
