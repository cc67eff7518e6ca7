#include <doctest.h>

#include <fstream>

#include "bde/experiment.hpp"
#include "test_util.hpp"

using namespace bde;

namespace {

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("bde_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

const char* kSmallConfig =
    "# small synthetic run\n"
    "dataset = quartic1d\n"
    "n_train = 60\n"
    "n_test = 40\n"
    "hidden_dims = 16,8\n"
    "epochs = 8\n"
    "batch_size = 16\n"
    "learning_rate = 1/N\n"
    "lambda = 1/N\n"
    "n_members = 3\n"
    "seed = 21\n";

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing")
{
    const auto cfg = parse_config_text(kSmallConfig);
    CHECK(cfg.dataset == "quartic1d");
    CHECK(cfg.n_train == 60);
    CHECK(cfg.hidden_dims == std::vector<int>{16, 8});
    CHECK(cfg.learning_rate_inv_n);
    CHECK(cfg.lambda_inv_n);
    CHECK(cfg.n_members == 3);
    CHECK(cfg.seed == 21);

    CHECK_THROWS_AS(parse_config_text("n_train = 5\n"), ConfigError);  // no dataset
    CHECK_THROWS_AS(parse_config_text("dataset = d\nbogus_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("dataset = d\nepochs ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("dataset = d\nepochs = ten\n"), ConfigError);
}

TEST_CASE("seed plan is a pure function of the master seed")
{
    const auto a = seed_plan(7);
    const auto b = seed_plan(7);
    CHECK(a.data == b.data);
    CHECK(a.ensemble == b.ensemble);
    const auto c = seed_plan(8);
    CHECK(a.data != c.data);
    // distinct roles get distinct seeds
    CHECK(a.data != a.test);
    CHECK(a.split != a.ensemble);
}

TEST_CASE("model serialization round-trips bit-exactly")
{
    const auto dir = temp_dir("serialize");
    HeteroNet net = make_hetero_net(2, {8, 4}, 1, 77);
    save_hetero(dir / "net.json", net);
    const HeteroNet back = load_hetero(dir / "net.json");
    CHECK(back.trunk.layers[0].weight == net.trunk.layers[0].weight);
    CHECK(back.trunk.layers[1].bias == net.trunk.layers[1].bias);
    CHECK(back.mean_head.layers[0].weight == net.mean_head.layers[0].weight);
    CHECK(back.var_head.layers[0].bias == net.var_head.layers[0].bias);
    CHECK(back.variance_floor == net.variance_floor);
    CHECK_FALSE(back.mean_head.layers[0].has_bias);
}

TEST_CASE("ensemble manifest reload reproduces moments bit-exactly")
{
    const auto cfg = parse_config_text(kSmallConfig);
    const auto data = prepare_data(cfg);
    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 16;
    tc.learning_rate = 1e-3;
    tc.lambda = 0.01;
    tc.seed = 5;
    const auto ens = train_ensemble(data.train, tc, 2, {8, 4});
    const auto gammas = compute_gammas(ens, data.train);

    const auto dir = temp_dir("manifest");
    save_ensemble(dir, ens, data.stats);
    save_gammas(dir / "gammas.json", gammas);
    const auto loaded = load_ensemble(dir / "manifest.json");
    const auto gammas2 = load_gammas(dir / "gammas.json");

    CHECK(gammas2.gammas == gammas.gammas);
    CHECK(gammas2.lambda == gammas.lambda);
    Vector x(1);
    x << 0.37;
    const auto a = regression_moments_extended(ens, gammas.gammas, x);
    const auto b = regression_moments_extended(loaded.ensemble, gammas2.gammas, x);
    CHECK(a.mean == b.mean);
    CHECK(a.cov == b.cov);
    CHECK(loaded.stats.target_mean == data.stats.target_mean);
}

TEST_CASE("run_experiment: determinism, artifacts, report structure")
{
    const auto cfg = parse_config_text(kSmallConfig);
    const auto dir1 = temp_dir("run1");
    const auto dir2 = temp_dir("run2");
    const auto r1 = run_experiment(cfg, dir1);
    const auto r2 = run_experiment(cfg, dir2);

    CHECK(read_file(r1.report_file) == read_file(r2.report_file));
    CHECK(std::filesystem::exists(r1.manifest));
    CHECK(std::filesystem::exists(r1.gamma_file));
    CHECK(std::filesystem::exists(dir1 / "plot_classical.svg"));
    CHECK(std::filesystem::exists(dir1 / "plot_extended.svg"));

    // classical and extended agree on RMSE, extended epistemic is wider
    CHECK(r1.classical.rmse == r1.extended.rmse);
    CHECK(r1.extended.epistemic_coverage >= r1.classical.epistemic_coverage);
    CHECK(r1.extended.variance_ratio > r1.classical.variance_ratio);

    // reloading the artifacts reproduces the report numbers exactly
    const auto loaded = load_ensemble(r1.manifest);
    const auto gammas = load_gammas(r1.gamma_file);
    const auto data = prepare_data(cfg);
    const auto eval = evaluate_points(loaded.ensemble, gammas, data.test.inputs);
    auto [classical, extended] =
        make_reports(eval, data.test, data.name,
                     static_cast<int>(loaded.ensemble.size()), cfg.ratio_mode);
    CHECK(classical.rmse == r1.classical.rmse);
    CHECK(classical.epistemic_coverage == r1.classical.epistemic_coverage);
    CHECK(extended.total_coverage == r1.extended.total_coverage);
    CHECK(extended.variance_ratio == r1.extended.variance_ratio);
}

TEST_CASE("L = 1: zero classical epistemic coverage, positive extended")
{
    auto cfg = parse_config_text(kSmallConfig);
    cfg.n_members = 1;
    const auto dir = temp_dir("single");
    const auto r = run_experiment(cfg, dir);
    CHECK(r.classical.epistemic_coverage == 0.0);
    CHECK(r.extended.epistemic_coverage > 0.0);
}

TEST_CASE("report_table sorts by dataset, L, variant")
{
    EvalReport a, b, c;
    a.dataset = "x";
    a.variant = "extended";
    a.n_members = 5;
    b.dataset = "x";
    b.variant = "classical";
    b.n_members = 5;
    c.dataset = "x";
    c.variant = "classical";
    c.n_members = 10;
    const std::string table = report_table({a, c, b});
    const auto pos_c5 = table.find("classical\t5");
    const auto pos_e5 = table.find("extended\t5");
    const auto pos_c10 = table.find("classical\t10");
    CHECK(pos_c5 < pos_e5);
    CHECK(pos_e5 < pos_c10);
    CHECK(table.rfind(report_header(), 0) == 0);
}

TEST_CASE("sweep: usage errors and entry bookkeeping")
{
    const auto cfg = parse_config_text(kSmallConfig);
    CHECK_THROWS_AS(sweep(cfg, SweepAxis::EnsembleSize, {}, temp_dir("s0")),
                    ConfigError);
    CHECK_THROWS_AS(sweep(cfg, SweepAxis::EnsembleSize, {5, 2}, temp_dir("s1")),
                    ConfigError);

    const auto entries = sweep(cfg, SweepAxis::EnsembleSize, {1, 2}, temp_dir("s2"));
    REQUIRE(entries.size() == 2);
    for (const auto& e : entries) {
        REQUIRE(e.result.has_value());
        CHECK(e.result->extended.epistemic_coverage >=
              e.result->classical.epistemic_coverage);
    }
}
