#include <doctest.h>

#include <random>

#include "bde/hetero.hpp"
#include "test_util.hpp"

using namespace bde;
using namespace bde::testutil;

TEST_CASE("predict: zero mean head gives zero mean")
{
    HeteroNet net = make_hetero_net(2, {8, 4}, 1, 3);
    net.mean_head.layers.front().weight.setZero();
    Matrix x(5, 2);
    x.setRandom();
    CHECK(predict(net, x).mean.isZero());
}

TEST_CASE("predict: variance clamps at the floor")
{
    Matrix w(1, 2);
    w << 0.5, -1.0;
    HeteroNet net = hand_net(w, 1.0);
    net.var_head.layers.front().weight.setZero();
    net.var_head.layers.front().bias(0) = -1e6;
    Matrix x(1, 2);
    x << 1.0, 1.0;
    const auto pred = predict(net, x);
    CHECK(pred.variance(0) == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("predict: hand-set mean head dot product")
{
    Matrix w(1, 2);
    w << 0.5, -1.0;
    const HeteroNet net = hand_net(w, 1.0);
    Matrix x(1, 2);
    x << 1.0, 2.0;  // identity trunk -> penultimate (1, 2)
    CHECK(predict(net, x).mean(0, 0) == doctest::Approx(-1.5));
    CHECK_THROWS_AS(predict(net, Matrix(1, 3)), ShapeError);
}

TEST_CASE("nll_loss hand values")
{
    Matrix w(1, 2);
    w << 1.0, 0.0;
    HeteroNet net = hand_net(w, 1.0);
    Matrix x(1, 2);
    x << 2.0, 0.0;  // mean = 2

    SUBCASE("zero residual, unit variance, lambda 0")
    {
        Matrix y(1, 1);
        y << 2.0;
        CHECK(nll_loss(net, x, y, 0.0, 1) == doctest::Approx(0.0).epsilon(1e-10));
    }
    SUBCASE("residual 2, unit variance")
    {
        Matrix y(1, 1);
        y << 0.0;
        CHECK(nll_loss(net, x, y, 0.0, 1) == doctest::Approx(2.0));
    }
    SUBCASE("regularizer only")
    {
        // zero all params except a known norm; full batch so scale = 1
        for (auto* part : {&net.trunk, &net.mean_head, &net.var_head})
            for (auto& layer : part->layers) {
                layer.weight.setZero();
                layer.bias.setZero();
            }
        net.trunk.layers.front().weight(0, 0) = 1.0;
        net.trunk.layers.front().weight(1, 1) = 1.0;
        net.mean_head.layers.front().weight(0, 0) = 1.0;  // ||theta||^2 = 3
        set_constant_variance(net, 1.0);
        const double norm_extra = net.var_head.layers.front().bias.squaredNorm();
        Matrix xx(1, 2);
        xx << 2.0, 0.0;
        Matrix y(1, 1);
        y << 2.0;
        CHECK(nll_loss(net, xx, y, 2.0, 1) ==
              doctest::Approx(3.0 + norm_extra).epsilon(1e-10));
    }
}

TEST_CASE("nll_loss gradient matches finite differences through both heads")
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    HeteroNet net = make_hetero_net(2, {5, 4}, 1, 21);
    Matrix x(6, 2), y(6, 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = gauss(rng);
    const double lambda = 0.3;

    HeteroGrads grads;
    nll_loss_grad(net, x, y, lambda, 6, grads);

    auto probe_part = [&](MlpParams& part, const MlpParams& grad_part) {
        auto theta = flatten(part);
        const auto g = flatten(grad_part);
        std::vector<double> dir(theta.size());
        for (auto& d : dir) d = gauss(rng);
        const double h = 1e-6;
        auto eval = [&](double sign) {
            auto t = theta;
            for (std::size_t i = 0; i < t.size(); ++i) t[i] += sign * h * dir[i];
            unflatten(part, t);
            const double v = nll_loss(net, x, y, lambda, 6);
            unflatten(part, theta);
            return v;
        };
        const double fd = (eval(+1.0) - eval(-1.0)) / (2.0 * h);
        double analytic = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) analytic += g[i] * dir[i];
        CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(1.0, std::abs(analytic)));
    };
    for (int rep = 0; rep < 5; ++rep) {
        probe_part(net.trunk, grads.trunk);
        probe_part(net.mean_head, grads.mean_head);
        probe_part(net.var_head, grads.var_head);
    }
}

TEST_CASE("epoch-sum property: disjoint batches add up to the full loss")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    HeteroNet net = make_hetero_net(1, {6, 3}, 1, 2);
    const int n = 17;
    Matrix x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = gauss(rng);
        y(i, 0) = gauss(rng);
    }
    const double lambda = 0.7;
    const double full = nll_loss(net, x, y, lambda, n);
    double partial = 0.0;
    for (int start = 0; start < n; start += 5) {
        const int count = std::min(5, n - start);
        partial += nll_loss(net, x.middleRows(start, count),
                            y.middleRows(start, count), lambda, n);
    }
    CHECK(partial == doctest::Approx(full).epsilon(1e-10));
}

TEST_CASE("lr schedules")
{
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.01;
    cfg.schedule = LrSchedule::Constant;
    CHECK(lr_at_epoch(cfg, 59) == 0.01);
    cfg.schedule = LrSchedule::DropLast5;
    CHECK(lr_at_epoch(cfg, 54) == 0.01);
    CHECK(lr_at_epoch(cfg, 55) == doctest::Approx(0.001));
    CHECK(lr_at_epoch(cfg, 59) == doctest::Approx(0.001));
    cfg.schedule = LrSchedule::HalveLast5;
    CHECK(lr_at_epoch(cfg, 55) == doctest::Approx(0.005));
    CHECK(lr_at_epoch(cfg, 59) == doctest::Approx(0.01 * std::pow(0.5, 5)));
}

TEST_CASE("train_map fits a constant target")
{
    const int n = 64;
    Dataset data;
    data.inputs = Matrix::Random(n, 1);
    data.targets = Matrix::Constant(n, 1, 0.75);
    // tiny noise so the variance head has something sane to learn
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss(0.0, 0.05);
    for (int i = 0; i < n; ++i) data.targets(i, 0) += gauss(rng);

    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.batch_size = 16;
    cfg.learning_rate = 5e-3;
    cfg.schedule = LrSchedule::DropLast5;
    cfg.seed = 4;
    const HeteroNet net = train_map(data, cfg, {16, 8});
    const auto pred = predict(net, data.inputs);
    for (Eigen::Index i = 0; i < n; ++i)
        CHECK(std::abs(pred.mean(i, 0) - 0.75) < 0.75 * 0.05 + 0.05);
}

TEST_CASE("train_map: huge lambda shrinks the parameters")
{
    Dataset data = gen_quartic_1d(64, 3);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-3;
    cfg.lambda = 1e6;
    cfg.seed = 8;
    HeteroNet init = make_hetero_net(1, {16, 8}, 1, cfg.seed);
    const double norm_before = init.squared_norm();
    train_map_inplace(init, data, cfg);
    CHECK(init.squared_norm() < norm_before);
}

TEST_CASE("train_map determinism")
{
    Dataset data = gen_quartic_1d(50, 6);
    const auto [train_raw, test_raw] = split(data, 0.8, 2);
    const auto [train, test, stats] = normalize(train_raw, test_raw);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 8;
    cfg.learning_rate = 2e-3;
    cfg.seed = 99;
    const HeteroNet a = train_map(train, cfg, {8, 4});
    const HeteroNet b = train_map(train, cfg, {8, 4});
    CHECK(a.trunk.layers[0].weight == b.trunk.layers[0].weight);
    CHECK(a.mean_head.layers[0].weight == b.mean_head.layers[0].weight);
    CHECK(a.var_head.layers[0].weight == b.var_head.layers[0].weight);
}

TEST_CASE("training loss decreases on the 1-D synthetic task")
{
    Dataset data = gen_quartic_1d(200, 13);
    Dataset dummy = gen_quartic_1d(10, 14);
    auto [train, test, stats] = normalize(data, dummy);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.learning_rate = 1.0 / 200.0;
    cfg.lambda = 1.0 / 200.0;
    cfg.seed = 0;
    std::vector<double> losses;
    train_map(train, cfg, {32, 16}, &losses);
    REQUIRE(losses.size() == 60);
    auto median5 = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[2];
    };
    const double first = median5({losses.begin(), losses.begin() + 5});
    const double last = median5({losses.end() - 5, losses.end()});
    CHECK(last <= first);
}

TEST_CASE("train_map validates its configuration")
{
    Dataset data = gen_quartic_1d(10, 0);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_map(data, cfg, {4}), ConfigError);
    cfg.epochs = 1;
    cfg.batch_size = 100;
    CHECK_THROWS_AS(train_map(data, cfg, {4}), ConfigError);
    cfg.batch_size = 4;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train_map(data, cfg, {4}), ConfigError);
}
