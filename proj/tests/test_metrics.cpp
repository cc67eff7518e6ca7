#include <doctest.h>

#include <random>

#include "bde/metrics.hpp"

using namespace bde;

TEST_CASE("rmse hand values")
{
    Matrix a(2, 1), b(2, 1);
    a << 1.0, -2.0;
    b = a;
    CHECK(rmse(a, b) == 0.0);

    Matrix preds(2, 1), targets(2, 1);
    preds << 0.0, 0.0;
    targets << 3.0, 4.0;
    CHECK(rmse(preds, targets) == doctest::Approx(5.0 / std::sqrt(2.0)));

    CHECK_THROWS_AS(rmse(Matrix(0, 1), Matrix(0, 1)), DomainError);
    CHECK_THROWS_AS(rmse(Matrix::Zero(2, 1), Matrix::Zero(3, 1)), ShapeError);
}

TEST_CASE("coverage hand values")
{
    Matrix means = Matrix::Zero(2, 1);
    Matrix vars = Matrix::Ones(2, 1);
    Matrix targets(2, 1);

    targets << 0.0, 0.0;
    CHECK(coverage(means, vars, targets) == 1.0);

    targets << 0.0, 3.0;  // 1.96 interval holds 0, misses 3
    CHECK(coverage(means, vars, targets) == 0.5);

    Matrix neg = vars;
    neg(0, 0) = -1.0;
    CHECK_THROWS_AS(coverage(means, neg, targets), DomainError);
}

TEST_CASE("coverage is monotone in variance scale")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix means(50, 1), vars(50, 1), targets(50, 1);
    for (int i = 0; i < 50; ++i) {
        means(i, 0) = gauss(rng);
        vars(i, 0) = 0.1 + std::abs(gauss(rng));
        targets(i, 0) = gauss(rng);
    }
    const double base = coverage(means, vars, targets);
    for (double k : {1.5, 2.0, 10.0})
        CHECK(coverage(means, k * vars, targets) >= base);
}

TEST_CASE("variance_ratio modes")
{
    Vector epi(2), alea(2);
    epi << 1.0, 2.0;
    alea << 2.0, 4.0;
    CHECK(variance_ratio(epi, alea) == doctest::Approx(0.5));
    CHECK(variance_ratio(epi, alea, RatioMode::MeanOfMeans) ==
          doctest::Approx(0.5));

    epi << 0.0, 0.0;
    CHECK(variance_ratio(epi, alea) == 0.0);

    // the two readings differ when the ratios are heterogeneous
    epi << 1.0, 8.0;
    alea << 1.0, 2.0;
    CHECK(variance_ratio(epi, alea) == doctest::Approx(2.5));
    CHECK(variance_ratio(epi, alea, RatioMode::MeanOfMeans) ==
          doctest::Approx(3.0));

    Vector zero_alea(2);
    zero_alea << 1.0, 0.0;
    CHECK_THROWS_AS(variance_ratio(epi, zero_alea), DomainError);
}

TEST_CASE("report rows carry the documented columns")
{
    EvalReport r;
    r.dataset = "quartic1d";
    r.variant = "classical";
    r.n_members = 10;
    r.rmse = 0.5;
    r.epistemic_coverage = 0.25;
    r.total_coverage = 0.95;
    r.variance_ratio = 0.03;
    CHECK(report_header() ==
          "dataset\tvariant\tL\trmse\tepistemic_cov\ttotal_cov\tratio");
    CHECK(report_row(r) == "quartic1d\tclassical\t10\t0.5\t0.25\t0.95\t0.03");
}
