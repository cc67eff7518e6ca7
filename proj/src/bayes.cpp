#include "bde/bayes.hpp"

#include <cmath>

namespace bde {

namespace {

/// sum_i ||eta_hat(x_i)||^2 / sigma^2(x_i) over the training data.
double feature_sum(const HeteroNet& member, const Dataset& train_data)
{
    HeteroTrace trace = hetero_forward(member, train_data.inputs);
    const auto s2 = trace.variance.col(0).array();
    return (trace.penultimate().rowwise().squaredNorm().array() / s2).sum();
}

}  // namespace

ElboCoeffs elbo_coeffs(const HeteroNet& member, const Dataset& train_data,
                       double lambda, int n_members)
{
    if (train_data.size() == 0) throw DomainError("elbo_coeffs: empty training data");
    const double p_y = static_cast<double>(member.output_dim());
    const double p_penult = static_cast<double>(member.penult_dim());

    HeteroTrace trace = hetero_forward(member, train_data.inputs);
    const auto s2 = trace.variance.col(0).array();
    const Matrix residual = trace.means() - train_data.targets;
    const double data_nll =
        (residual.rowwise().squaredNorm().array() / s2 + p_y * s2.log()).sum();
    const double feat_sum =
        (trace.penultimate().rowwise().squaredNorm().array() / s2).sum();
    const double w_frob2 = member.mean_head.layers.front().weight.squaredNorm();

    ElboCoeffs out;
    out.c = 0.5 * p_y * p_penult;
    out.b = -0.5 * (p_y * feat_sum + p_y * p_penult * lambda);
    out.a = std::log(static_cast<double>(n_members)) -
            0.5 * (data_nll + lambda * w_frob2 - p_y * p_penult);
    // KL against the improper lambda = 0 prior has no finite constant term.
    if (lambda > 0.0) out.a += 0.5 * p_y * p_penult * std::log(lambda);
    return out;
}

double compute_gamma(const HeteroNet& member, const Dataset& train_data,
                     double lambda)
{
    if (train_data.size() == 0) throw DomainError("compute_gamma: empty training data");
    const double p_penult = static_cast<double>(member.penult_dim());
    const double denom = feature_sum(member, train_data) + p_penult * lambda;
    if (!(denom > 0.0))
        throw DomainError("compute_gamma: degenerate input (all features zero and lambda = 0)");
    return p_penult / denom;
}

GammaSet compute_gammas(const Ensemble& ensemble, const Dataset& train_data)
{
    GammaSet set;
    set.lambda = ensemble.cfg.lambda;
    set.n_train = train_data.size();
    const int n_members = static_cast<int>(ensemble.size());
    for (const auto& member : ensemble.members) {
        ElboCoeffs coeffs = elbo_coeffs(member, train_data, set.lambda, n_members);
        set.coeffs.push_back(coeffs);
        set.gammas.push_back(-coeffs.c / coeffs.b);
    }
    return set;
}

double elbo_value(const std::vector<ElboCoeffs>& coeffs,
                  const std::vector<double>& gammas)
{
    if (coeffs.size() != gammas.size())
        throw ShapeError("elbo_value: coefficient/gamma count mismatch");
    double sum = 0.0;
    for (std::size_t l = 0; l < coeffs.size(); ++l) {
        if (!(gammas[l] > 0.0)) throw DomainError("elbo_value: gamma must be > 0");
        sum += coeffs[l].a + coeffs[l].b * gammas[l] +
               coeffs[l].c * std::log(gammas[l]);
    }
    return sum / static_cast<double>(coeffs.size());
}

double grid_search_gamma(const ElboCoeffs& coeffs, double lo, double hi,
                         int n_points)
{
    if (!(lo > 0.0 && hi > lo) || n_points < 2)
        throw DomainError("grid_search_gamma: invalid grid");
    double best_g = lo;
    double best_v = -std::numeric_limits<double>::infinity();
    const double log_lo = std::log(lo);
    const double step = (std::log(hi) - log_lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        const double g = std::exp(log_lo + i * step);
        const double v = coeffs.b * g + coeffs.c * std::log(g);
        if (v > best_v) {
            best_v = v;
            best_g = g;
        }
    }
    return best_g;
}

namespace {

Matrix as_row(const Vector& x) { return x.transpose(); }

struct MemberEval {
    Matrix means;      // (L x p_y)
    Vector variances;  // (L)
    Vector feat_sq;    // (L), ||eta_hat_l(x)||^2
};

MemberEval evaluate_members(const Ensemble& ensemble, const Vector& x)
{
    const auto n_members = static_cast<Eigen::Index>(ensemble.size());
    MemberEval eval;
    eval.means.resize(n_members, ensemble.output_dim());
    eval.variances.resize(n_members);
    eval.feat_sq.resize(n_members);
    const Matrix row = as_row(x);
    for (Eigen::Index l = 0; l < n_members; ++l) {
        HeteroTrace trace = hetero_forward(ensemble.members[l], row);
        eval.means.row(l) = trace.means().row(0);
        eval.variances(l) = trace.variance(0, 0);
        eval.feat_sq(l) = trace.penultimate().row(0).squaredNorm();
    }
    return eval;
}

MomentPair spread_moments(const MemberEval& eval)
{
    const auto n_members = eval.means.rows();
    MomentPair out;
    out.mean = eval.means.colwise().mean().transpose();
    out.cov = Matrix::Zero(eval.means.cols(), eval.means.cols());
    for (Eigen::Index l = 0; l < n_members; ++l) {
        const Vector d = eval.means.row(l).transpose() - out.mean;
        out.cov += d * d.transpose();
    }
    out.cov /= static_cast<double>(n_members);
    return out;
}

void check_gammas(const Ensemble& ensemble, const std::vector<double>& gammas)
{
    if (gammas.size() != ensemble.size())
        throw ShapeError("moments: gamma count does not match ensemble size");
}

}  // namespace

MomentPair regression_moments_classical(const Ensemble& ensemble, const Vector& x)
{
    return spread_moments(evaluate_members(ensemble, x));
}

MomentPair predictive_moments_classical(const Ensemble& ensemble, const Vector& x)
{
    const MemberEval eval = evaluate_members(ensemble, x);
    MomentPair out = spread_moments(eval);
    out.cov += eval.variances.mean() *
               Matrix::Identity(out.cov.rows(), out.cov.cols());
    return out;
}

MomentPair regression_moments_extended(const Ensemble& ensemble,
                                       const std::vector<double>& gammas,
                                       const Vector& x)
{
    check_gammas(ensemble, gammas);
    const MemberEval eval = evaluate_members(ensemble, x);
    MomentPair out = spread_moments(eval);
    double extra = 0.0;
    for (std::size_t l = 0; l < gammas.size(); ++l)
        extra += gammas[l] * eval.feat_sq(static_cast<Eigen::Index>(l));
    extra /= static_cast<double>(gammas.size());
    out.cov += extra * Matrix::Identity(out.cov.rows(), out.cov.cols());
    return out;
}

MomentPair predictive_moments_extended(const Ensemble& ensemble,
                                       const std::vector<double>& gammas,
                                       const Vector& x)
{
    check_gammas(ensemble, gammas);
    const MemberEval eval = evaluate_members(ensemble, x);
    MomentPair out = spread_moments(eval);
    double extra = 0.0;
    for (std::size_t l = 0; l < gammas.size(); ++l)
        extra += gammas[l] * eval.feat_sq(static_cast<Eigen::Index>(l));
    extra /= static_cast<double>(gammas.size());
    out.cov += (extra + eval.variances.mean()) *
               Matrix::Identity(out.cov.rows(), out.cov.cols());
    return out;
}

namespace {

struct RegressionDraw {
    Vector eta;
    Eigen::Index member;
};

RegressionDraw draw_regression(const Ensemble& ensemble,
                               const std::vector<double>& gammas, const Vector& x,
                               std::mt19937_64& rng)
{
    check_gammas(ensemble, gammas);
    std::uniform_int_distribution<Eigen::Index> pick(
        0, static_cast<Eigen::Index>(ensemble.size()) - 1);
    const Eigen::Index l = pick(rng);
    const HeteroNet& member = ensemble.members[l];

    const Matrix feats = penultimate_features(member, as_row(x));
    Matrix w = member.mean_head.layers.front().weight;
    const double sd = std::sqrt(gammas[static_cast<std::size_t>(l)]);
    if (sd > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) += sd * gauss(rng);
    }
    return {w * feats.row(0).transpose(), l};
}

}  // namespace

Vector sample_regression(const Ensemble& ensemble, const std::vector<double>& gammas,
                         const Vector& x, std::mt19937_64& rng)
{
    return draw_regression(ensemble, gammas, x, rng).eta;
}

Vector sample_predictive(const Ensemble& ensemble, const std::vector<double>& gammas,
                         const Vector& x, std::mt19937_64& rng)
{
    RegressionDraw draw = draw_regression(ensemble, gammas, x, rng);
    const double s2 = predict(ensemble.members[draw.member], as_row(x)).variance(0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(s2));
    for (Eigen::Index r = 0; r < draw.eta.size(); ++r) draw.eta(r) += gauss(rng);
    return draw.eta;
}

}  // namespace bde
