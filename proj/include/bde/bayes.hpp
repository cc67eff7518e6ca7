#ifndef BDE_BAYES_HPP
#define BDE_BAYES_HPP

#include <random>

#include "bde/ensemble.hpp"

namespace bde {

/// ELBO restricted to member l is a_l + b_l g + c_l log(g) in the member's
/// variance g, with b_l < 0 and c_l > 0.
struct ElboCoeffs {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Per-member posterior variances together with the coefficients they
/// maximize; gamma_l = -c_l / b_l.
struct GammaSet {
    std::vector<double> gammas;
    std::vector<ElboCoeffs> coeffs;
    double lambda = 0.0;
    Eigen::Index n_train = 0;
};

ElboCoeffs elbo_coeffs(const HeteroNet& member, const Dataset& train_data,
                       double lambda, int n_members);

/// Analytic ELBO maximizer for one member:
///   gamma = p_penult / (sum_i ||eta_hat(x_i)||^2 / sigma^2(x_i) + p_penult * lambda).
double compute_gamma(const HeteroNet& member, const Dataset& train_data,
                     double lambda);

GammaSet compute_gammas(const Ensemble& ensemble, const Dataset& train_data);

double elbo_value(const std::vector<ElboCoeffs>& coeffs,
                  const std::vector<double>& gammas);

/// Numerical cross-check of the analytic maximizer: best of a log-spaced grid.
double grid_search_gamma(const ElboCoeffs& coeffs, double lo, double hi,
                         int n_points);

struct MomentPair {
    Vector mean;  // (p_y)
    Matrix cov;   // (p_y x p_y), symmetric PSD
};

/// Delta-mixture moments: mean of member means; spread-only covariance.
MomentPair regression_moments_classical(const Ensemble& ensemble, const Vector& x);

/// Adds the mean aleatoric term (1/L) sum_l sigma_l^2(x) I.
MomentPair predictive_moments_classical(const Ensemble& ensemble, const Vector& x);

/// Gaussian-mixture moments: classical covariance plus
/// (1/L) sum_l gamma_l ||eta_hat_l(x)||^2 I, the closed form of
/// gamma_l J_l J_l^T for the bias-free linear mean head.
MomentPair regression_moments_extended(const Ensemble& ensemble,
                                       const std::vector<double>& gammas,
                                       const Vector& x);

MomentPair predictive_moments_extended(const Ensemble& ensemble,
                                       const std::vector<double>& gammas,
                                       const Vector& x);

/// One draw from the regression-function posterior: pick a member uniformly,
/// perturb its mean-head weights by sqrt(gamma_l) * standard normals, and
/// evaluate. All other parameters stay at their MAP values.
Vector sample_regression(const Ensemble& ensemble, const std::vector<double>& gammas,
                         const Vector& x, std::mt19937_64& rng);

/// Regression draw plus Gaussian observation noise from the selected
/// member's variance head.
Vector sample_predictive(const Ensemble& ensemble, const std::vector<double>& gammas,
                         const Vector& x, std::mt19937_64& rng);

}  // namespace bde

#endif
