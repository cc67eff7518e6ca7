#ifndef BDE_METRICS_HPP
#define BDE_METRICS_HPP

#include <string>

#include "bde/nn.hpp"

namespace bde {

struct EvalReport {
    std::string dataset;
    std::string variant;  // "classical" or "extended"
    int n_members = 0;
    double rmse = 0.0;
    double epistemic_coverage = 0.0;
    double total_coverage = 0.0;
    double variance_ratio = 0.0;
};

double rmse(const Matrix& predictions, const Matrix& targets);

/// Fraction of test targets inside mean +/- z * sqrt(variance), per output
/// component, averaged over components. level 0.95 maps to z = 1.96.
double coverage(const Matrix& means, const Matrix& variances, const Matrix& targets,
                double level = 0.95);

enum class RatioMode {
    PerPointMean,   // mean over the test set of epistemic/aleatoric per point
    MeanOfMeans,    // (mean epistemic) / (mean aleatoric)
};

double variance_ratio(const Vector& epistemic_vars, const Vector& aleatoric_vars,
                      RatioMode mode = RatioMode::PerPointMean);

std::string report_header();
std::string report_row(const EvalReport& report);

}  // namespace bde

#endif
