#include "bde/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace bde {

double rmse(const Matrix& predictions, const Matrix& targets)
{
    if (predictions.rows() == 0) throw DomainError("rmse: empty input");
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw ShapeError("rmse: prediction/target shape mismatch");
    return std::sqrt((predictions - targets).squaredNorm() /
                     static_cast<double>(predictions.size()));
}

namespace {

double z_for_level(double level)
{
    if (level == 0.95) return 1.96;  // the convention used throughout
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("coverage: level must lie in (0,1)");
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(mid / std::sqrt(2.0)) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double coverage(const Matrix& means, const Matrix& variances, const Matrix& targets,
                double level)
{
    if (means.rows() != targets.rows() || means.cols() != targets.cols() ||
        variances.rows() != means.rows() || variances.cols() != means.cols())
        throw ShapeError("coverage: shape mismatch");
    if ((variances.array() < 0.0).any())
        throw DomainError("coverage: negative variance");
    const double z = z_for_level(level);
    const auto inside =
        ((targets - means).array().abs() <= z * variances.array().sqrt());
    return inside.cast<double>().sum() / static_cast<double>(means.size());
}

double variance_ratio(const Vector& epistemic_vars, const Vector& aleatoric_vars,
                      RatioMode mode)
{
    if (epistemic_vars.size() != aleatoric_vars.size())
        throw ShapeError("variance_ratio: length mismatch");
    if (epistemic_vars.size() == 0) throw DomainError("variance_ratio: empty input");
    if ((aleatoric_vars.array() <= 0.0).any())
        throw DomainError("variance_ratio: aleatoric variance must be > 0");
    if (mode == RatioMode::MeanOfMeans)
        return epistemic_vars.mean() / aleatoric_vars.mean();
    return (epistemic_vars.array() / aleatoric_vars.array()).mean();
}

std::string report_header()
{
    return "dataset\tvariant\tL\trmse\tepistemic_cov\ttotal_cov\tratio";
}

namespace {

// shortest decimal form that parses back to the same double
std::string fmt(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string report_row(const EvalReport& report)
{
    std::ostringstream os;
    os << report.dataset << '\t' << report.variant << '\t' << report.n_members
       << '\t' << fmt(report.rmse) << '\t' << fmt(report.epistemic_coverage)
       << '\t' << fmt(report.total_coverage) << '\t'
       << fmt(report.variance_ratio);
    return os.str();
}

}  // namespace bde
