#include "bde/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace bde {

Matrix NormStats::apply_targets(const Matrix& y) const
{
    Matrix out = y;
    out.rowwise() -= target_mean.transpose();
    out.array().rowwise() /= target_std.transpose().array();
    return out;
}

Matrix NormStats::invert_targets(const Matrix& y) const
{
    Matrix out = y;
    out.array().rowwise() *= target_std.transpose().array();
    out.rowwise() += target_mean.transpose();
    return out;
}

Matrix NormStats::apply_inputs(const Matrix& x) const
{
    if (!input_mean) return x;
    Matrix out = x;
    out.rowwise() -= input_mean->transpose();
    out.array().rowwise() /= input_std->transpose().array();
    return out;
}

double quartic_1d_mean(double x)
{
    const double a = 4.5 * x;
    const double b = 18.0 * x;
    return 0.5 * (a * a * a * a - b * b + 22.5 * x);
}

double quartic_2d_mean(double x1, double x2)
{
    auto term = [](double xi) {
        const double u = 1.5 * xi - 1.0;
        const double v = 1.3 * xi + 1.0;
        return u * u * v * v;
    };
    return term(x1) + term(x2);
}

namespace {

Dataset gen_synthetic(int n, int p_x, std::uint64_t seed, double noise_std,
                      double (*mean_fn)(const double*), const std::string& tag)
{
    if (n < 1) throw DomainError("generator: need n >= 1");
    std::mt19937_64 rng(mix_seed(seed, 0));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, noise_std);

    Dataset data;
    data.tag = tag;
    data.inputs.resize(n, p_x);
    data.targets.resize(n, 1);
    Matrix truth(n, 1);
    std::vector<double> point(static_cast<std::size_t>(p_x));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p_x; ++j) {
            data.inputs(i, j) = unif(rng);
            point[static_cast<std::size_t>(j)] = data.inputs(i, j);
        }
        truth(i, 0) = mean_fn(point.data());
        data.targets(i, 0) = truth(i, 0) + noise(rng);
    }
    data.ground_truth = std::move(truth);
    return data;
}

}  // namespace

Dataset gen_quartic_1d(int n, std::uint64_t seed)
{
    return gen_synthetic(
        n, 1, seed, 10.0, [](const double* x) { return quartic_1d_mean(x[0]); },
        "quartic1d");
}

Dataset gen_quartic_2d(int n, std::uint64_t seed)
{
    return gen_synthetic(
        n, 2, seed, 0.2,
        [](const double* x) { return quartic_2d_mean(x[0], x[1]); }, "quartic2d");
}

Dataset load_delimited(const std::string& path, const LoadOptions& opts)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    bool skipped_header = !opts.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> row;
        std::istringstream ss(line);
        std::string cell;
        int col = 0;
        auto parse_cell = [&](const std::string& text) {
            ++col;
            std::size_t pos = 0;
            double value = 0.0;
            try {
                value = std::stod(text, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos == 0 || text.find_first_not_of(" \t\r", pos) != std::string::npos)
                throw ParseError(path + ": non-numeric cell '" + text + "' at row " +
                                 std::to_string(line_no) + ", column " +
                                 std::to_string(col));
            row.push_back(value);
        };
        if (opts.delimiter == ' ') {
            while (ss >> cell) parse_cell(cell);
        } else {
            while (std::getline(ss, cell, opts.delimiter)) parse_cell(cell);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ": ragged row " + std::to_string(line_no) +
                             " (" + std::to_string(row.size()) + " cells, expected " +
                             std::to_string(rows.front().size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    const int n = static_cast<int>(rows.size());
    const int n_cols = static_cast<int>(rows.front().size());
    int target = opts.target_column < 0 ? n_cols - 1 : opts.target_column;
    if (target < 0 || target >= n_cols)
        throw ParseError(path + ": target column " + std::to_string(target) +
                         " out of range for " + std::to_string(n_cols) + " columns");

    Dataset data;
    data.tag = path;
    data.inputs.resize(n, n_cols - 1);
    data.targets.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        int k = 0;
        for (int j = 0; j < n_cols; ++j) {
            if (j == target)
                data.targets(i, 0) = rows[i][j];
            else
                data.inputs(i, k++) = rows[i][j];
        }
    }
    if (!data.inputs.allFinite() || !data.targets.allFinite())
        throw ParseError(path + ": non-finite values in data");
    return data;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DomainError("split: train_fraction must lie in (0,1)");
    const Eigen::Index n = data.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(mix_seed(seed, 1));
    std::shuffle(order.begin(), order.end(), rng);

    const Eigen::Index n_train =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(
                                     train_fraction * static_cast<double>(n))),
                                 1, n - 1);

    auto take = [&](Eigen::Index begin, Eigen::Index count, const std::string& tag) {
        Dataset out;
        out.tag = data.tag + "/" + tag;
        out.inputs.resize(count, data.input_dim());
        out.targets.resize(count, data.target_dim());
        if (data.ground_truth)
            out.ground_truth = Matrix(count, data.target_dim());
        for (Eigen::Index i = 0; i < count; ++i) {
            const Eigen::Index src = order[begin + i];
            out.inputs.row(i) = data.inputs.row(src);
            out.targets.row(i) = data.targets.row(src);
            if (data.ground_truth)
                out.ground_truth->row(i) = data.ground_truth->row(src);
        }
        return out;
    };
    return {take(0, n_train, "train"), take(n_train, n - n_train, "test")};
}

namespace {

std::pair<Vector, Vector> column_stats(const Matrix& m, const char* what)
{
    Vector mean = m.colwise().mean();
    Vector sd(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double var =
            (m.col(j).array() - mean(j)).square().sum() / static_cast<double>(m.rows());
        sd(j) = std::sqrt(var);
        if (!(sd(j) > 0.0))
            throw DomainError(std::string("normalize: zero-variance ") + what +
                              " column " + std::to_string(j));
    }
    return {mean, sd};
}

}  // namespace

std::tuple<Dataset, Dataset, NormStats> normalize(const Dataset& train,
                                                  const Dataset& test,
                                                  const NormalizeOptions& opts)
{
    NormStats stats;
    std::tie(stats.target_mean, stats.target_std) =
        column_stats(train.targets, "target");
    if (opts.normalize_inputs) {
        auto [im, is] = column_stats(train.inputs, "input");
        stats.input_mean = im;
        stats.input_std = is;
    }

    auto transform = [&](const Dataset& d) {
        Dataset out = d;
        out.targets = stats.apply_targets(d.targets);
        out.inputs = stats.apply_inputs(d.inputs);
        if (d.ground_truth) out.ground_truth = stats.apply_targets(*d.ground_truth);
        return out;
    };
    return {transform(train), transform(test), stats};
}

}  // namespace bde
