#include "bde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace bde {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, int line_no)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": expected a boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v)
{
    std::vector<int> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stoi(trim(item)));
    return out;
}

bool is_inv_n(const std::string& v) { return v == "1/N" || v == "1/n"; }

}  // namespace

ExperimentConfig parse_config_text(const std::string& text)
{
    ExperimentConfig cfg;
    bool have_dataset = false;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "dataset") {
                cfg.dataset = value;
                have_dataset = true;
            } else if (key == "n_train") {
                cfg.n_train = std::stoi(value);
            } else if (key == "n_test") {
                cfg.n_test = std::stoi(value);
            } else if (key == "train_fraction") {
                cfg.train_fraction = std::stod(value);
            } else if (key == "delimiter") {
                cfg.delimiter = value == "space" ? ' ' : value.at(0);
            } else if (key == "target_column") {
                cfg.target_column = std::stoi(value);
            } else if (key == "has_header") {
                cfg.has_header = parse_bool(value, line_no);
            } else if (key == "normalize_inputs") {
                cfg.normalize_inputs = parse_bool(value, line_no);
            } else if (key == "hidden_dims") {
                cfg.hidden_dims = parse_int_list(value);
            } else if (key == "epochs") {
                cfg.epochs = std::stoi(value);
            } else if (key == "batch_size") {
                cfg.batch_size = std::stoi(value);
            } else if (key == "learning_rate") {
                cfg.learning_rate_inv_n = is_inv_n(value);
                if (!cfg.learning_rate_inv_n) cfg.learning_rate = std::stod(value);
            } else if (key == "schedule") {
                cfg.schedule = schedule_from_string(value);
            } else if (key == "lambda") {
                cfg.lambda_inv_n = is_inv_n(value);
                if (!cfg.lambda_inv_n) cfg.lambda = std::stod(value);
            } else if (key == "n_members") {
                cfg.n_members = std::stoi(value);
            } else if (key == "variance_floor") {
                cfg.variance_floor = std::stod(value);
            } else if (key == "ratio_mode") {
                if (value == "per_point")
                    cfg.ratio_mode = RatioMode::PerPointMean;
                else if (value == "mean_of_means")
                    cfg.ratio_mode = RatioMode::MeanOfMeans;
                else
                    throw ConfigError("unknown ratio_mode: " + value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "threads") {
                cfg.threads = std::stoi(value);
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else {
                throw ConfigError("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": cannot parse value '" + value + "' for key '" +
                              key + "'");
        }
    }
    if (!have_dataset) throw ConfigError("config: missing required key 'dataset'");
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

SeedPlan seed_plan(std::uint64_t master)
{
    return {mix_seed(master, 1), mix_seed(master, 2), mix_seed(master, 3),
            mix_seed(master, 4), mix_seed(master, 5)};
}

PreparedData prepare_data(const ExperimentConfig& cfg)
{
    const SeedPlan seeds = seed_plan(cfg.seed);
    PreparedData out;
    Dataset train_raw, test_raw;
    bool synthetic = false;
    if (cfg.dataset == "quartic1d") {
        train_raw = gen_quartic_1d(cfg.n_train, seeds.data);
        test_raw = gen_quartic_1d(cfg.n_test, seeds.test);
        synthetic = true;
    } else if (cfg.dataset == "quartic2d") {
        train_raw = gen_quartic_2d(cfg.n_train, seeds.data);
        test_raw = gen_quartic_2d(cfg.n_test, seeds.test);
        synthetic = true;
    } else {
        LoadOptions opts;
        opts.delimiter = cfg.delimiter;
        opts.target_column = cfg.target_column;
        opts.has_header = cfg.has_header;
        const Dataset full = load_delimited(cfg.dataset, opts);
        std::tie(train_raw, test_raw) = split(full, cfg.train_fraction, seeds.split);
    }
    out.name = synthetic ? cfg.dataset
                         : std::filesystem::path(cfg.dataset).stem().string();

    NormalizeOptions nopts;
    nopts.normalize_inputs = cfg.normalize_inputs.value_or(!synthetic);
    std::tie(out.train, out.test, out.stats) = normalize(train_raw, test_raw, nopts);
    return out;
}

Evaluation evaluate_points(const Ensemble& ensemble, const GammaSet& gammas,
                           const Matrix& inputs)
{
    const Eigen::Index n = inputs.rows();
    const Eigen::Index p_y = ensemble.output_dim();
    Evaluation eval;
    eval.pred_mean.resize(n, p_y);
    eval.epi_classical.resize(n, p_y);
    eval.epi_extended.resize(n, p_y);
    eval.aleatoric.resize(n, p_y);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector x = inputs.row(i).transpose();
        const MomentPair classical = regression_moments_classical(ensemble, x);
        const MomentPair extended =
            regression_moments_extended(ensemble, gammas.gammas, x);
        double alea = 0.0;
        for (const auto& member : ensemble.members)
            alea += predict(member, x.transpose()).variance(0);
        alea /= static_cast<double>(ensemble.size());
        eval.pred_mean.row(i) = classical.mean.transpose();
        eval.epi_classical.row(i) = classical.cov.diagonal().transpose();
        eval.epi_extended.row(i) = extended.cov.diagonal().transpose();
        eval.aleatoric.row(i).setConstant(alea);
    }
    return eval;
}

std::pair<EvalReport, EvalReport> make_reports(const Evaluation& eval,
                                               const Dataset& test,
                                               const std::string& dataset_name,
                                               int n_members, RatioMode mode)
{
    const Matrix& epi_targets =
        test.ground_truth ? *test.ground_truth : test.targets;
    const double err = rmse(eval.pred_mean, test.targets);

    auto build = [&](const Matrix& epi, const char* variant) {
        EvalReport r;
        r.dataset = dataset_name;
        r.variant = variant;
        r.n_members = n_members;
        r.rmse = err;
        r.epistemic_coverage = coverage(eval.pred_mean, epi, epi_targets);
        r.total_coverage =
            coverage(eval.pred_mean, epi + eval.aleatoric, test.targets);
        r.variance_ratio = variance_ratio(epi.rowwise().mean(),
                                          eval.aleatoric.rowwise().mean(), mode);
        return r;
    };
    return {build(eval.epi_classical, "classical"),
            build(eval.epi_extended, "extended")};
}

std::string report_table(std::vector<EvalReport> reports)
{
    std::sort(reports.begin(), reports.end(),
              [](const EvalReport& a, const EvalReport& b) {
                  return std::tie(a.dataset, a.n_members, a.variant) <
                         std::tie(b.dataset, b.n_members, b.variant);
              });
    std::string out = report_header() + "\n";
    for (const auto& r : reports) out += report_row(r) + "\n";
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir)
{
    const SeedPlan seeds = seed_plan(cfg.seed);
    const PreparedData data = prepare_data(cfg);
    const auto n_train = data.train.size();

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = std::min<int>(cfg.batch_size, static_cast<int>(n_train));
    tc.learning_rate = cfg.learning_rate_inv_n
                           ? 1.0 / static_cast<double>(n_train)
                           : cfg.learning_rate;
    tc.schedule = cfg.schedule;
    tc.lambda = cfg.lambda_inv_n ? 1.0 / static_cast<double>(n_train) : cfg.lambda;
    tc.seed = seeds.ensemble;

    Ensemble ensemble =
        train_ensemble(data.train, tc, cfg.n_members, cfg.hidden_dims, cfg.threads);
    const GammaSet gammas = compute_gammas(ensemble, data.train);
    const Evaluation eval = evaluate_points(ensemble, gammas, data.test.inputs);
    auto [classical, extended] =
        make_reports(eval, data.test, data.name, cfg.n_members, cfg.ratio_mode);

    std::filesystem::create_directories(out_dir);
    ExperimentResult result;
    result.classical = classical;
    result.extended = extended;
    save_ensemble(out_dir / "ensemble", ensemble, data.stats);
    result.manifest = out_dir / "ensemble" / "manifest.json";
    result.gamma_file = out_dir / "gammas.json";
    save_gammas(result.gamma_file, gammas);
    result.report_file = out_dir / "report.tsv";
    {
        std::ofstream rf(result.report_file);
        rf << report_table({classical, extended});
    }
    if (data.test.input_dim() == 1) {
        write_band_plot(out_dir / "plot_classical.svg", data.test, eval, false);
        write_band_plot(out_dir / "plot_extended.svg", data.test, eval, true);
    }
    return result;
}

std::vector<SweepEntry> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                              const std::vector<int>& values,
                              const std::filesystem::path& out_dir)
{
    if (values.empty()) throw ConfigError("sweep: empty value list");
    if (!std::is_sorted(values.begin(), values.end()))
        throw ConfigError("sweep: values must be ascending");
    const bool synthetic = cfg.dataset == "quartic1d" || cfg.dataset == "quartic2d";
    if (axis == SweepAxis::TrainSize && !synthetic)
        throw ConfigError("sweep: train-size sweeps require a synthetic dataset");

    const char* axis_name =
        axis == SweepAxis::TrainSize ? "train_size" : "ensemble_size";
    std::vector<SweepEntry> entries;
    std::vector<EvalReport> all_reports;
    for (int value : values) {
        ExperimentConfig run_cfg = cfg;
        if (axis == SweepAxis::TrainSize)
            run_cfg.n_train = value;
        else
            run_cfg.n_members = value;
        SweepEntry entry;
        entry.value = value;
        const auto run_dir =
            out_dir / (std::string(axis_name) + "_" + std::to_string(value));
        try {
            entry.result = run_experiment(run_cfg, run_dir);
            all_reports.push_back(entry.result->classical);
            all_reports.push_back(entry.result->extended);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        entries.push_back(std::move(entry));
    }
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream rf(out_dir / "sweep_report.tsv");
        rf << report_table(all_reports);
    }
    write_trend_plot(out_dir / "sweep_trend.svg", entries, axis_name);
    return entries;
}

// ---------------------------------------------------------------------------
// SVG output

namespace {

struct SvgCanvas {
    std::ostringstream body;
    double width, height, margin;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

    SvgCanvas(double w, double h, double m) : width(w), height(h), margin(m) {}

    double sx(double x) const
    {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin);
    }
    double sy(double y) const
    {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double stroke_width = 1.5)
    {
        body << "<polyline fill=\"none\" stroke=\"" << stroke
             << "\" stroke-width=\"" << stroke_width << "\" points=\"";
        for (const auto& [x, y] : pts) body << sx(x) << ',' << sy(y) << ' ';
        body << "\"/>\n";
    }

    void band(const std::vector<std::pair<double, double>>& upper,
              const std::vector<std::pair<double, double>>& lower,
              const std::string& fill, double opacity)
    {
        body << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << opacity
             << "\" stroke=\"none\" points=\"";
        for (const auto& [x, y] : upper) body << sx(x) << ',' << sy(y) << ' ';
        for (auto it = lower.rbegin(); it != lower.rend(); ++it)
            body << sx(it->first) << ',' << sy(it->second) << ' ';
        body << "\"/>\n";
    }

    void scatter(const std::vector<std::pair<double, double>>& pts,
                 const std::string& fill)
    {
        for (const auto& [x, y] : pts)
            body << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y)
                 << "\" r=\"2\" fill=\"" << fill << "\" fill-opacity=\"0.6\"/>\n";
    }

    void text(double x, double y, const std::string& s)
    {
        body << "<text x=\"" << x << "\" y=\"" << y
             << "\" font-family=\"sans-serif\" font-size=\"13\">" << s
             << "</text>\n";
    }

    void axes()
    {
        body << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
             << width - 2 * margin << "\" height=\"" << height - 2 * margin
             << "\" fill=\"none\" stroke=\"#444\"/>\n";
    }

    void write(const std::filesystem::path& path)
    {
        std::ofstream out(path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
            << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
            << height << "\">\n"
            << body.str() << "</svg>\n";
    }
};

}  // namespace

void write_band_plot(const std::filesystem::path& path, const Dataset& test,
                     const Evaluation& eval, bool extended)
{
    const Eigen::Index n = test.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return test.inputs(a, 0) < test.inputs(b, 0);
    });

    const Matrix& epi = extended ? eval.epi_extended : eval.epi_classical;
    std::vector<std::pair<double, double>> mean_pts, tot_hi, tot_lo, epi_hi, epi_lo,
        scatter_pts;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index i = order[k];
        const double x = test.inputs(i, 0);
        const double m = eval.pred_mean(i, 0);
        const double tot_sd = std::sqrt(epi(i, 0) + eval.aleatoric(i, 0));
        const double epi_sd = std::sqrt(epi(i, 0));
        mean_pts.emplace_back(x, m);
        tot_hi.emplace_back(x, m + 1.96 * tot_sd);
        tot_lo.emplace_back(x, m - 1.96 * tot_sd);
        epi_hi.emplace_back(x, m + 1.96 * epi_sd);
        epi_lo.emplace_back(x, m - 1.96 * epi_sd);
        scatter_pts.emplace_back(x, test.targets(i, 0));
    }

    SvgCanvas svg(800, 500, 50);
    svg.x_min = test.inputs.col(0).minCoeff();
    svg.x_max = test.inputs.col(0).maxCoeff();
    double lo = test.targets.col(0).minCoeff(), hi = test.targets.col(0).maxCoeff();
    for (const auto& [x, y] : tot_lo) lo = std::min(lo, y);
    for (const auto& [x, y] : tot_hi) hi = std::max(hi, y);
    svg.y_min = lo - 0.05 * (hi - lo);
    svg.y_max = hi + 0.05 * (hi - lo);

    svg.axes();
    svg.band(tot_hi, tot_lo, "#4477cc", 0.20);
    svg.band(epi_hi, epi_lo, "#cc5544", 0.35);
    svg.polyline(mean_pts, "#224488", 2.0);
    svg.scatter(scatter_pts, "#333333");
    svg.text(55, 30, std::string(extended ? "extended" : "classical") +
                         ": mean, 1.96-sigma total (blue) and epistemic (red) bands");
    svg.write(path);
}

void write_trend_plot(const std::filesystem::path& path,
                      const std::vector<SweepEntry>& entries,
                      const std::string& axis_label)
{
    std::vector<std::pair<double, double>> cov_classical, cov_extended, rmse_pts;
    for (const auto& e : entries) {
        if (!e.result) continue;
        cov_classical.emplace_back(e.value, e.result->classical.epistemic_coverage);
        cov_extended.emplace_back(e.value, e.result->extended.epistemic_coverage);
        rmse_pts.emplace_back(e.value, e.result->classical.rmse);
    }
    if (cov_classical.empty()) return;

    SvgCanvas cov_svg(800, 500, 50);
    cov_svg.x_min = cov_classical.front().first;
    cov_svg.x_max = std::max(cov_classical.back().first,
                             cov_svg.x_min + 1.0);
    cov_svg.y_min = 0.0;
    cov_svg.y_max = 1.0;
    cov_svg.axes();
    cov_svg.polyline(cov_classical, "#224488", 2.0);
    cov_svg.polyline(cov_extended, "#cc5544", 2.0);
    cov_svg.text(55, 30, "epistemic coverage vs " + axis_label +
                             " (blue classical, red extended)");
    cov_svg.write(path);

    SvgCanvas rmse_svg(800, 500, 50);
    rmse_svg.x_min = cov_svg.x_min;
    rmse_svg.x_max = cov_svg.x_max;
    double hi = 0.0;
    for (const auto& [x, y] : rmse_pts) hi = std::max(hi, y);
    rmse_svg.y_min = 0.0;
    rmse_svg.y_max = hi * 1.1 + 1e-12;
    rmse_svg.axes();
    rmse_svg.polyline(rmse_pts, "#228844", 2.0);
    rmse_svg.text(55, 30, "rmse vs " + axis_label);
    auto rmse_path = path;
    rmse_path.replace_filename(path.stem().string() + "_rmse.svg");
    rmse_svg.write(rmse_path);
}

}  // namespace bde
