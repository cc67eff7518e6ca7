#ifndef BDE_EXPERIMENT_HPP
#define BDE_EXPERIMENT_HPP

#include <filesystem>
#include <optional>

#include "bde/bayes.hpp"
#include "bde/metrics.hpp"
#include "bde/serialize.hpp"

namespace bde {

/// Parsed from a line-oriented `key = value` file; see README for keys.
struct ExperimentConfig {
    // dataset
    std::string dataset;          // "quartic1d", "quartic2d", or a file path
    int n_train = 200;            // synthetic only
    int n_test = 200;             // synthetic only
    double train_fraction = 0.8;  // file datasets
    char delimiter = ',';
    int target_column = -1;
    bool has_header = false;
    std::optional<bool> normalize_inputs;  // default: files yes, synthetic no

    // model / training
    std::vector<int> hidden_dims = {128, 64, 32};
    int epochs = 60;
    int batch_size = 64;
    double learning_rate = 1e-3;
    bool learning_rate_inv_n = false;  // key value "1/N"
    LrSchedule schedule = LrSchedule::DropLast5;
    double lambda = 0.0;
    bool lambda_inv_n = false;
    int n_members = 10;
    double variance_floor = 1e-6;

    // evaluation / execution
    RatioMode ratio_mode = RatioMode::PerPointMean;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Master-seed fan-out; counters are part of the on-disk contract.
struct SeedPlan {
    std::uint64_t data;      // mix_seed(master, 1)
    std::uint64_t test;      // mix_seed(master, 2)
    std::uint64_t split;     // mix_seed(master, 3)
    std::uint64_t ensemble;  // mix_seed(master, 4)
    std::uint64_t sample;    // mix_seed(master, 5)
};
SeedPlan seed_plan(std::uint64_t master);

/// Train/test pair in normalized units plus the stats used.
struct PreparedData {
    Dataset train;
    Dataset test;
    NormStats stats;
    std::string name;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Per-point diagonal summaries over a test set.
struct Evaluation {
    Matrix pred_mean;      // (n x p_y)
    Matrix epi_classical;  // (n x p_y) marginal variances
    Matrix epi_extended;   // (n x p_y)
    Matrix aleatoric;      // (n x p_y), (1/L) sum_l sigma_l^2 per point
};

Evaluation evaluate_points(const Ensemble& ensemble, const GammaSet& gammas,
                           const Matrix& inputs);

/// Builds the (classical, extended) report pair. Epistemic coverage is
/// measured against the noise-free regression values when the dataset
/// carries them, and against the noisy targets otherwise.
std::pair<EvalReport, EvalReport> make_reports(const Evaluation& eval,
                                               const Dataset& test,
                                               const std::string& dataset_name,
                                               int n_members, RatioMode mode);

struct ExperimentResult {
    EvalReport classical;
    EvalReport extended;
    std::filesystem::path manifest;
    std::filesystem::path gamma_file;
    std::filesystem::path report_file;
};

/// End-to-end run: prepare data, train L members, compute gammas, evaluate
/// both variants, and write all artifacts under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

/// Rows sorted by (dataset, L, variant), preceded by the fixed header.
std::string report_table(std::vector<EvalReport> reports);

enum class SweepAxis { TrainSize, EnsembleSize };

struct SweepEntry {
    int value = 0;
    std::optional<ExperimentResult> result;  // empty if the run failed
    std::string error;
};

std::vector<SweepEntry> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                              const std::vector<int>& values,
                              const std::filesystem::path& out_dir);

/// Static SVG in the style of a 1-D band plot: mean curve, shaded 1.96-sigma
/// total and epistemic bands, and the test scatter.
void write_band_plot(const std::filesystem::path& path, const Dataset& test,
                     const Evaluation& eval, bool extended);

void write_trend_plot(const std::filesystem::path& path,
                      const std::vector<SweepEntry>& entries,
                      const std::string& axis_label);

}  // namespace bde

#endif
