#pragma once

// Denoising metrics, per-SNR aggregation into report tables and multilevel
// decomposition exports.
//
// SNR(x) = 10 log10(sum clean^2 / sum (x - clean)^2)
// SNR improvement = SNR(denoised) - SNR(noisy)
// PRD = 100 sqrt(sum (clean - denoised)^2 / sum clean^2)

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wcae/architecture.hpp"
#include "wcae/dataset.hpp"
#include "wcae/wavelet.hpp"

namespace wcae::eval {

double rmse(std::span<const double> clean, std::span<const double> denoised);
/// +infinity when x equals clean exactly.
double snr_db(std::span<const double> clean, std::span<const double> x);
/// Throws InvalidInput when noisy equals clean. Returns +infinity (the
/// documented sentinel) when denoised equals clean exactly.
double snr_improvement(std::span<const double> clean, std::span<const double> noisy,
                       std::span<const double> denoised);
/// Throws InvalidInput for an all-zero clean signal.
double prd(std::span<const double> clean, std::span<const double> denoised);

enum class Metric { Rmse = 0, SnrImprovement = 1, Prd = 2 };
inline constexpr std::array<Metric, 3> kMetrics{Metric::Rmse, Metric::SnrImprovement, Metric::Prd};
const char* metric_name(Metric m);  ///< rmse, snr_improvement_db, prd_percent
Metric parse_metric(const std::string& name);

/// Per-SNR means of the three metrics for one trained model.
struct RunMetrics {
    std::vector<double> snr_db;
    std::vector<std::array<double, 3>> mean;  ///< indexed by Metric
    std::vector<std::size_t> windows;
};

using Denoiser = std::function<Tensor3(const Tensor3&)>;

/// Denoises every test window (batched, optionally over several threads;
/// results do not depend on the thread count), computes the metrics per
/// window and averages them per input SNR. Throws InvalidInput naming the
/// SNR when a configured group has no windows.
RunMetrics evaluate_denoiser(const Denoiser& denoise, const data::PairSet& test, const std::vector<double>& snr_set,
                             unsigned threads = 1, std::size_t batch = 32);
RunMetrics evaluate_model(const arch::Network& net, const data::PairSet& test, const std::vector<double>& snr_set,
                          unsigned threads = 1);

struct Cell {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation over repetitions (0 for one run)
    std::size_t n = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct ReportRow {
    std::string id;
    std::string variant;  ///< FCN, F1..F5, B1..B5, ALL
    int k = 0;
    std::vector<std::array<Cell, 3>> cells;  ///< one per SNR column, indexed by Metric
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct MetricsReport {
    std::vector<double> snr_columns;
    std::vector<ReportRow> rows;

    /// Column counts match, rmse and prd are non-negative.
    void validate() const;
    const ReportRow& row(const std::string& id) const;
    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Mean and sample standard deviation of each cell over the runs.
ReportRow aggregate_runs(const std::string& id, const arch::ModelSpec& spec, const std::vector<RunMetrics>& runs);

/// CSV with header id,variant,k,snr_db,metric,mean,std,n; numbers use
/// %.17g so parse_report_csv(report_csv(r)) == r.
std::string report_csv(const MetricsReport& report);
MetricsReport parse_report_csv(std::string_view text);
/// Aligned table of one metric ("mean +- std" per cell), one row per model.
std::string report_table(const MetricsReport& report, Metric metric);

struct BandSeries {
    std::string name;  ///< D1..DL or A
    wavelet::Band band;
    std::vector<double> coefficients;
    std::vector<double> reconstruction;  ///< this band alone, all others zeroed
};

struct DecompositionReport {
    double sampling_rate_hz = 360.0;
    int levels = 3;
    std::vector<double> signal;
    std::vector<BandSeries> bands;  ///< D1..DL then A

    /// Energy of the band reconstruction over the signal energy.
    double energy_fraction(std::size_t band) const;
};

/// Throws InvalidInput unless the length is divisible by 2^levels.
DecompositionReport decomposition_report(std::span<const double> signal, double fs = 360.0, int levels = 3);

/// Writes band_<name>.csv for every band, coefficients.csv and, when
/// with_svg is set, decomposition.svg into dir. Returns the written paths.
std::vector<std::string> write_decomposition(const DecompositionReport& report, const std::string& dir,
                                             bool with_svg = true);
std::string decomposition_svg(const DecompositionReport& report);

}  // namespace wcae::eval
