#pragma once

// Reference preprocessing, windowing with power-percentile rejection,
// per-record min-max normalization, SNR-calibrated noise mixing and the
// seeded train/validation/test protocol.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wcae/signal_io.hpp"
#include "wcae/tensor.hpp"

namespace wcae::data {

using io::SignalRecord;

/// High-pass 0.67 Hz and low-pass 100 Hz (5th-order Butterworth, each run
/// forward-backward) followed by a width-5 moving average. Requires
/// fs > 200 Hz so the low-pass cutoff is below Nyquist.
SignalRecord preprocess_reference(const SignalRecord& record);

enum class Role { Train, Validation, Test };
const char* role_name(Role r);

struct Window {
    std::string record;
    std::size_t start = 0;  ///< sample index in the source record
    std::vector<double> samples;
};

struct WindowSet {
    Role role = Role::Train;
    std::size_t width = 1024;
    std::vector<Window> windows;

    /// Every window has `width` samples and (record, start) pairs are unique.
    void validate() const;
};

/// Mean square of the samples.
double mean_power(std::span<const double> x);

/// Windows are ranked by power (ties by position). floor(n * lower / 100)
/// lowest-ranked and floor(n * (100 - upper) / 100) highest-ranked windows
/// are discarded; the rest are kept in temporal order.
struct RejectionRule {
    double lower_percent = 5.0;
    double upper_percent = 95.0;
};

/// Non-overlapping windows tiled over samples [first, last) of the record.
/// Throws InvalidInput if that range is shorter than one window.
WindowSet extract_windows(const SignalRecord& record, std::size_t width = 1024, RejectionRule rule = {},
                          std::size_t first = 0, std::optional<std::size_t> last = std::nullopt);

struct NormalizationParams {
    double min = 0.0;
    double max = 1.0;

    double apply(double v) const { return (v - min) / (max - min); }
    double invert(double v) const { return v * (max - min) + min; }
};

/// Min-max to [0, 1] per record name, using the extremes over that record's
/// windows in the set. Throws InvalidInput for an empty set or a constant record.
std::map<std::string, NormalizationParams> normalize_per_record(WindowSet& set);
void denormalize(WindowSet& set, const std::map<std::string, NormalizationParams>& params);

/// clean + alpha * noise with alpha = sqrt(P_clean / (P_noise * 10^(snr/10))).
std::vector<double> mix_noise(std::span<const double> clean, std::span<const double> noise, double target_snr_db);
/// 10 log10(P_clean / P(noisy - clean)).
double achieved_snr_db(std::span<const double> clean, std::span<const double> noisy);

enum class NoiseKind : std::uint8_t { BW = 0, EM = 1, MA = 2 };
const char* noise_kind_name(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& text);

struct NoiseSource {
    NoiseKind kind = NoiseKind::BW;
    SignalRecord record;
};

struct NoisyPair {
    std::string record;
    std::size_t start = 0;
    NoiseKind noise = NoiseKind::BW;
    std::size_t noise_offset = 0;
    double snr_db = 0.0;
    std::vector<double> clean;
    std::vector<double> noisy;
};

struct PairSet {
    Role role = Role::Train;
    std::size_t width = 1024;
    std::vector<NoisyPair> pairs;

    std::size_t size() const { return pairs.size(); }
    Tensor3 clean_batch(std::span<const std::size_t> indices) const;
    Tensor3 noisy_batch(std::span<const std::size_t> indices) const;
    Tensor3 clean_tensor() const;
    Tensor3 noisy_tensor() const;
    /// Distinct SNR values in first-appearance order.
    std::vector<double> snr_values() const;
    /// Indices of pairs mixed at exactly this SNR.
    std::vector<std::size_t> indices_at_snr(double snr_db) const;
};

struct DatasetConfig {
    std::size_t window = 1024;
    RejectionRule rejection;
    double train_fraction = 0.9;       ///< temporal split point of each record
    double validation_fraction = 0.2;  ///< tail of the training windows
    std::size_t train_per_record = 160;
    std::size_t validation_per_record = 40;
    std::size_t test_per_record = 0;  ///< 0 keeps every retained test window
    std::vector<double> snr_train{-2.5, 0.0, 2.5, 5.0, 7.5};
    std::vector<double> snr_eval{-10.0, -7.0, -3.0, -1.0, 3.0, 7.0, 10.0};
    std::vector<std::string> exclude{"102", "104"};
    bool preprocess = true;
    bool renormalize_noisy = false;

    void validate() const;
};

struct ExperimentData {
    PairSet train;
    PairSet validation;
    PairSet test;
    std::vector<std::string> records;   ///< used, sorted
    std::vector<std::string> excluded;  ///< present in the input but skipped
    std::map<std::string, NormalizationParams> normalization;
};

/// Records are processed in name order. Each record is preprocessed, cut at
/// train_fraction, windowed per segment and normalized with the extremes of
/// all its retained windows. The last validation_fraction of the training
/// windows form the validation pool. train_per_record / validation_per_record
/// windows are drawn without replacement from each pool (ShortageError names
/// the record when a pool is too small). Noise sources are cut at the same
/// fraction; training and validation pairs take noise from the first part,
/// test pairs from the rest. Each pair draws a noise kind, an offset and (for
/// training roles) an SNR from the configured set. Every retained test window
/// is mixed once per evaluation SNR.
ExperimentData build_experiment_dataset(const std::vector<SignalRecord>& records,
                                        const std::vector<NoiseSource>& noise, const DatasetConfig& cfg,
                                        std::uint64_t seed);

/// Binary pair-set file ("WCAEPAIR", version 1).
std::string serialize_pairs(const PairSet& set);
PairSet deserialize_pairs(std::string_view bytes, const std::string& context = "pair set");
void save_pairs(const std::string& path, const PairSet& set);
PairSet load_pairs(const std::string& path);

/// FNV-1a of the text; used to key per-record random streams.
std::uint64_t name_hash(std::string_view text);

}  // namespace wcae::data
