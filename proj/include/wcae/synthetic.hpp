#pragma once

// Synthetic stand-ins for ECG records and the three noise types, so the
// whole pipeline can run without external data.

#include <cstdint>
#include <string>
#include <vector>

#include "wcae/dataset.hpp"

namespace wcae::synth {

struct EcgShape {
    double heart_rate_bpm = 70.0;
    double rr_jitter = 0.04;        ///< relative standard deviation of RR intervals
    double amplitude_scale = 1.0;   ///< multiplies every wave
    double baseline_mv = 0.0;
};

/// Sum-of-Gaussians P-QRS-T beats (smallest width 10 ms, so the content
/// is concentrated below about 40 Hz), in millivolts.
io::SignalRecord pseudo_ecg(const std::string& name, std::size_t length, double fs, std::uint64_t seed,
                            const EcgShape& shape = {});

/// BW: slow sinusoid mixture below 0.7 Hz. EM: low-passed bursts below
/// 10 Hz. MA: white noise band-passed to 20-150 Hz (capped below Nyquist).
io::SignalRecord synthetic_noise(data::NoiseKind kind, std::size_t length, double fs, std::uint64_t seed);

/// `count` records named syn00, syn01, ... with seeded heart rate and
/// amplitude variation.
std::vector<io::SignalRecord> synthetic_records(std::size_t count, double seconds, double fs, std::uint64_t seed);
/// One source per noise kind.
std::vector<data::NoiseSource> synthetic_noise_sources(double seconds, double fs, std::uint64_t seed);

struct ToyConfig {
    std::size_t train = 160;
    std::size_t validation = 20;
    std::size_t test = 20;
    std::size_t width = 1024;
    double snr_db = 0.0;
    double fs = 360.0;
    std::uint64_t seed = 0;
};

/// One pseudo-ECG record of (train + validation + test) consecutive windows,
/// min-max normalized, each window mixed with an equal-power sum of white
/// Gaussian noise and a 0.1-1 Hz sinusoid at snr_db. Windows are assigned to
/// train, validation and test in temporal order.
data::ExperimentData make_toy_dataset(const ToyConfig& cfg);

}  // namespace wcae::synth
