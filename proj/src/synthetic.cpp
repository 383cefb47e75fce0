#include "wcae/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wcae/filters.hpp"
#include "wcae/rng.hpp"

namespace wcae::synth {

namespace {

struct Wave {
    double offset_s;
    double amplitude_mv;
    double width_s;
};

// Offsets relative to the R peak at 60 bpm; P and T positions scale with sqrt(RR).
constexpr Wave kWaves[] = {
    {-0.20, 0.15, 0.025},  // P
    {-0.035, -0.12, 0.010},  // Q
    {0.0, 1.10, 0.011},      // R
    {0.035, -0.25, 0.010},   // S
    {0.28, 0.30, 0.055},     // T
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

io::SignalRecord pseudo_ecg(const std::string& name, std::size_t length, double fs, std::uint64_t seed,
                            const EcgShape& shape) {
    if (length == 0) throw InvalidInput("pseudo_ecg: length must be positive");
    if (!(fs > 0.0)) throw InvalidInput("pseudo_ecg: fs must be positive");
    Rng rng(seed);
    io::SignalRecord r;
    r.name = name;
    r.sampling_rate_hz = fs;
    r.samples.assign(length, shape.baseline_mv);
    const double mean_rr = 60.0 / shape.heart_rate_bpm;
    const double duration = static_cast<double>(length) / fs;
    const double resp_hz = 0.25;
    double t_peak = rng.uniform(0.2, 0.2 + mean_rr);
    while (t_peak < duration + 1.0) {
        const double rr = mean_rr * (1.0 + shape.rr_jitter * rng.normal() + 0.03 * std::sin(kTwoPi * resp_hz * t_peak));
        const double stretch = std::sqrt(std::max(rr, 0.3));
        const double beat_gain = shape.amplitude_scale * (1.0 + 0.03 * rng.normal());
        for (const Wave& w : kWaves) {
            const double centre = t_peak + (std::abs(w.offset_s) > 0.1 ? w.offset_s * stretch : w.offset_s);
            const double width = std::abs(w.offset_s) > 0.1 ? w.width_s * stretch : w.width_s;
            const auto lo = static_cast<std::ptrdiff_t>(std::floor((centre - 5 * width) * fs));
            const auto hi = static_cast<std::ptrdiff_t>(std::ceil((centre + 5 * width) * fs));
            for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
                 i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(length) - 1); ++i) {
                const double d = (static_cast<double>(i) / fs - centre) / width;
                r.samples[static_cast<std::size_t>(i)] += beat_gain * w.amplitude_mv * std::exp(-0.5 * d * d);
            }
        }
        t_peak += std::max(rr, 0.3);
    }
    return r;
}

io::SignalRecord synthetic_noise(data::NoiseKind kind, std::size_t length, double fs, std::uint64_t seed) {
    if (length == 0) throw InvalidInput("synthetic_noise: length must be positive");
    Rng rng(seed);
    io::SignalRecord r;
    r.name = std::string("syn_") + data::noise_kind_name(kind);
    r.sampling_rate_hz = fs;
    r.samples.assign(length, 0.0);
    switch (kind) {
        case data::NoiseKind::BW: {
            for (int c = 0; c < 5; ++c) {
                const double f = rng.uniform(0.05, 0.7);
                const double a = rng.uniform(0.1, 0.5);
                const double ph = rng.uniform(0.0, kTwoPi);
                for (std::size_t i = 0; i < length; ++i)
                    r.samples[i] += a * std::sin(kTwoPi * f * static_cast<double>(i) / fs + ph);
            }
            break;
        }
        case data::NoiseKind::EM: {
            std::vector<double> white(length);
            for (double& v : white) v = rng.normal();
            const auto lp = filt::butterworth(2, std::min(10.0, 0.45 * fs), fs, filt::Response::LowPass);
            auto low = filt::sosfilt(lp, white);
            // Burst envelope: random on/off segments of 0.2-2 s.
            std::size_t i = 0;
            while (i < length) {
                const auto seg = static_cast<std::size_t>(rng.uniform(0.2, 2.0) * fs) + 1;
                const double level = rng.bernoulli(0.4) ? rng.uniform(1.0, 3.0) : 0.2;
                for (std::size_t j = i; j < std::min(length, i + seg); ++j) r.samples[j] = level * low[j];
                i += seg;
            }
            break;
        }
        case data::NoiseKind::MA: {
            std::vector<double> white(length);
            for (double& v : white) v = rng.normal();
            const auto hp = filt::butterworth(2, std::min(20.0, 0.2 * fs), fs, filt::Response::HighPass);
            auto band = filt::sosfilt(hp, white);
            if (fs > 2.0 * 150.0 / 0.9) band = filt::sosfilt(filt::butterworth(2, 150.0, fs, filt::Response::LowPass), band);
            for (std::size_t k = 0; k < length; ++k) r.samples[k] = 0.1 * band[k];
            break;
        }
    }
    return r;
}

std::vector<io::SignalRecord> synthetic_records(std::size_t count, double seconds, double fs, std::uint64_t seed) {
    std::vector<io::SignalRecord> out;
    const auto length = static_cast<std::size_t>(seconds * fs);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, 0x5e, i));
        EcgShape shape;
        shape.heart_rate_bpm = rng.uniform(55.0, 95.0);
        shape.amplitude_scale = rng.uniform(0.7, 1.4);
        shape.rr_jitter = rng.uniform(0.01, 0.06);
        char name[32];
        std::snprintf(name, sizeof name, "syn%02zu", i);
        out.push_back(pseudo_ecg(name, length, fs, rng.next_u64(), shape));
    }
    return out;
}

std::vector<data::NoiseSource> synthetic_noise_sources(double seconds, double fs, std::uint64_t seed) {
    const auto length = static_cast<std::size_t>(seconds * fs);
    std::vector<data::NoiseSource> out;
    for (auto kind : {data::NoiseKind::BW, data::NoiseKind::EM, data::NoiseKind::MA}) {
        out.push_back({kind, synthetic_noise(kind, length, fs, derive_seed(seed, 0x70, static_cast<std::uint64_t>(kind)))});
    }
    return out;
}

data::ExperimentData make_toy_dataset(const ToyConfig& cfg) {
    const std::size_t total = cfg.train + cfg.validation + cfg.test;
    if (cfg.train == 0 || cfg.validation == 0 || cfg.test == 0) {
        throw InvalidInput("make_toy_dataset: every role needs at least one window");
    }
    auto record = pseudo_ecg("toy", total * cfg.width, cfg.fs, derive_seed(cfg.seed, 0x7e));
    data::WindowSet set = data::extract_windows(record, cfg.width, {0.0, 100.0});
    const auto norm = data::normalize_per_record(set);

    data::ExperimentData out;
    out.records = {record.name};
    out.normalization = norm;
    out.train = {data::Role::Train, cfg.width, {}};
    out.validation = {data::Role::Validation, cfg.width, {}};
    out.test = {data::Role::Test, cfg.width, {}};
    Rng rng(derive_seed(cfg.seed, 0x7f));
    for (std::size_t i = 0; i < total; ++i) {
        const auto& w = set.windows[i];
        std::vector<double> white(cfg.width), slow(cfg.width), noise(cfg.width);
        for (double& v : white) v = rng.normal();
        const double f = rng.uniform(0.1, 1.0);
        const double ph = rng.uniform(0.0, kTwoPi);
        for (std::size_t k = 0; k < cfg.width; ++k)
            slow[k] = std::sqrt(2.0) * std::sin(kTwoPi * f * static_cast<double>(k) / cfg.fs + ph);
        // Equal power in both components before mixing.
        const double scale = std::sqrt(data::mean_power(white) / data::mean_power(slow));
        for (std::size_t k = 0; k < cfg.width; ++k) noise[k] = white[k] + scale * slow[k];

        data::NoisyPair p;
        p.record = w.record;
        p.start = w.start;
        p.noise = data::NoiseKind::MA;
        p.snr_db = cfg.snr_db;
        p.clean = w.samples;
        p.noisy = data::mix_noise(w.samples, noise, cfg.snr_db);
        auto& dest = i < cfg.train ? out.train : i < cfg.train + cfg.validation ? out.validation : out.test;
        dest.pairs.push_back(std::move(p));
    }
    return out;
}

}  // namespace wcae::synth
