#include "wcae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "wcae/binary_io.hpp"
#include "wcae/filters.hpp"
#include "wcae/rng.hpp"

namespace wcae::data {

SignalRecord preprocess_reference(const SignalRecord& record) {
    record.validate();
    const double fs = record.sampling_rate_hz;
    if (!(fs > 200.0)) {
        throw InvalidInput("preprocess_reference: record " + record.name + " has fs " + std::to_string(fs) +
                           " Hz; the 100 Hz low-pass needs fs > 200 Hz");
    }
    static const auto hp = filt::butterworth(5, 0.67, 360.0, filt::Response::HighPass);
    static const auto lp = filt::butterworth(5, 100.0, 360.0, filt::Response::LowPass);
    const bool standard = fs == 360.0;
    const auto hp_sos = standard ? hp : filt::butterworth(5, 0.67, fs, filt::Response::HighPass);
    const auto lp_sos = standard ? lp : filt::butterworth(5, 100.0, fs, filt::Response::LowPass);

    SignalRecord out;
    out.name = record.name;
    out.sampling_rate_hz = fs;
    // Edge padding of three high-pass periods keeps the slow start-up transient
    // out of the record; the filters' default padding is far too short at 0.67 Hz.
    const int pad = static_cast<int>(std::min<double>(3.0 * std::ceil(fs / 0.67), record.samples.size() - 1.0));
    out.samples = filt::moving_average(
        filt::sosfiltfilt(lp_sos, filt::sosfiltfilt(hp_sos, record.samples, pad, filt::PadMode::Even), pad), 5);
    return out;
}

const char* role_name(Role r) {
    switch (r) {
        case Role::Train: return "train";
        case Role::Validation: return "validation";
        case Role::Test: return "test";
    }
    return "?";
}

void WindowSet::validate() const {
    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto& w : windows) {
        if (w.samples.size() != width) {
            throw InvalidInput("window " + w.record + "@" + std::to_string(w.start) + " has " +
                               std::to_string(w.samples.size()) + " samples, expected " + std::to_string(width));
        }
        if (!seen.emplace(w.record, w.start).second) {
            throw InvalidInput("duplicate window " + w.record + "@" + std::to_string(w.start));
        }
    }
}

double mean_power(std::span<const double> x) {
    if (x.empty()) throw InvalidInput("mean_power: empty input");
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(x.size());
}

WindowSet extract_windows(const SignalRecord& record, std::size_t width, RejectionRule rule, std::size_t first,
                          std::optional<std::size_t> last) {
    if (width == 0) throw InvalidInput("extract_windows: width must be positive");
    if (!(rule.lower_percent >= 0.0 && rule.lower_percent <= rule.upper_percent && rule.upper_percent <= 100.0)) {
        throw InvalidInput("extract_windows: percentiles must satisfy 0 <= lower <= upper <= 100");
    }
    const std::size_t end = std::min(last.value_or(record.samples.size()), record.samples.size());
    if (end < first || end - first < width) {
        throw InvalidInput("extract_windows: record " + record.name + " range [" + std::to_string(first) + ", " +
                           std::to_string(end) + ") is shorter than one window of " + std::to_string(width));
    }
    const std::size_t n = (end - first) / width;
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) {
        power[i] = mean_power(std::span(record.samples).subspan(first + i * width, width));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return power[a] < power[b]; });
    const auto drop_low = static_cast<std::size_t>(std::floor(static_cast<double>(n) * rule.lower_percent / 100.0));
    const auto drop_high =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * (100.0 - rule.upper_percent) / 100.0));
    std::vector<bool> keep(n, false);
    for (std::size_t r = drop_low; r + drop_high < n; ++r) keep[order[r]] = true;

    WindowSet set;
    set.width = width;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        const std::size_t s = first + i * width;
        const auto begin = record.samples.begin() + static_cast<std::ptrdiff_t>(s);
        set.windows.push_back({record.name, s, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(width))});
    }
    return set;
}

std::map<std::string, NormalizationParams> normalize_per_record(WindowSet& set) {
    if (set.windows.empty()) throw InvalidInput("normalize_per_record: empty window set");
    std::map<std::string, NormalizationParams> params;
    for (const auto& w : set.windows) {
        auto [it, fresh] = params.try_emplace(w.record, NormalizationParams{w.samples.at(0), w.samples.at(0)});
        for (double v : w.samples) {
            it->second.min = std::min(it->second.min, v);
            it->second.max = std::max(it->second.max, v);
        }
    }
    for (const auto& [name, p] : params) {
        if (!(p.max > p.min)) throw InvalidInput("normalize_per_record: record " + name + " is constant");
    }
    for (auto& w : set.windows) {
        const auto& p = params.at(w.record);
        for (double& v : w.samples) v = p.apply(v);
    }
    return params;
}

void denormalize(WindowSet& set, const std::map<std::string, NormalizationParams>& params) {
    for (auto& w : set.windows) {
        const auto it = params.find(w.record);
        if (it == params.end()) throw InvalidInput("denormalize: no parameters for record " + w.record);
        for (double& v : w.samples) v = it->second.invert(v);
    }
}

std::vector<double> mix_noise(std::span<const double> clean, std::span<const double> noise, double target_snr_db) {
    if (clean.size() != noise.size()) {
        throw InvalidInput("mix_noise: clean has " + std::to_string(clean.size()) + " samples, noise " +
                           std::to_string(noise.size()));
    }
    if (!std::isfinite(target_snr_db)) throw InvalidInput("mix_noise: target SNR must be finite");
    const double pc = mean_power(clean);
    const double pn = mean_power(noise);
    if (pn == 0.0) throw InvalidInput("mix_noise: noise has zero power");
    const double alpha = std::sqrt(pc / (pn * std::pow(10.0, target_snr_db / 10.0)));
    std::vector<double> out(clean.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = clean[i] + alpha * noise[i];
    return out;
}

double achieved_snr_db(std::span<const double> clean, std::span<const double> noisy) {
    if (clean.size() != noisy.size()) throw InvalidInput("achieved_snr_db: length mismatch");
    double pc = 0.0, pe = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        pc += clean[i] * clean[i];
        const double e = noisy[i] - clean[i];
        pe += e * e;
    }
    return 10.0 * std::log10(pc / pe);
}

const char* noise_kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::BW: return "bw";
        case NoiseKind::EM: return "em";
        case NoiseKind::MA: return "ma";
    }
    return "?";
}

NoiseKind parse_noise_kind(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "bw") return NoiseKind::BW;
    if (t == "em") return NoiseKind::EM;
    if (t == "ma") return NoiseKind::MA;
    throw InvalidInput("unknown noise kind '" + text + "' (expected bw, em or ma)");
}

namespace {

Tensor3 gather(const PairSet& set, std::span<const std::size_t> indices, bool noisy) {
    if (indices.empty()) throw InvalidInput("PairSet: empty batch");
    Tensor3 t(indices.size(), set.width, 1);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& p = set.pairs.at(indices[b]);
        const auto& src = noisy ? p.noisy : p.clean;
        std::copy(src.begin(), src.end(), t.item(b));
    }
    return t;
}

std::vector<std::size_t> all_indices(const PairSet& set) {
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

Tensor3 PairSet::clean_batch(std::span<const std::size_t> indices) const { return gather(*this, indices, false); }
Tensor3 PairSet::noisy_batch(std::span<const std::size_t> indices) const { return gather(*this, indices, true); }
Tensor3 PairSet::clean_tensor() const { return clean_batch(all_indices(*this)); }
Tensor3 PairSet::noisy_tensor() const { return noisy_batch(all_indices(*this)); }

std::vector<double> PairSet::snr_values() const {
    std::vector<double> out;
    for (const auto& p : pairs) {
        if (std::find(out.begin(), out.end(), p.snr_db) == out.end()) out.push_back(p.snr_db);
    }
    return out;
}

std::vector<std::size_t> PairSet::indices_at_snr(double snr_db) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (pairs[i].snr_db == snr_db) out.push_back(i);
    return out;
}

void DatasetConfig::validate() const {
    if (window == 0) throw InvalidInput("dataset config: window must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidInput("dataset config: train_fraction must lie in (0, 1)");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw InvalidInput("dataset config: validation_fraction must lie in (0, 1)");
    }
    if (train_per_record == 0) throw InvalidInput("dataset config: train_per_record must be >= 1");
    if (snr_train.empty() || snr_eval.empty()) throw InvalidInput("dataset config: SNR sets must not be empty");
    for (double s : snr_train)
        if (!std::isfinite(s)) throw InvalidInput("dataset config: non-finite training SNR");
    for (double s : snr_eval)
        if (!std::isfinite(s)) throw InvalidInput("dataset config: non-finite evaluation SNR");
}

std::uint64_t name_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t { kSelectTrain = 1, kSelectValidation = 2, kSelectTest = 3, kPairNoise = 4 };

struct NoiseRegion {
    const NoiseSource* source;
    std::size_t first;
    std::size_t last;
};

std::vector<std::size_t> choose(std::size_t pool, std::size_t count, Rng& rng) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(std::span(idx));
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<double> renormalize(std::vector<double> x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double mn = *lo, mx = *hi;
    if (mx > mn)
        for (double& v : x) v = (v - mn) / (mx - mn);
    return x;
}

NoisyPair make_pair(const Window& w, const std::vector<std::vector<NoiseRegion>>& regions_by_kind, double snr,
                    Rng& rng, bool renorm) {
    // Kinds without a source are skipped; the draw is over available kinds.
    std::vector<std::size_t> kinds;
    for (std::size_t k = 0; k < regions_by_kind.size(); ++k)
        if (!regions_by_kind[k].empty()) kinds.push_back(k);
    const auto kind = kinds[rng.below(kinds.size())];
    const auto& regions = regions_by_kind[kind];
    const NoiseRegion& region = regions[rng.below(regions.size())];
    const std::size_t span_len = region.last - region.first - w.samples.size() + 1;
    const std::size_t offset = region.first + rng.below(span_len);
    const auto& noise = region.source->record.samples;
    NoisyPair p;
    p.record = w.record;
    p.start = w.start;
    p.noise = static_cast<NoiseKind>(kind);
    p.noise_offset = offset;
    p.snr_db = snr;
    p.clean = w.samples;
    p.noisy = mix_noise(w.samples, std::span(noise).subspan(offset, w.samples.size()), snr);
    if (renorm) p.noisy = renormalize(std::move(p.noisy));
    return p;
}

}  // namespace

ExperimentData build_experiment_dataset(const std::vector<SignalRecord>& records,
                                        const std::vector<NoiseSource>& noise, const DatasetConfig& cfg,
                                        std::uint64_t seed) {
    cfg.validate();
    if (records.empty()) throw InvalidInput("build_experiment_dataset: no records");
    if (noise.empty()) throw InvalidInput("build_experiment_dataset: no noise sources");

    // Noise regions: [0, cut) for training roles, [cut, end) for test.
    std::vector<std::vector<NoiseRegion>> train_noise(3), test_noise(3);
    for (const auto& src : noise) {
        src.record.validate();
        const std::size_t n = src.record.samples.size();
        const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.train_fraction));
        if (cut < cfg.window || n - cut < cfg.window) {
            throw ShortageError("noise record " + src.record.name + " (" + std::to_string(n) +
                                " samples) cannot supply one window to both splits");
        }
        const auto k = static_cast<std::size_t>(src.kind);
        train_noise[k].push_back({&src, 0, cut});
        test_noise[k].push_back({&src, cut, n});
    }

    std::vector<const SignalRecord*> order;
    std::set<std::string> names;
    ExperimentData out;
    for (const auto& r : records) {
        if (!names.insert(r.name).second) throw InvalidInput("build_experiment_dataset: duplicate record " + r.name);
        if (std::find(cfg.exclude.begin(), cfg.exclude.end(), r.name) != cfg.exclude.end()) {
            out.excluded.push_back(r.name);
            continue;
        }
        order.push_back(&r);
    }
    if (order.empty()) throw InvalidInput("build_experiment_dataset: every record is excluded");
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->name < b->name; });
    std::sort(out.excluded.begin(), out.excluded.end());

    out.train = {Role::Train, cfg.window, {}};
    out.validation = {Role::Validation, cfg.window, {}};
    out.test = {Role::Test, cfg.window, {}};

    for (const SignalRecord* rec : order) {
        const SignalRecord r = cfg.preprocess ? preprocess_reference(*rec) : *rec;
        r.validate();
        const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(r.samples.size()) * cfg.train_fraction));
        if (cut < cfg.window || r.samples.size() - cut < cfg.window) {
            throw ShortageError("record " + r.name + " (" + std::to_string(r.samples.size()) +
                                " samples) cannot supply one window to both splits");
        }
        WindowSet head = extract_windows(r, cfg.window, cfg.rejection, 0, cut);
        WindowSet tail = extract_windows(r, cfg.window, cfg.rejection, cut);

        WindowSet both;
        both.width = cfg.window;
        both.windows = head.windows;
        both.windows.insert(both.windows.end(), tail.windows.begin(), tail.windows.end());
        const auto norm = normalize_per_record(both).at(r.name);
        out.normalization[r.name] = norm;
        auto apply = [&](WindowSet& s) {
            for (auto& w : s.windows)
                for (double& v : w.samples) v = norm.apply(v);
        };
        apply(head);
        apply(tail);

        const std::size_t n_head = head.windows.size();
        const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n_head) * cfg.validation_fraction));
        const std::size_t n_train = n_head - n_val;
        if (n_train < cfg.train_per_record || n_val < cfg.validation_per_record) {
            throw ShortageError("record " + r.name + ": " + std::to_string(n_train) + " training and " +
                                std::to_string(n_val) + " validation windows retained, need " +
                                std::to_string(cfg.train_per_record) + " and " +
                                std::to_string(cfg.validation_per_record));
        }
        const std::size_t n_test = cfg.test_per_record == 0 ? tail.windows.size() : cfg.test_per_record;
        if (tail.windows.size() < n_test) {
            throw ShortageError("record " + r.name + ": " + std::to_string(tail.windows.size()) +
                                " test windows retained, need " + std::to_string(n_test));
        }

        const std::uint64_t key = name_hash(r.name);
        Rng sel_train(derive_seed(seed, kSelectTrain, key));
        Rng sel_val(derive_seed(seed, kSelectValidation, key));
        Rng sel_test(derive_seed(seed, kSelectTest, key));
        const auto train_idx = choose(n_train, cfg.train_per_record, sel_train);
        const auto val_idx = choose(n_val, cfg.validation_per_record, sel_val);
        const auto test_idx = choose(tail.windows.size(), n_test, sel_test);

        auto pair_rng = [&](Role role, std::size_t start, std::size_t snr_index) {
            return Rng(derive_seed(seed, kPairNoise, key, static_cast<std::uint64_t>(role), start, snr_index));
        };
        auto train_snr = [&](Rng& rng) { return cfg.snr_train[rng.below(cfg.snr_train.size())]; };

        for (std::size_t i : train_idx) {
            const Window& w = head.windows[i];
            Rng rng = pair_rng(Role::Train, w.start, 0);
            const double snr = train_snr(rng);
            out.train.pairs.push_back(make_pair(w, train_noise, snr, rng, cfg.renormalize_noisy));
        }
        for (std::size_t i : val_idx) {
            const Window& w = head.windows[n_train + i];
            Rng rng = pair_rng(Role::Validation, w.start, 0);
            const double snr = train_snr(rng);
            out.validation.pairs.push_back(make_pair(w, train_noise, snr, rng, cfg.renormalize_noisy));
        }
        for (std::size_t s = 0; s < cfg.snr_eval.size(); ++s) {
            for (std::size_t i : test_idx) {
                const Window& w = tail.windows[i];
                Rng rng = pair_rng(Role::Test, w.start, s);
                out.test.pairs.push_back(make_pair(w, test_noise, cfg.snr_eval[s], rng, cfg.renormalize_noisy));
            }
        }
        out.records.push_back(r.name);
    }
    return out;
}

namespace {
constexpr std::string_view kPairMagic = "WCAEPAIR";
constexpr std::uint32_t kPairVersion = 1;
}  // namespace

std::string serialize_pairs(const PairSet& set) {
    ByteWriter w;
    w.bytes(kPairMagic);
    w.u32(kPairVersion);
    w.u8(static_cast<std::uint8_t>(set.role));
    w.u64(set.width);
    w.u64(set.pairs.size());
    for (const auto& p : set.pairs) {
        if (p.clean.size() != set.width || p.noisy.size() != set.width) {
            throw InvalidInput("serialize_pairs: pair " + p.record + "@" + std::to_string(p.start) +
                               " does not match the set width");
        }
        w.str(p.record);
        w.u64(p.start);
        w.u8(static_cast<std::uint8_t>(p.noise));
        w.u64(p.noise_offset);
        w.f64(p.snr_db);
        for (double v : p.clean) w.f64(v);
        for (double v : p.noisy) w.f64(v);
    }
    return w.take();
}

PairSet deserialize_pairs(std::string_view bytes, const std::string& context) {
    ByteReader r(bytes, context);
    if (r.bytes(kPairMagic.size()) != kPairMagic) throw ParseError(context + ": bad magic", 0);
    const auto version_at = r.offset();
    if (const auto v = r.u32(); v != kPairVersion) {
        throw ParseError(context + ": unsupported version " + std::to_string(v), version_at);
    }
    PairSet set;
    const auto role = r.u8();
    if (role > 2) r.fail("bad role tag " + std::to_string(role));
    set.role = static_cast<Role>(role);
    set.width = r.u64();
    if (set.width == 0) r.fail("zero window width");
    const auto n = r.u64();
    // Each pair needs at least the fixed fields plus two windows.
    if (n > r.remaining() / (2 * 8 * set.width + 29)) r.fail("pair count exceeds file size");
    set.pairs.resize(n);
    for (auto& p : set.pairs) {
        p.record = r.str();
        p.start = r.u64();
        const auto kind = r.u8();
        if (kind > 2) r.fail("bad noise kind tag " + std::to_string(kind));
        p.noise = static_cast<NoiseKind>(kind);
        p.noise_offset = r.u64();
        p.snr_db = r.f64();
        p.clean.resize(set.width);
        p.noisy.resize(set.width);
        for (double& v : p.clean) v = r.f64();
        for (double& v : p.noisy) v = r.f64();
    }
    if (!r.at_end()) r.fail("trailing bytes");
    return set;
}

void save_pairs(const std::string& path, const PairSet& set) { write_file(path, serialize_pairs(set)); }

PairSet load_pairs(const std::string& path) { return deserialize_pairs(read_file(path), path); }

}  // namespace wcae::data
