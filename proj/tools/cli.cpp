#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wcae/binary_io.hpp"
#include "wcae/checkpoint.hpp"
#include "wcae/error.hpp"
#include "wcae/evaluation.hpp"
#include "wcae/rng.hpp"
#include "wcae/synthetic.hpp"
#include "wcae/training.hpp"

namespace wcae::cli {

namespace fs = std::filesystem;

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const std::size_t offset = pos;
        pos = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", offset);
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", offset);
        out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw InvalidInput("--" + key + ": '" + text + "' is not a number");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw InvalidInput("--" + key + ": '" + text + "' is not a non-negative integer");
    return v;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split_list(text)) out.push_back(to_double(key, s));
    return out;
}

bool to_bool(const std::string& key, const std::string& text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw InvalidInput(key + ": '" + text + "' is not a boolean");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

// Options of one subcommand. Every option is kept as text (or a bool for
// flags) so config-file values can fill whatever the command line left unset.
class Params {
public:
    Params(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {}

    void value(const std::string& name, std::string fallback, const std::string& help) {
        auto& slot = values_[name];
        slot = std::move(fallback);
        options_[name] = app_->add_option("--" + name, slot, help);
    }
    void list(const std::string& name, const std::string& help) {
        auto& slot = lists_[name];
        options_[name] = app_->add_option("--" + name, slot, help);
    }
    void flag(const std::string& name, const std::string& help) {
        auto& slot = flags_[name];
        slot = false;
        options_[name] = app_->add_flag("--" + name, slot, help);
    }

    CLI::App* app() const { return app_; }
    const std::string& command() const { return command_; }

    // Config keys are option names without the dashes.
    void apply_config() {
        const std::string& path = values_.at("config");
        if (path.empty()) return;
        std::map<std::string, std::string> kv;
        try {
            kv = parse_key_values(read_file(path));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.message(), e.offset());
        }
        for (const auto& [key, v] : kv) {
            const auto it = options_.find(key);
            if (it == options_.end() || key == "config") {
                throw InvalidInput(path + ": unknown key '" + key + "' for " + command_);
            }
            if (it->second->count() > 0) continue;
            if (flags_.count(key)) {
                flags_[key] = to_bool(key, v);
            } else if (lists_.count(key)) {
                lists_[key] = split_list(v);
            } else {
                values_[key] = v;
            }
        }
    }

    const std::string& str(const std::string& name) const { return values_.at(name); }
    bool has(const std::string& name) const { return !values_.at(name).empty(); }
    double num(const std::string& name) const { return to_double(name, str(name)); }
    std::uint64_t u64(const std::string& name) const { return to_u64(name, str(name)); }
    std::size_t size(const std::string& name) const { return static_cast<std::size_t>(u64(name)); }
    std::vector<double> nums(const std::string& name) const { return to_doubles(name, str(name)); }
    bool on(const std::string& name) const { return flags_.at(name); }
    std::vector<std::string> items(const std::string& name) const {
        std::vector<std::string> out;
        for (const auto& s : lists_.at(name))
            for (auto& t : split_list(s)) out.push_back(std::move(t));
        return out;
    }

private:
    CLI::App* app_;
    std::string command_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::vector<std::string>> lists_;
    std::map<std::string, bool> flags_;
    std::map<std::string, CLI::Option*> options_;
};

void add_common(Params& p) {
    p.value("config", "", "key = value file; command-line flags take precedence");
    p.value("seed", "0", "master seed");
    p.value("out", "runs", "output root directory");
    p.value("threads", "1", "worker threads for evaluation and batch assembly");
    p.flag("deterministic", "write wall times as 0 so reruns are byte-identical");
    p.value("run-id", "", "output subfolder suffix (default: UTC timestamp)");
}

void add_data_options(Params& p) {
    p.list("records", "input records (.hea, .csv or raw float files)");
    p.list("noise", "noise sources as KIND=PATH with KIND in bw, em, ma");
    p.value("synthetic", "0", "generate this many pseudo-ECG records instead of reading --records");
    p.value("synthetic-seconds", "1805", "length of each synthetic record and noise source");
    p.value("fs", "360", "sampling rate of synthetic records in Hz");
    p.flag("toy", "use the single-record toy dataset");
    p.value("window", "1024", "window length in samples");
    p.value("train-per-record", "160", "training windows drawn per record");
    p.value("validation-per-record", "40", "validation windows drawn per record");
    p.value("test-per-record", "0", "test windows per record (0 keeps all)");
    p.value("train-fraction", "0.9", "temporal split point of each record");
    p.value("validation-fraction", "0.2", "tail of the training segment used for validation");
    p.value("snr-train", "-2.5,0,2.5,5,7.5", "training SNR set in dB");
    p.value("snr-eval", "-10,-7,-3,-1,3,7,10", "evaluation SNR set in dB");
    p.value("exclude", "102,104", "record names to skip ('none' for no exclusions)");
    p.value("preprocess", "true", "filter clean references before windowing");
}

void add_train_options(Params& p) {
    p.value("epochs", "200", "training epochs");
    p.value("batch-size", "200", "mini-batch size");
    p.value("learning-rate", "1e-4", "Adam step size");
}

std::string stamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path run_dir(const Params& p) {
    const std::string id = p.has("run-id") ? p.str("run-id") : stamp();
    fs::path dir = fs::path(p.str("out")) / (p.command() + "-" + id);
    fs::create_directories(dir);
    return dir;
}

unsigned threads(const Params& p) {
    const auto n = p.u64("threads");
    if (n == 0) throw InvalidInput("--threads must be >= 1");
    return static_cast<unsigned>(n);
}

template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.message(), e.offset());
    } catch (const std::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

io::SignalRecord load_record(const std::string& path) {
    if (!fs::exists(path)) throw InvalidInput(path + ": no such file");
    return with_path(path, [&] { return io::load_signal(path); });
}

data::DatasetConfig dataset_config(const Params& p) {
    data::DatasetConfig cfg;
    cfg.window = p.size("window");
    cfg.train_per_record = p.size("train-per-record");
    cfg.validation_per_record = p.size("validation-per-record");
    cfg.test_per_record = p.size("test-per-record");
    cfg.train_fraction = p.num("train-fraction");
    cfg.validation_fraction = p.num("validation-fraction");
    cfg.snr_train = p.nums("snr-train");
    cfg.snr_eval = p.nums("snr-eval");
    cfg.exclude = split_list(p.str("exclude"));
    if (cfg.exclude.size() == 1 && cfg.exclude[0] == "none") cfg.exclude.clear();
    cfg.preprocess = to_bool("preprocess", p.str("preprocess"));
    cfg.validate();
    return cfg;
}

struct Prepared {
    std::string source;
    data::ExperimentData data;
    std::vector<double> snr_train;
    std::vector<double> snr_eval;
};

Prepared build_data(const Params& p, std::uint64_t seed) {
    const data::DatasetConfig cfg = dataset_config(p);
    if (p.on("toy")) {
        synth::ToyConfig toy;
        toy.width = cfg.window;
        toy.seed = seed;
        return {"toy", synth::make_toy_dataset(toy), {toy.snr_db}, {toy.snr_db}};
    }
    const std::size_t n_synth = p.size("synthetic");
    const auto record_paths = p.items("records");
    std::vector<io::SignalRecord> records;
    std::string source;
    const double fs = p.num("fs");
    const double seconds = p.num("synthetic-seconds");
    if (n_synth > 0) {
        if (!record_paths.empty()) throw InvalidInput("--synthetic and --records are mutually exclusive");
        records = synth::synthetic_records(n_synth, seconds, fs, derive_seed(seed, 0x5e1));
        source = "synthetic";
    } else {
        if (record_paths.empty()) throw InvalidInput("no input records (use --records, --synthetic or --toy)");
        for (const auto& path : record_paths) records.push_back(load_record(path));
        source = "records";
    }
    std::vector<data::NoiseSource> noise;
    for (const auto& item : p.items("noise")) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidInput("--noise expects KIND=PATH, got '" + item + "'");
        noise.push_back({data::parse_noise_kind(item.substr(0, eq)), load_record(item.substr(eq + 1))});
    }
    if (noise.empty()) {
        if (n_synth == 0) throw InvalidInput("no noise sources (use --noise KIND=PATH)");
        noise = synth::synthetic_noise_sources(seconds, fs, derive_seed(seed, 0x5e2));
    }
    return {source, data::build_experiment_dataset(records, noise, cfg, seed), cfg.snr_train, cfg.snr_eval};
}

const char* pair_file(data::Role r) {
    switch (r) {
        case data::Role::Train: return "train.pairs";
        case data::Role::Validation: return "validation.pairs";
        case data::Role::Test: return "test.pairs";
    }
    return "";
}

std::string manifest_text(const Prepared& prep, std::uint64_t seed) {
    const auto& d = prep.data;
    std::string m = "# wcae dataset manifest\n";
    m += "format = wcae-manifest\nversion = 1\n";
    m += "seed = " + std::to_string(seed) + "\n";
    m += "source = " + prep.source + "\n";
    m += "window = " + std::to_string(d.train.width) + "\n";
    m += "records = " + join(d.records) + "\n";
    m += "excluded = " + join(d.excluded) + "\n";
    m += "snr_train = " + join(prep.snr_train) + "\n";
    m += "snr_eval = " + join(prep.snr_eval) + "\n";
    for (const data::PairSet* set : {&d.train, &d.validation, &d.test}) {
        const std::string role = data::role_name(set->role);
        m += role + "_file = " + pair_file(set->role) + "\n";
        m += role + "_pairs = " + std::to_string(set->size()) + "\n";
    }
    for (const auto& [name, n] : d.normalization) m += "normalization." + name + " = " + fmt(n.min) + " " + fmt(n.max) + "\n";
    return m;
}

void write_tables(const fs::path& dir, const eval::MetricsReport& report) {
    write_file((dir / "report.csv").string(), eval::report_csv(report));
    for (auto m : eval::kMetrics) {
        write_file((dir / (std::string("table_") + eval::metric_name(m) + ".txt")).string(),
                   eval::report_table(report, m));
    }
}

arch::ModelSpec model_spec(const Params& p) {
    std::string v = p.str("variant");
    if (p.has("k")) {
        std::string low;
        for (char c : v) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (low != "forward" && low != "backward" && low != "f" && low != "b") {
            throw InvalidInput("--k applies to forward or backward variants, not '" + v + "'");
        }
        v += p.str("k");
    }
    return arch::parse_variant(v);
}

train::TrainConfig train_config(const Params& p) {
    train::TrainConfig tc;
    tc.epochs = p.size("epochs");
    tc.batch_size = p.size("batch-size");
    tc.learning_rate = p.num("learning-rate");
    tc.prefetch = threads(p) > 1;
    tc.validate();
    return tc;
}

// ---- subcommands ----

int cmd_prepare(const Params& p, std::ostream& out) {
    const std::uint64_t seed = p.u64("seed");
    const Prepared prep = build_data(p, seed);
    const fs::path dir = run_dir(p);
    for (const data::PairSet* set : {&prep.data.train, &prep.data.validation, &prep.data.test}) {
        data::save_pairs((dir / pair_file(set->role)).string(), *set);
    }
    write_file((dir / "manifest.txt").string(), manifest_text(prep, seed));
    out << "records: " << join(prep.data.records) << "\n"
        << "pairs: train " << prep.data.train.size() << ", validation " << prep.data.validation.size() << ", test "
        << prep.data.test.size() << "\n"
        << "manifest: " << (dir / "manifest.txt").string() << "\n";
    return 0;
}

int cmd_train(const Params& p, std::ostream& out) {
    const Manifest manifest = read_manifest(p.str("manifest"));
    const data::PairSet train_set = manifest.load(data::Role::Train);
    const data::PairSet val_set = manifest.load(data::Role::Validation);
    const std::uint64_t seed = p.u64("seed");

    arch::ModelSpec spec = model_spec(p);
    spec.input_length = train_set.width;
    spec.seed = derive_seed(seed, 0x1417);
    const arch::Network net = arch::build_model(spec);
    train::TrainConfig tc = train_config(p);
    tc.seed = derive_seed(seed, 0x7a17);
    tc.on_epoch = [&](std::size_t e, double tl, double vl) {
        out << "epoch " << e << "/" << tc.epochs << " train " << fmt(tl) << " val " << fmt(vl) << "\n";
    };
    train::TrainResult result = train::train(net, train_set, val_set, tc);

    const fs::path dir = run_dir(p);
    ckpt::save(result.best, (dir / "checkpoint.wcae").string());
    write_file((dir / "history.csv").string(), result.history.to_csv(p.on("deterministic")));
    write_file((dir / "trace.txt").string(), arch::describe_text(spec));
    out << "model " << spec.label() << ", best epoch " << result.history.epochs[result.history.best_index].epoch
        << ", val " << fmt(result.history.best_val_loss()) << "\n"
        << "checkpoint: " << (dir / "checkpoint.wcae").string() << "\n";
    return 0;
}

arch::Network load_checkpoint(const std::string& path) {
    if (!fs::exists(path)) throw InvalidInput(path + ": no such checkpoint");
    return with_path(path, [&] { return ckpt::load(path); });
}

int cmd_denoise(const Params& p, std::ostream& out) {
    const std::string input = p.str("input");
    if (p.has("output") && io::format_from_path(input) != io::format_from_path(p.str("output"))) {
        throw InvalidInput(p.str("output") + ": output format differs from input " + input);
    }
    const arch::Network net = load_checkpoint(p.str("checkpoint"));
    const io::SignalRecord rec = load_record(input);
    const std::size_t w = net.spec().input_length;
    const std::size_t n = rec.samples.size();
    if (n < w) {
        throw InvalidInput(input + ": " + std::to_string(n) + " samples, need at least " + std::to_string(w));
    }

    data::NormalizationParams norm;
    bool normalize = to_bool("normalize", p.str("normalize"));
    if (p.has("scale")) {
        const auto s = p.nums("scale");
        if (s.size() != 2 || !(s[1] > s[0])) throw InvalidInput("--scale expects MIN,MAX with MAX > MIN");
        norm = {s[0], s[1]};
        normalize = true;
    } else if (normalize) {
        const auto [lo, hi] = std::minmax_element(rec.samples.begin(), rec.samples.end());
        if (!(*hi > *lo)) throw InvalidInput(input + ": constant signal cannot be normalized");
        norm = {*lo, *hi};
    }

    // Full windows tile the signal; a trailing partial window is completed
    // by mirroring the signal about its last sample and trimmed afterwards.
    const std::size_t n_windows = (n + w - 1) / w;
    Tensor3 batch(n_windows, w, 1);
    for (std::size_t k = 0; k < n_windows; ++k) {
        for (std::size_t t = 0; t < w; ++t) {
            std::size_t i = k * w + t;
            if (i >= n) i = 2 * (n - 1) - i;
            const double v = rec.samples[i];
            batch(k, t, 0) = normalize ? norm.apply(v) : v;
        }
    }
    const Tensor3 y = net.infer(batch);

    io::SignalRecord result{rec.name + "_denoised", std::vector<double>(n), rec.sampling_rate_hz};
    std::string windows_csv = "window,start,valid_samples,rms_change\n";
    for (std::size_t k = 0; k < n_windows; ++k) {
        const std::size_t valid = std::min(w, n - k * w);
        double sq = 0.0;
        for (std::size_t t = 0; t < valid; ++t) {
            const double v = normalize ? norm.invert(y(k, t, 0)) : y(k, t, 0);
            result.samples[k * w + t] = v;
            sq += (v - rec.samples[k * w + t]) * (v - rec.samples[k * w + t]);
        }
        windows_csv += std::to_string(k) + "," + std::to_string(k * w) + "," + std::to_string(valid) + "," +
                       fmt(std::sqrt(sq / static_cast<double>(valid))) + "\n";
    }

    const fs::path dir = run_dir(p);
    const fs::path in_path(input);
    fs::path target = p.has("output") ? fs::path(p.str("output")) : dir / (in_path.stem().string() + "_denoised" +
                                                                           in_path.extension().string());
    if (io::format_from_path(target.string()) == io::SignalFormat::Wfdb) {
        const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
        fs::create_directories(parent);
        io::write_wfdb_physical(parent.string(), target.stem().string(), rec.sampling_rate_hz, {result.samples});
    } else {
        io::save_signal(target.string(), result);
    }
    if (p.on("windows-csv")) write_file((dir / "windows.csv").string(), windows_csv);
    out << n_windows << " windows, " << n << " samples -> " << target.string() << "\n";
    return 0;
}

int cmd_evaluate(const Params& p, std::ostream& out) {
    const auto paths = p.items("checkpoint");
    if (paths.empty()) throw InvalidInput("evaluate: no --checkpoint given");
    const Manifest manifest = read_manifest(p.str("manifest"));
    const data::PairSet test = manifest.load(data::Role::Test);
    const std::vector<double> snrs = p.has("snr") ? p.nums("snr") : manifest.snr_eval;

    eval::MetricsReport report;
    report.snr_columns = snrs;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const arch::Network net = load_checkpoint(paths[i]);
        const auto run = eval::evaluate_model(net, test, snrs, threads(p));
        report.rows.push_back(eval::aggregate_runs(std::to_string(i + 1), net.spec(), {run}));
    }
    const fs::path dir = run_dir(p);
    write_tables(dir, report);
    out << eval::report_table(report, eval::Metric::Rmse);
    return 0;
}

int cmd_decompose(const Params& p, std::ostream& out) {
    io::SignalRecord rec;
    if (p.has("input")) {
        rec = load_record(p.str("input"));
    } else if (p.has("manifest")) {
        const Manifest manifest = read_manifest(p.str("manifest"));
        const data::PairSet test = manifest.load(data::Role::Test);
        const std::size_t i = p.size("window");
        if (i >= test.size()) {
            throw InvalidInput("--window " + std::to_string(i) + " out of range (" + std::to_string(test.size()) +
                               " test windows)");
        }
        const std::string which = p.str("which");
        if (which != "clean" && which != "noisy") throw InvalidInput("--which must be clean or noisy");
        const auto& pair = test.pairs[i];
        rec = {pair.record, which == "clean" ? pair.clean : pair.noisy, p.num("fs")};
    } else {
        throw InvalidInput("decompose: give --input or --manifest");
    }
    const int levels = static_cast<int>(p.u64("levels"));
    if (levels < 1) throw InvalidInput("--levels must be >= 1");
    const std::size_t block = std::size_t{1} << levels;
    const std::size_t start = p.size("start");
    if (start >= rec.samples.size()) throw InvalidInput("--start beyond the end of the signal");
    std::size_t len = p.size("length");
    if (len == 0) len = std::min<std::size_t>(1024, rec.samples.size() - start) / block * block;
    if (start + len > rec.samples.size()) throw InvalidInput("--start + --length beyond the end of the signal");
    const std::span<const double> seg(rec.samples.data() + start, len);

    const auto report = eval::decomposition_report(seg, rec.sampling_rate_hz, levels);
    const fs::path dir = run_dir(p);
    const auto written = eval::write_decomposition(report, dir.string(), !p.on("no-svg"));
    for (std::size_t b = 0; b < report.bands.size(); ++b) {
        char line[128];
        std::snprintf(line, sizeof line, "%-3s %8.3f-%8.3f Hz  energy %.4f\n", report.bands[b].name.c_str(),
                      report.bands[b].band.low_hz, report.bands[b].band.high_hz, report.energy_fraction(b));
        out << line;
    }
    out << written.size() << " files in " << dir.string() << "\n";
    return 0;
}

int cmd_describe(const Params& p, std::ostream& out) {
    const arch::ModelSpec spec = p.has("checkpoint") ? load_checkpoint(p.str("checkpoint")).spec() : model_spec(p);
    const std::string text = arch::describe_text(spec);
    const fs::path dir = run_dir(p);
    write_file((dir / "trace.txt").string(), text);
    write_file((dir / "trace_kv.txt").string(), arch::describe_kv(spec));
    out << text;
    return 0;
}

int cmd_ablation(const Params& p, std::ostream& out) {
    train::AblationConfig cfg;
    for (const auto& v : split_list(p.str("variants"))) cfg.variants.push_back(arch::parse_variant(v));
    if (cfg.variants.empty()) throw InvalidInput("ablation: empty --variants");
    cfg.repetitions = p.size("repetitions");
    cfg.seed = p.u64("seed");
    cfg.train = train_config(p);
    cfg.eval_threads = threads(p);
    const std::size_t window = p.size("window");
    for (auto& v : cfg.variants) v.input_length = window;
    cfg.snr_eval = p.on("toy") ? std::vector<double>{0.0} : dataset_config(p).snr_eval;
    cfg.make_data = [&](std::uint64_t s) { return build_data(p, s).data; };

    const fs::path dir = run_dir(p);
    fs::create_directories(dir / "histories");
    const bool det = p.on("deterministic");
    cfg.on_run = [&](const std::string& label, std::size_t r, const train::TrainHistory& h) {
        write_file((dir / "histories" / (label + "_r" + std::to_string(r + 1) + ".csv")).string(), h.to_csv(det));
        out << label << " run " << r + 1 << ": best val " << fmt(h.best_val_loss()) << "\n";
    };
    const eval::MetricsReport report = train::run_ablation(cfg);
    write_tables(dir, report);
    out << eval::report_table(report, eval::Metric::Rmse);
    return 0;
}

void add_model_options(Params& p) {
    p.value("variant", "fcn", "fcn, all, f<k>, b<k>, forward or backward");
    p.value("k", "", "wavelet layer count for --variant forward|backward");
}

}  // namespace

Manifest read_manifest(const std::string& path) {
    if (path.empty()) throw InvalidInput("no --manifest given");
    if (!fs::exists(path)) throw InvalidInput(path + ": manifest not found");
    Manifest m;
    m.path = path;
    m.fields = with_path(path, [&] { return parse_key_values(read_file(path)); });
    if (m.fields["format"] != "wcae-manifest") throw InvalidInput(path + ": not a wcae manifest");
    if (m.fields["version"] != "1") throw InvalidInput(path + ": unsupported manifest version " + m.fields["version"]);
    m.snr_eval = to_doubles("snr_eval", m.fields["snr_eval"]);
    return m;
}

data::PairSet Manifest::load(data::Role role) const {
    const std::string key = std::string(data::role_name(role)) + "_file";
    const auto it = fields.find(key);
    if (it == fields.end()) throw InvalidInput(path + ": missing '" + key + "'");
    const std::string file = (fs::path(path).parent_path() / it->second).string();
    if (!fs::exists(file)) throw InvalidInput(file + ": pair file not found (listed in " + path + ")");
    data::PairSet set = with_path(file, [&] { return data::load_pairs(file); });
    if (set.role != role) throw InvalidInput(file + ": holds " + data::role_name(set.role) + " pairs");
    return set;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Wavelet-integrated convolutional autoencoder for ECG denoising", "wcae"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Params>> params;
    std::map<CLI::App*, std::function<int(const Params&, std::ostream&)>> handlers;
    auto sub = [&](const std::string& name, const std::string& help, auto handler) -> Params& {
        params.push_back(std::make_unique<Params>(app.add_subcommand(name, help), name));
        add_common(*params.back());
        handlers[params.back()->app()] = handler;
        return *params.back();
    };

    {
        Params& p = sub("prepare", "build train/validation/test pair files and a manifest", cmd_prepare);
        add_data_options(p);
    }
    {
        Params& p = sub("train", "train one model variant on a prepared dataset", cmd_train);
        p.value("manifest", "", "manifest written by prepare");
        add_model_options(p);
        add_train_options(p);
    }
    {
        Params& p = sub("denoise", "denoise a signal file with a trained checkpoint", cmd_denoise);
        p.value("checkpoint", "", "trained checkpoint");
        p.value("input", "", "noisy signal (.hea, .csv or raw float)");
        p.value("output", "", "output path (same format as the input)");
        p.value("normalize", "true", "min-max normalize the input and map the output back");
        p.value("scale", "", "MIN,MAX used for normalization instead of the input's extremes");
        p.flag("windows-csv", "also write per-window statistics");
    }
    {
        Params& p = sub("evaluate", "score checkpoints on the test pairs of a manifest", cmd_evaluate);
        p.list("checkpoint", "checkpoints to evaluate, one report row each");
        p.value("manifest", "", "manifest written by prepare");
        p.value("snr", "", "input SNR columns (default: the manifest's evaluation set)");
    }
    {
        Params& p = sub("decompose", "export a multilevel wavelet decomposition", cmd_decompose);
        p.value("input", "", "signal file");
        p.value("manifest", "", "take a prepared test window instead of --input");
        p.value("window", "0", "test window index for --manifest");
        p.value("which", "noisy", "clean or noisy, for --manifest");
        p.value("fs", "360", "sampling rate of prepared windows in Hz");
        p.value("levels", "3", "decomposition levels");
        p.value("start", "0", "first sample");
        p.value("length", "0", "samples to decompose (0: up to 1024, rounded down to a multiple of 2^levels)");
        p.flag("no-svg", "skip the SVG plot");
    }
    {
        Params& p = sub("describe", "print the layer-by-layer shape trace of a model", cmd_describe);
        add_model_options(p);
        p.value("checkpoint", "", "describe the model stored in a checkpoint");
    }
    {
        Params& p = sub("ablation", "train and evaluate several variants over repeated seeds", cmd_ablation);
        add_data_options(p);
        add_train_options(p);
        p.value("variants", "fcn,f1,f2,f3,f4,b1,b2,b3,b4,all", "variants, one report row each");
        p.value("repetitions", "10", "independent runs per variant");
    }

    std::vector<std::string> argv_store{"wcae"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    for (auto& p : params) {
        if (!p->app()->parsed()) continue;
        try {
            p->apply_config();
            return handlers.at(p->app())(*p, out);
        } catch (const DivergenceError& e) {
            err << "wcae " << p->command() << ": " << e.what() << " (try a lower --learning-rate)\n";
            return 3;
        } catch (const std::exception& e) {
            err << "wcae " << p->command() << ": " << e.what() << "\n";
            return 1;
        }
    }
    return 1;
}

}  // namespace wcae::cli
