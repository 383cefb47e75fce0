// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criterion 9 can only be flagged; criterion 10 runs only
// when WCAE_FULL_DATA names a directory holding the full record set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles/db6_oracle.hpp"
#include "oracles/pack212_oracle.hpp"
#include "oracles/reference_adam.hpp"
#include "oracles/signal_metrics.hpp"
#include "wcae/architecture.hpp"
#include "wcae/binary_io.hpp"
#include "wcae/layers.hpp"
#include "wcae/rng.hpp"
#include "wcae/signal_io.hpp"
#include "wcae/synthetic.hpp"
#include "wcae/training.hpp"
#include "wcae/wavelet.hpp"

using namespace wcae;
namespace fs = std::filesystem;

namespace {

int failures = 0;

enum class Outcome { Pass, Fail, Flag, Skip };

void report(int id, Outcome o, const std::string& detail) {
    const char* tag = o == Outcome::Pass ? "PASS" : o == Outcome::Fail ? "FAIL" : o == Outcome::Flag ? "FLAG" : "SKIP";
    if (o == Outcome::Fail) ++failures;
    std::printf("criterion %2d: %s  %s\n", id, tag, detail.c_str());
    std::fflush(stdout);
}

Outcome pass_if(bool ok) { return ok ? Outcome::Pass : Outcome::Fail; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Runs one criterion; an exception counts as a failure.
void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, Outcome::Fail, std::string("exception: ") + e.what());
    }
}

void perfect_reconstruction() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(1024);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        for (int levels = 1; levels <= 5; ++levels) {
            const auto y = wavelet::waverec(wavelet::wavedec(x, levels, wavelet::db6()), wavelet::db6());
            for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y[i] - x[i]));
        }
    }
    const double secs = seconds_since(t0);
    report(1, pass_if(worst < 1e-8 && secs < 5.0), fmt("max |waverec(wavedec(x)) - x| = %.3g, %.2f s", worst, secs));
}

void db6_validity() {
    const auto& b = wavelet::db6();
    double sum_lo = 0.0, sum_hi = 0.0, energy = 0.0, qmf = 0.0, rev = 0.0, table = 0.0;
    const auto ref = oracle::daubechies_min_phase(6);
    for (std::size_t n = 0; n < 12; ++n) {
        sum_lo += b.dec_lo[n];
        sum_hi += b.dec_hi[n];
        energy += b.dec_lo[n] * b.dec_lo[n];
        const double sign = n % 2 == 0 ? 1.0 : -1.0;
        qmf = std::max(qmf, std::abs(b.dec_hi[n] - sign * b.dec_lo[11 - n]));
        rev = std::max({rev, std::abs(b.rec_lo[n] - b.dec_lo[11 - n]), std::abs(b.rec_hi[n] - b.dec_hi[11 - n])});
        table = std::max(table, std::abs(b.dec_lo[n] - static_cast<double>(ref[n])));
    }
    // Shifted orthogonality: sum_n h[n] h[n + 2k] = 0 for k != 0.
    double ortho = 0.0;
    for (std::size_t k = 1; k < 6; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n + 2 * k < 12; ++n) acc += b.dec_lo[n] * b.dec_lo[n + 2 * k];
        ortho = std::max(ortho, std::abs(acc));
    }
    const double worst = std::max({std::abs(sum_lo - std::sqrt(2.0)), std::abs(sum_hi), std::abs(energy - 1.0), qmf,
                                   rev, ortho, table});
    report(2, pass_if(worst < 1e-9), fmt("worst invariant violation %.3g (against spectral factorization %.3g)", worst, table));
}

Tensor3 random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor3 t(s);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

nn::ConvParams random_conv(std::size_t kernel, std::size_t in, std::size_t out, std::size_t stride, std::uint64_t seed) {
    Rng rng(seed);
    nn::ConvParams p = nn::ConvParams::zeros(kernel, in, out, stride);
    for (auto& w : p.weights) w = rng.uniform(-0.5, 0.5);
    for (auto& b : p.bias) b = rng.uniform(-0.5, 0.5);
    return p;
}

nn::WaveletLayerParams wavelet_params(std::size_t in, std::size_t branch_out, std::uint64_t seed) {
    nn::WaveletLayerParams p;
    p.hp_conv = random_conv(8, in, branch_out, 1, seed);
    p.lp_conv = random_conv(8, in, branch_out, 1, seed + 1);
    return p;
}

void gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, double>> worst{{"conv", 0}, {"tconv", 0}, {"batchnorm", 0}, {"elu", 0},
                                                      {"dropout", 0}, {"dwt", 0},   {"idwt", 0}};
    auto note = [&](std::size_t k, double e) { worst[k].second = std::max(worst[k].second, e); };
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        nn::ConvLayer conv(random_conv(4, 2, 3, 2, 1000 + seed));
        note(0, nn::gradient_check(conv, random_tensor({2, 8, 2}, 2000 + seed), 1e-3, seed));

        nn::TransposeConvLayer tconv(random_conv(4, 2, 3, 2, 3000 + seed));
        note(1, nn::gradient_check(tconv, random_tensor({2, 4, 2}, 4000 + seed), 1e-3, seed));

        nn::BatchNormLayer bn(3);
        Rng rng(seed);
        for (auto& g : bn.state().gamma) g = rng.uniform(0.5, 1.5);
        note(2, nn::gradient_check(bn, random_tensor({2, 8, 3}, 5000 + seed), 1e-3, seed));

        // ELU inputs stay at least 0.1 away from the kink.
        nn::EluLayer elu;
        Tensor3 x = random_tensor({2, 8, 3}, 6000 + seed, 0.1, 2.0);
        for (std::size_t i = 0; i < x.size(); i += 2) x.data()[i] = -x.data()[i];
        note(3, nn::gradient_check(elu, x, 1e-3, seed));

        nn::DropoutLayer drop(0.3);
        Rng mask_rng(seed);
        nn::ForwardContext ctx{nn::Mode::Train, &mask_rng};
        const Tensor3 dx = random_tensor({2, 8, 3}, 7000 + seed);
        drop.forward(dx, ctx);
        drop.freeze_mask(true);
        note(4, nn::gradient_check(drop, dx, 1e-3, seed));

        nn::DwtLayer dwt(wavelet_params(2, 2, 8000 + seed));
        note(5, nn::gradient_check(dwt, random_tensor({1, 16, 2}, 9000 + seed), 1e-3, seed));

        nn::IdwtLayer idwt(wavelet_params(2, 3, 10000 + seed));
        note(6, nn::gradient_check(idwt, random_tensor({1, 8, 4}, 11000 + seed), 1e-3, seed));
    }
    const double secs = seconds_since(t0);
    double overall = 0.0;
    std::string detail;
    for (const auto& [name, e] : worst) {
        overall = std::max(overall, e);
        detail += name + " " + fmt("%.2g", e) + ", ";
    }
    report(3, pass_if(overall < 1e-4 && secs < 60.0), "max relative error: " + detail + fmt("%.1f s", secs));
}

void shape_conformance() {
    const std::vector<arch::TraceEntry> table1{
        {0, 1024, 1}, {1, 512, 40}, {2, 256, 20},  {3, 128, 20},  {4, 64, 20},    {5, 32, 40},   {6, 32, 1},
        {7, 32, 1},   {8, 64, 40},  {9, 128, 20},  {10, 256, 20}, {11, 512, 20}, {12, 1024, 40}, {13, 1024, 1},
    };
    const bool fcn_ok = arch::shape_trace(arch::ModelSpec::fcn()) == table1;
    bool b3_ok = arch::shape_trace(arch::ModelSpec::backward(3)) == table1;
    for (const auto& r : arch::plan_rows(arch::ModelSpec::backward(3))) {
        const bool dwt = r.row >= 3 && r.row <= 5;
        const bool idwt = r.row >= 8 && r.row <= 10;
        b3_ok = b3_ok && (r.kind == arch::RowKind::Dwt) == dwt && (r.kind == arch::RowKind::Idwt) == idwt;
    }
    report(4, pass_if(fcn_ok && b3_ok),
           std::string("FCN trace ") + (fcn_ok ? "matches" : "differs") + ", B3 wavelet rows " +
               (b3_ok ? "3-5 / 8-10" : "misplaced"));
}

void adam_oracle() {
    Rng rng(55);
    std::vector<double> p(64), q;
    for (double& v : p) v = rng.normal();
    q = p;
    train::AdamState s;
    oracle::ReferenceAdam ref;
    double worst = 0.0;
    for (int step = 0; step < 100; ++step) {
        std::vector<double> g(p.size());
        for (double& v : g) v = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 1.0));
        train::adam_step(std::span(p), g, s);
        ref.step(q, g);
        for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] - q[i]));
    }
    report(5, pass_if(worst < 1e-12), fmt("max parameter deviation after 100 steps %.3g", worst));
}

void mixing_exactness() {
    const data::DatasetConfig cfg;
    std::vector<double> snrs = cfg.snr_train;
    snrs.insert(snrs.end(), cfg.snr_eval.begin(), cfg.snr_eval.end());
    Rng rng(66);
    double worst = 0.0;
    for (double snr : snrs) {
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> clean(256), noise(256);
            const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
            for (double& v : clean) v = rng.uniform(0.0, 1.0);
            for (double& v : noise) v = scale * rng.normal();
            const auto noisy = data::mix_noise(clean, noise, snr);
            worst = std::max(worst, std::abs(oracle::snr_db(clean, noisy) - snr));
        }
    }
    report(6, pass_if(snrs.size() == 12 && worst < 1e-9),
           fmt("%.0f SNR values x 1000 pairs, max |achieved - target| = %.3g dB", static_cast<double>(snrs.size()), worst));
}

void wfdb_212() {
    const fs::path dir = fs::temp_directory_path() / "wcae_acceptance_212";
    fs::remove_all(dir);
    fs::create_directories(dir);
    Rng rng(77);
    std::vector<int> a(5001), b(5001);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<int>(rng.below(4096)) - 2048;
        b[i] = static_cast<int>(rng.below(4096)) - 2048;
    }
    const std::vector<int> boundary{2047, -2048, -2047, -1, 0, 1, 2047, -2048};
    std::copy(boundary.begin(), boundary.end(), a.begin());
    std::copy(boundary.rbegin(), boundary.rend(), b.begin());
    io::write_wfdb_record(dir.string(), "rt", 360.0, {a, b});
    const std::string hea = read_file((dir / "rt.hea").string());
    const std::string dat = read_file((dir / "rt.dat").string());
    const auto rec = io::read_wfdb_adc(hea, dat);
    const bool samples_ok = rec.adc.size() == 2 && rec.adc[0] == a && rec.adc[1] == b;

    const fs::path again = dir / "again";
    fs::create_directories(again);
    io::write_wfdb_record(again.string(), "rt", 360.0, rec.adc);
    const bool bytes_ok = read_file((again / "rt.dat").string()) == dat && read_file((again / "rt.hea").string()) == hea;

    const std::string packed = io::pack_212(boundary);
    const auto model = oracle::pack212(boundary);
    const bool oracle_ok = std::string(model.begin(), model.end()) == packed && io::unpack_212(packed, boundary.size()) == boundary &&
                           oracle::unpack212(model, boundary.size()) == boundary;
    report(7, pass_if(samples_ok && bytes_ok && oracle_ok),
           std::string("round trip ") + (bytes_ok ? "byte-exact" : "differs") + ", samples " +
               (samples_ok ? "equal" : "differ") + ", +-2047/-2048 " + (oracle_ok ? "match the bit model" : "mismatch"));
}

struct ToyRun {
    train::TrainHistory history;
    double noisy_rmse = 0.0;
    double denoised_rmse = 0.0;
    double seconds = 0.0;
};

ToyRun toy_descent(std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    synth::ToyConfig cfg;
    cfg.seed = seed;
    const auto data = synth::make_toy_dataset(cfg);
    arch::ModelSpec spec = arch::ModelSpec::backward(1);
    spec.seed = derive_seed(seed, 0x1417);
    train::TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 16;
    tc.seed = derive_seed(seed, 0x7a17);
    const auto result = train::train(arch::build_model(spec), data.train, data.validation, tc);

    ToyRun run;
    run.history = result.history;
    const Tensor3 clean = data.test.clean_tensor();
    const Tensor3 noisy = data.test.noisy_tensor();
    const Tensor3 out = result.best.infer(noisy);
    run.noisy_rmse = oracle::rms(std::vector<double>([&] {
        std::vector<double> e(clean.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = noisy.data()[i] - clean.data()[i];
        return e;
    }()));
    std::vector<double> e(clean.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = out.data()[i] - clean.data()[i];
    run.denoised_rmse = oracle::rms(e);
    run.seconds = seconds_since(t0);
    return run;
}

void reduced_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    train::AblationConfig cfg;
    cfg.variants = {arch::ModelSpec::fcn(), arch::ModelSpec::backward(1)};
    cfg.repetitions = 3;
    cfg.seed = 9;
    cfg.train.epochs = 20;
    cfg.train.batch_size = 16;
    cfg.snr_eval = {-10.0};
    cfg.make_data = [](std::uint64_t seed) {
        data::DatasetConfig dc;
        dc.train_per_record = 20;
        dc.validation_per_record = 5;
        dc.test_per_record = 3;
        dc.snr_eval = {-10.0};
        dc.exclude.clear();
        const auto records = synth::synthetic_records(10, 150.0, 360.0, derive_seed(seed, 1));
        const auto noise = synth::synthetic_noise_sources(600.0, 360.0, derive_seed(seed, 2));
        return data::build_experiment_dataset(records, noise, dc, seed);
    };
    const auto rep = train::run_ablation(cfg);
    const double fcn = rep.rows[0].cells[0][0].mean;
    const double b1 = rep.rows[1].cells[0][0].mean;
    report(9, b1 <= fcn ? Outcome::Pass : Outcome::Flag,
           fmt("mean RMSE at -10 dB over 3 seeds: FCN %.4f, B1 %.4f (published 0.2104 vs 0.1811), %.0f s", fcn, b1,
               seconds_since(t0)));
}

void full_reproduction() {
    const char* root = std::getenv("WCAE_FULL_DATA");
    if (root == nullptr || *root == '\0') {
        report(10, Outcome::Skip, "set WCAE_FULL_DATA to a directory with the ECG records and bw/em/ma noise records");
        return;
    }
    std::vector<io::SignalRecord> records;
    std::vector<data::NoiseSource> noise;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.path().extension() != ".hea") continue;
        const std::string stem = entry.path().stem().string();
        const auto rec = io::load_signal(entry.path().string());
        if (stem == "bw" || stem == "em" || stem == "ma") {
            noise.push_back({data::parse_noise_kind(stem), rec});
        } else {
            records.push_back(rec);
        }
    }
    train::AblationConfig cfg;
    cfg.variants = {arch::ModelSpec::fcn(), arch::ModelSpec::backward(1)};
    cfg.repetitions = 10;
    cfg.train.epochs = 200;
    cfg.train.batch_size = 200;
    cfg.snr_eval = {-10.0};
    cfg.make_data = [&](std::uint64_t seed) {
        return data::build_experiment_dataset(records, noise, data::DatasetConfig{}, seed);
    };
    const auto rep = train::run_ablation(cfg);
    const auto& fcn = rep.rows[0].cells[0];
    const auto& b1 = rep.rows[1].cells[0];
    const bool ok = std::abs(fcn[0].mean - 0.2104) <= 0.02 && std::abs(b1[0].mean - 0.1811) <= 0.02 &&
                    std::abs(fcn[1].mean - 18.51) <= 0.5 && std::abs(b1[1].mean - 19.82) <= 0.5;
    report(10, pass_if(ok),
           fmt("RMSE at -10 dB: FCN %.4f, B1 %.4f", fcn[0].mean, b1[0].mean) +
               fmt("; SNR improvement FCN %.2f dB, B1 %.2f dB", fcn[1].mean, b1[1].mean));
}

}  // namespace

int main() {
    guarded(1, perfect_reconstruction);
    guarded(2, db6_validity);
    guarded(3, gradient_suite);
    guarded(4, shape_conformance);
    guarded(5, adam_oracle);
    guarded(6, mixing_exactness);
    guarded(7, wfdb_212);

    ToyRun first;
    bool have_first = false;
    guarded(8, [&] {
        first = toy_descent(2024);
        have_first = true;
        const double v1 = first.history.epochs.front().val_loss;
        const double vn = first.history.epochs.back().val_loss;
        report(8, pass_if(vn < 0.5 * v1 && first.denoised_rmse < first.noisy_rmse && first.seconds < 600.0),
               fmt("val MSE epoch 1 %.4g -> epoch 30 %.4g", v1, vn) +
                   fmt(", test RMSE noisy %.4f -> denoised %.4f, %.0f s", first.noisy_rmse, first.denoised_rmse,
                       first.seconds));
    });
    guarded(9, reduced_ordering);
    guarded(10, full_reproduction);
    guarded(11, [&] {
        if (!have_first) throw std::runtime_error("criterion 8 did not complete");
        const ToyRun second = toy_descent(2024);
        const std::string a = first.history.to_csv(true), b = second.history.to_csv(true);
        report(11, pass_if(a == b), std::string("history CSVs ") + (a == b ? "bit-identical" : "differ") + " across two runs");
    });
    return failures == 0 ? 0 : 1;
}
