#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "oracles/signal_metrics.hpp"
#include "wcae/binary_io.hpp"
#include "wcae/evaluation.hpp"
#include "wcae/rng.hpp"
#include "wcae/synthetic.hpp"

using namespace wcae;
using namespace wcae::eval;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b, double s = 1.0) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
    return out;
}

// Independent one-line definitions.
double rmse_def(const std::vector<double>& c, const std::vector<double>& d) {
    std::vector<double> e(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) e[i] = c[i] - d[i];
    return oracle::rms(e);
}
double prd_def(const std::vector<double>& c, const std::vector<double>& d) {
    std::vector<double> e(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) e[i] = c[i] - d[i];
    return static_cast<double>(100.0L * std::sqrt(oracle::mean_square(e) / oracle::mean_square(c)));
}

data::PairSet grouped_pairs(std::uint64_t seed) {
    data::PairSet set{data::Role::Test, 64, {}};
    Rng rng(seed);
    for (double snr : {-3.0, 3.0}) {
        for (int w = 0; w < 5; ++w) {
            data::NoisyPair p;
            p.record = "r";
            p.start = static_cast<std::size_t>(w) * 64;
            p.snr_db = snr;
            p.clean = randn(64, rng.next_u64());
            p.noisy = data::mix_noise(p.clean, randn(64, rng.next_u64()), snr);
            set.pairs.push_back(std::move(p));
        }
    }
    return set;
}

}  // namespace

TEST_CASE("rmse definitions", "[metrics]") {
    const auto a = randn(100, 1);
    CHECK(rmse(a, a) == 0.0);
    const std::vector<double> zeros(50, 0.0), tenth(50, 0.1);
    CHECK_THAT(rmse(zeros, tenth), WithinAbs(0.1, 1e-16));
    const auto b = randn(100, 2);
    CHECK_THAT(rmse(a, b), WithinAbs(rmse_def(a, b), 1e-12));
    CHECK_THROWS_AS(rmse(a, randn(99, 3)), InvalidInput);
}

TEST_CASE("snr improvement definitions", "[metrics]") {
    const auto clean = randn(256, 4);
    const auto noise = randn(256, 5);
    const auto noisy = add(clean, noise);
    CHECK(snr_improvement(clean, noisy, noisy) == 0.0);
    const auto halved = add(clean, noise, 0.5);
    CHECK_THAT(snr_improvement(clean, noisy, halved), WithinAbs(20.0 * std::log10(2.0), 1e-12));
    CHECK_THAT(snr_improvement(clean, noisy, halved), WithinAbs(6.0206, 1e-4));
    const auto other = add(clean, randn(256, 6), 0.3);
    CHECK_THAT(snr_improvement(clean, noisy, other),
               WithinAbs(oracle::snr_db(clean, other) - oracle::snr_db(clean, noisy), 1e-10));
    CHECK(snr_improvement(clean, noisy, clean) == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(snr_improvement(clean, clean, noisy), InvalidInput);
}

TEST_CASE("prd definitions", "[metrics]") {
    const auto clean = randn(128, 7);
    CHECK(prd(clean, clean) == 0.0);
    CHECK(prd(clean, std::vector<double>(128, 0.0)) == 100.0);
    const auto d = add(clean, randn(128, 8), 0.2);
    CHECK_THAT(prd(clean, d), WithinAbs(prd_def(clean, d), 1e-10));
    CHECK_THROWS_AS(prd(std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)), InvalidInput);
}

TEST_CASE("rmse and prd are invariant under a shared permutation", "[metrics][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto c = randn(200, 100 + seed);
        auto d = add(c, randn(200, 200 + seed), 0.4);
        const double r0 = rmse(c, d), p0 = prd(c, d);
        std::vector<std::size_t> perm(c.size());
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(seed);
        rng.shuffle(std::span(perm));
        std::vector<double> cp(c.size()), dp(d.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            cp[i] = c[perm[i]];
            dp[i] = d[perm[i]];
        }
        CHECK_THAT(rmse(cp, dp), WithinAbs(r0, 1e-12));
        CHECK_THAT(prd(cp, dp), WithinAbs(p0, 1e-10));
    }
}

TEST_CASE("identity denoiser gives zero improvement in every group", "[evaluate]") {
    const auto set = grouped_pairs(1);
    const auto r = evaluate_denoiser([](const Tensor3& x) { return x; }, set, {-3.0, 3.0});
    REQUIRE(r.mean.size() == 2);
    for (const auto& m : r.mean) CHECK(m[1] == 0.0);
    CHECK(r.windows == std::vector<std::size_t>{5, 5});
}

TEST_CASE("missing SNR group is an error", "[evaluate]") {
    const auto set = grouped_pairs(2);
    try {
        evaluate_denoiser([](const Tensor3& x) { return x; }, set, {-3.0, 10.0});
        FAIL("expected missing group");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("10") != std::string::npos);
    }
}

TEST_CASE("evaluation does not depend on thread count", "[evaluate]") {
    const auto set = grouped_pairs(3);
    auto halve = [](const Tensor3& x) {
        Tensor3 y = x;
        for (auto& v : y.values()) v *= 0.5;
        return y;
    };
    const auto one = evaluate_denoiser(halve, set, {3.0, -3.0}, 1, 2);
    const auto many = evaluate_denoiser(halve, set, {3.0, -3.0}, 3, 2);
    CHECK(one.mean == many.mean);
    CHECK(one.snr_db == std::vector<double>{3.0, -3.0});
}

TEST_CASE("report csv round trips field-exactly", "[report]") {
    std::vector<RunMetrics> runs;
    Rng rng(4);
    for (int r = 0; r < 3; ++r) {
        RunMetrics m;
        m.snr_db = {-10.0, -7.0, 3.0};
        for (int c = 0; c < 3; ++c) m.mean.push_back({rng.uniform(0.1, 0.3), rng.uniform(5, 20), rng.uniform(10, 60)});
        m.windows = {4, 4, 4};
        runs.push_back(m);
    }
    MetricsReport rep;
    rep.snr_columns = {-10.0, -7.0, 3.0};
    rep.rows.push_back(aggregate_runs("1", arch::ModelSpec::fcn(), runs));
    rep.rows.push_back(aggregate_runs("6", arch::ModelSpec::backward(1), {runs[0]}));
    rep.rows[1].cells[2][1].mean = std::numeric_limits<double>::infinity();
    const std::string csv = report_csv(rep);
    const MetricsReport back = parse_report_csv(csv);
    CHECK(back == rep);
    CHECK(report_csv(back) == csv);
    CHECK(rep.rows[0].cells[0][0].n == 3);
    CHECK(rep.rows[1].cells[0][0].std == 0.0);
    CHECK(rep.row("6").variant == "B1");
    CHECK(rep.row("6").k == 1);

    const std::string table = report_table(rep, Metric::Rmse);
    CHECK(table.find("-10 dB") != std::string::npos);
    CHECK(table.find("B1") != std::string::npos);
    CHECK(table.find("+-") != std::string::npos);

    CHECK_THROWS_AS(parse_report_csv("bogus\n"), ParseError);
    CHECK_THROWS_AS(parse_report_csv(csv.substr(0, csv.rfind('\n', csv.size() - 2) + 1)), ParseError);
}

TEST_CASE("aggregation computes mean and sample deviation", "[report]") {
    RunMetrics a{{0.0}, {{1.0, 2.0, 3.0}}, {1}};
    RunMetrics b{{0.0}, {{3.0, 4.0, 5.0}}, {1}};
    const auto row = aggregate_runs("x", arch::ModelSpec::fcn(), {a, b});
    CHECK(row.cells[0][0].mean == 2.0);
    CHECK_THAT(row.cells[0][0].std, WithinAbs(std::sqrt(2.0), 1e-15));
}

TEST_CASE("decomposition lengths and bands", "[decomposition]") {
    const auto x = randn(1024, 9);
    const auto rep = decomposition_report(x);
    REQUIRE(rep.bands.size() == 4);
    CHECK(rep.bands[0].coefficients.size() == 512);
    CHECK(rep.bands[1].coefficients.size() == 256);
    CHECK(rep.bands[2].coefficients.size() == 128);
    CHECK(rep.bands[3].coefficients.size() == 128);
    CHECK(rep.bands[3].name == "A");
    CHECK(rep.bands[2].band.low_hz == 22.5);
    CHECK(rep.bands[2].band.high_hz == 45.0);
    CHECK(rep.bands[0].band.low_hz == 90.0);
    CHECK_THROWS_AS(decomposition_report(randn(1020, 1)), InvalidInput);
}

TEST_CASE("band reconstructions sum to the signal", "[decomposition]") {
    const auto x = randn(1024, 10);
    const auto rep = decomposition_report(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = 0.0;
        for (const auto& b : rep.bands) s += b.reconstruction[i];
        REQUIRE(std::abs(s - x[i]) < 1e-8);
    }
}

TEST_CASE("a 30 Hz sinusoid lands in D3", "[decomposition]") {
    std::vector<double> x(1024);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 30.0 * i / 360.0);
    const auto rep = decomposition_report(x);
    CHECK(rep.energy_fraction(2) > 0.6);
}

TEST_CASE("decomposition files", "[decomposition]") {
    const auto dir = fs::temp_directory_path() / "wcae_test_decomposition";
    fs::remove_all(dir);
    const auto rep = decomposition_report(randn(1024, 11));
    const auto paths = write_decomposition(rep, dir.string());
    CHECK(paths.size() == 6);
    for (const char* name : {"band_D1.csv", "band_D2.csv", "band_D3.csv", "band_A.csv", "coefficients.csv",
                             "decomposition.svg"}) {
        CHECK(fs::exists(dir / name));
    }
    const std::string d3 = read_file((dir / "band_D3.csv").string());
    CHECK(d3.rfind("# band=D3 low_hz=22.5 high_hz=45", 0) == 0);
    CHECK(std::count(d3.begin(), d3.end(), '\n') == 2 + 1024);
    CHECK(read_file((dir / "decomposition.svg").string()).find("<polyline") != std::string::npos);
}
