#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles/db6_oracle.hpp"
#include "wcae/error.hpp"
#include "wcae/rng.hpp"
#include "wcae/wavelet.hpp"

using namespace wcae;
using namespace wcae::wavelet;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Full circular convolution, then keep odd-indexed samples.
std::vector<double> naive_analysis(const std::vector<double>& x, const std::array<double, 12>& h) {
    const std::size_t n = x.size();
    std::vector<double> full(n, 0.0);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < h.size(); ++k)
            full[m] += h[k] * x[((m + 12 * n) - k) % n];
    std::vector<double> out;
    for (std::size_t m = 1; m < n; m += 2) out.push_back(full[m]);
    return out;
}

// Zero-stuff, filter each branch with the reconstruction filter, sum,
// advance by taps - 2.
std::vector<double> naive_synthesis(const std::vector<double>& a, const std::vector<double>& d, const FilterBank& b) {
    const std::size_t n = 2 * a.size();
    std::vector<double> ua(n, 0.0), ud(n, 0.0), out(n, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ua[2 * i] = a[i];
        ud[2 * i] = d[i];
    }
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < 12; ++j) {
            const std::size_t idx = (m + 10 + 12 * n - j) % n;
            out[m] += b.rec_lo[j] * ua[idx] + b.rec_hi[j] * ud[idx];
        }
    return out;
}

}  // namespace

TEST_CASE("db6 bank satisfies the filter-bank invariants", "[wavelet]") {
    const FilterBank b = make_db6_filters();
    CHECK(std::accumulate(b.dec_hi.begin(), b.dec_hi.end(), 0.0) == Catch::Approx(0.0).margin(1e-10));
    CHECK(std::accumulate(b.dec_lo.begin(), b.dec_lo.end(), 0.0) == Catch::Approx(1.414213562).margin(1e-9));
    double sq = 0.0;
    for (double v : b.dec_lo) sq += v * v;
    CHECK(sq == Catch::Approx(1.0).margin(1e-10));
    for (std::size_t n = 0; n < 12; ++n) {
        CHECK(b.dec_hi[n] == (n % 2 == 0 ? 1.0 : -1.0) * b.dec_lo[11 - n]);
        CHECK(b.rec_lo[n] == b.dec_lo[11 - n]);
        CHECK(b.rec_hi[n] == b.dec_hi[11 - n]);
    }
    CHECK(filter_bank_violation(b) < 1e-12);
}

TEST_CASE("db6 matches an independent spectral factorization", "[wavelet][oracle]") {
    const auto h = oracle::daubechies_min_phase(6);
    REQUIRE(h.size() == 12);
    const FilterBank& b = db6();
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(std::abs(b.dec_lo[i] - static_cast<double>(h[i])) < 1e-8);
        CHECK(std::abs(b.dec_lo[i] - static_cast<double>(h[i])) < 1e-15);
    }
}

TEST_CASE("filter_bank_violation detects a corrupted bank", "[wavelet]") {
    FilterBank b = db6();
    b.dec_lo[3] += 1e-6;
    CHECK(filter_bank_violation(b) > 1e-7);
}

TEST_CASE("dwt_step on a constant signal", "[wavelet]") {
    const double c = 0.75;
    const std::vector<double> x(64, c);
    const auto out = dwt_step(x, db6());
    REQUIRE(out.approx.size() == 32);
    for (double d : out.detail) CHECK(std::abs(d) < 1e-12);
    for (double a : out.approx) CHECK(std::abs(a - std::sqrt(2.0) * c) < 1e-10);
}

TEST_CASE("dwt_step halves the length", "[wavelet]") {
    const auto out = dwt_step(random_signal(1024, 1), db6());
    CHECK(out.approx.size() == 512);
    CHECK(out.detail.size() == 512);
}

TEST_CASE("dwt_step matches the brute-force oracle", "[wavelet][oracle]") {
    for (std::size_t n : {2u, 4u, 8u, 16u, 30u}) {
        const auto x = random_signal(n, 100 + n);
        const auto out = dwt_step(x, db6());
        CHECK(max_abs_diff(out.approx, naive_analysis(x, db6().dec_lo)) < 1e-12);
        CHECK(max_abs_diff(out.detail, naive_analysis(x, db6().dec_hi)) < 1e-12);
    }
}

TEST_CASE("dwt_step rejects odd and empty signals", "[wavelet]") {
    CHECK_THROWS_AS(dwt_step(std::vector<double>(7, 1.0), db6()), InvalidInput);
    CHECK_THROWS_AS(dwt_step(std::vector<double>{}, db6()), InvalidInput);
}

TEST_CASE("idwt_step inverts dwt_step", "[wavelet]") {
    const auto x = random_signal(128, 7);
    const auto lv = dwt_step(x, db6());
    CHECK(max_abs_diff(idwt_step(lv.approx, lv.detail, db6()), x) < 1e-10);
}

TEST_CASE("idwt_step of zeros is zero", "[wavelet]") {
    const std::vector<double> z(16, 0.0);
    for (double v : idwt_step(z, z, db6())) CHECK(v == 0.0);
}

TEST_CASE("idwt_step matches the naive upsample-filter-sum oracle", "[wavelet][oracle]") {
    for (std::size_t m : {1u, 3u, 8u, 16u}) {
        const auto a = random_signal(m, 200 + m);
        const auto d = random_signal(m, 300 + m);
        CHECK(max_abs_diff(idwt_step(a, d, db6()), naive_synthesis(a, d, db6())) < 1e-12);
    }
}

TEST_CASE("idwt_step rejects mismatched lengths", "[wavelet]") {
    CHECK_THROWS_AS(idwt_step(std::vector<double>(4, 0.0), std::vector<double>(5, 0.0), db6()), InvalidInput);
}

TEST_CASE("wavedec level lengths and band annotations", "[wavelet]") {
    const auto dec = wavedec(random_signal(1024, 3), 3, db6(), 360.0);
    REQUIRE(dec.details.size() == 3);
    CHECK(dec.details[0].size() == 512);
    CHECK(dec.details[1].size() == 256);
    CHECK(dec.details[2].size() == 128);
    CHECK(dec.approx.size() == 128);
    CHECK(dec.detail_band(3).low_hz == 22.5);
    CHECK(dec.detail_band(3).high_hz == 45.0);
    CHECK(dec.detail_band(1).low_hz == 90.0);
    CHECK(dec.detail_band(1).high_hz == 180.0);
    CHECK(dec.approx_band().high_hz == 22.5);
}

TEST_CASE("wavedec rejects insufficient divisibility", "[wavelet]") {
    CHECK_THROWS_AS(wavedec(random_signal(1000, 1), 4, db6()), InvalidInput);
    CHECK_THROWS_AS(wavedec(random_signal(1024, 1), 0, db6()), InvalidInput);
}

TEST_CASE("waverec inverts wavedec", "[wavelet]") {
    const auto x = random_signal(1024, 11);
    CHECK(max_abs_diff(waverec(wavedec(x, 5, db6()), db6()), x) < 1e-8);
}

TEST_CASE("waverec of a zero decomposition is zero", "[wavelet]") {
    auto dec = wavedec(std::vector<double>(256, 0.0), 4, db6());
    for (double v : waverec(dec, db6())) CHECK(v == 0.0);
}

TEST_CASE("waverec isolates a band by linearity", "[wavelet]") {
    const auto x = random_signal(512, 5);
    const auto dec = wavedec(x, 3, db6());
    auto only_d1 = dec;
    std::fill(only_d1.approx.begin(), only_d1.approx.end(), 0.0);
    for (std::size_t k = 1; k < only_d1.details.size(); ++k)
        std::fill(only_d1.details[k].begin(), only_d1.details[k].end(), 0.0);
    auto without_d1 = dec;
    std::fill(without_d1.details[0].begin(), without_d1.details[0].end(), 0.0);

    const auto band = waverec(only_d1, db6());
    const auto rest = waverec(without_d1, db6());
    std::vector<double> expected(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) expected[i] = x[i] - rest[i];
    CHECK(max_abs_diff(band, expected) < 1e-8);
}

TEST_CASE("waverec rejects inconsistent decompositions", "[wavelet]") {
    auto dec = wavedec(random_signal(256, 2), 3, db6());
    dec.details[1].pop_back();
    CHECK_THROWS_AS(waverec(dec, db6()), InvalidInput);
    auto dec2 = wavedec(random_signal(256, 2), 3, db6());
    dec2.details.pop_back();
    CHECK_THROWS_AS(waverec(dec2, db6()), InvalidInput);
}

TEST_CASE("perfect reconstruction across sizes and levels", "[wavelet][property]") {
    std::uint64_t seed = 1;
    for (std::size_t n = 32; n <= 4096; n *= 2) {
        for (int levels = 1; levels <= 5; ++levels) {
            const auto x = random_signal(n, seed++);
            const auto dec = wavedec(x, levels, db6());
            CHECK(max_abs_diff(waverec(dec, db6()), x) < 1e-8);

            double energy = 0.0, coeff = 0.0;
            for (double v : x) energy += v * v;
            for (double v : dec.approx) coeff += v * v;
            for (const auto& d : dec.details)
                for (double v : d) coeff += v * v;
            CHECK(std::abs(energy - coeff) / energy < 1e-8);
        }
    }
}

TEST_CASE("dwt_step is linear", "[wavelet][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto x = random_signal(64, seed);
        const auto y = random_signal(64, seed + 1000);
        const double a = 0.3 + static_cast<double>(seed), b = -1.7;
        std::vector<double> z(64);
        for (std::size_t i = 0; i < 64; ++i) z[i] = a * x[i] + b * y[i];
        const auto fx = dwt_step(x, db6()), fy = dwt_step(y, db6()), fz = dwt_step(z, db6());
        for (std::size_t i = 0; i < 32; ++i) {
            CHECK(std::abs(fz.approx[i] - (a * fx.approx[i] + b * fy.approx[i])) < 1e-10);
            CHECK(std::abs(fz.detail[i] - (a * fx.detail[i] + b * fy.detail[i])) < 1e-10);
        }
    }
}

TEST_CASE("circular shift by two shifts both branches by one", "[wavelet][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 48;
        const auto x = random_signal(n, seed + 50);
        std::vector<double> shifted(n);
        for (std::size_t i = 0; i < n; ++i) shifted[(i + 2) % n] = x[i];
        const auto f = dwt_step(x, db6()), g = dwt_step(shifted, db6());
        for (std::size_t i = 0; i < n / 2; ++i) {
            CHECK(std::abs(g.approx[(i + 1) % (n / 2)] - f.approx[i]) < 1e-12);
            CHECK(std::abs(g.detail[(i + 1) % (n / 2)] - f.detail[i]) < 1e-12);
        }
    }
}
