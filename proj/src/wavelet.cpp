#include "wcae/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wcae/error.hpp"

namespace wcae::wavelet {
namespace {

// Daubechies (1992) orthonormal db6 scaling filter, ordered as the
// analysis low-pass used with convolution.
constexpr std::array<double, kDb6Taps> kDb6DecLo = {
    -0.001077301085308479888, 0.004777257510945510639,  0.0005538422011614961392,
    -0.03158203931748602956,  0.02752286553030572862,   0.09750160558732304910,
    -0.1297668675672619356,   -0.2262646939654398200,   0.3152503517091976290,
    0.7511339080210953507,    0.4946238903984530856,    0.1115407433501094637,
};

FilterBank build_db6() {
    FilterBank bank;
    bank.dec_lo = kDb6DecLo;
    for (std::size_t n = 0; n < kDb6Taps; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        bank.dec_hi[n] = sign * kDb6DecLo[kDb6Taps - 1 - n];
    }
    std::reverse_copy(bank.dec_lo.begin(), bank.dec_lo.end(), bank.rec_lo.begin());
    std::reverse_copy(bank.dec_hi.begin(), bank.dec_hi.end(), bank.rec_hi.begin());
    return bank;
}

inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t r = i % m;
    return static_cast<std::size_t>(r < 0 ? r + m : r);
}

}  // namespace

double filter_bank_violation(const FilterBank& b) {
    double worst = 0.0;
    auto note = [&](double v) { worst = std::max(worst, std::abs(v)); };

    const double sum_lo = std::accumulate(b.dec_lo.begin(), b.dec_lo.end(), 0.0);
    const double sum_hi = std::accumulate(b.dec_hi.begin(), b.dec_hi.end(), 0.0);
    note(sum_lo - std::sqrt(2.0));
    note(sum_hi);

    // Orthonormal to its own even shifts.
    for (std::size_t shift = 0; shift < kDb6Taps; shift += 2) {
        double acc = 0.0;
        for (std::size_t n = 0; n + shift < kDb6Taps; ++n) acc += b.dec_lo[n] * b.dec_lo[n + shift];
        note(acc - (shift == 0 ? 1.0 : 0.0));
    }
    for (std::size_t n = 0; n < kDb6Taps; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        note(b.dec_hi[n] - sign * b.dec_lo[kDb6Taps - 1 - n]);
        note(b.rec_lo[n] - b.dec_lo[kDb6Taps - 1 - n]);
        note(b.rec_hi[n] - b.dec_hi[kDb6Taps - 1 - n]);
    }
    return worst;
}

const FilterBank& db6() {
    static const FilterBank bank = [] {
        FilterBank b = build_db6();
        if (filter_bank_violation(b) > 1e-12) {
            throw std::logic_error("db6 filter bank failed validation");
        }
        return b;
    }();
    return bank;
}

FilterBank make_db6_filters() { return db6(); }

void dwt_step_into(const double* x, std::size_t n, std::size_t stride, const FilterBank& bank,
                   double* approx, double* detail, std::size_t out_stride) {
    const std::size_t half = n / 2;
    const bool interior_possible = n >= kDb6Taps;
    for (std::size_t i = 0; i < half; ++i) {
        const auto centre = static_cast<std::ptrdiff_t>(2 * i + 1);
        double a = 0.0;
        double d = 0.0;
        if (interior_possible && centre >= static_cast<std::ptrdiff_t>(kDb6Taps - 1)) {
            const double* base = x + static_cast<std::size_t>(centre) * stride;
            for (std::size_t k = 0; k < kDb6Taps; ++k) {
                const double v = *(base - k * stride);
                a += bank.dec_lo[k] * v;
                d += bank.dec_hi[k] * v;
            }
        } else {
            for (std::size_t k = 0; k < kDb6Taps; ++k) {
                const double v = x[wrap(centre - static_cast<std::ptrdiff_t>(k), n) * stride];
                a += bank.dec_lo[k] * v;
                d += bank.dec_hi[k] * v;
            }
        }
        approx[i * out_stride] = a;
        detail[i * out_stride] = d;
    }
}

void idwt_step_into(const double* approx, const double* detail, std::size_t m, std::size_t in_stride,
                    const FilterBank& bank, double* out, std::size_t out_stride) {
    // Adjoint form of dwt_step_into: each coefficient scatters through the
    // analysis filters. Equivalent to upsample + filter with rec_lo/rec_hi.
    const std::size_t n = 2 * m;
    for (std::size_t t = 0; t < n; ++t) out[t * out_stride] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = approx[i * in_stride];
        const double d = detail[i * in_stride];
        const auto centre = static_cast<std::ptrdiff_t>(2 * i + 1);
        for (std::size_t k = 0; k < kDb6Taps; ++k) {
            const std::size_t t = wrap(centre - static_cast<std::ptrdiff_t>(k), n);
            out[t * out_stride] += bank.dec_lo[k] * a + bank.dec_hi[k] * d;
        }
    }
}

LevelOutput dwt_step(std::span<const double> signal, const FilterBank& bank) {
    if (signal.empty() || signal.size() % 2 != 0) {
        throw InvalidInput("dwt_step: signal length must be even and non-zero, got " +
                           std::to_string(signal.size()));
    }
    LevelOutput out;
    out.approx.resize(signal.size() / 2);
    out.detail.resize(signal.size() / 2);
    dwt_step_into(signal.data(), signal.size(), 1, bank, out.approx.data(), out.detail.data(), 1);
    return out;
}

std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const FilterBank& bank) {
    if (approx.empty() || approx.size() != detail.size()) {
        throw InvalidInput("idwt_step: approx and detail must have equal non-zero length (got " +
                           std::to_string(approx.size()) + " and " + std::to_string(detail.size()) + ")");
    }
    std::vector<double> out(2 * approx.size());
    idwt_step_into(approx.data(), detail.data(), approx.size(), 1, bank, out.data(), 1);
    return out;
}

Band WaveletDecomposition::detail_band(int k) const {
    if (k < 1 || k > levels) throw InvalidInput("detail_band: level out of range");
    return {sampling_rate_hz / std::ldexp(1.0, k + 1), sampling_rate_hz / std::ldexp(1.0, k)};
}

Band WaveletDecomposition::approx_band() const {
    return {0.0, sampling_rate_hz / std::ldexp(1.0, levels + 1)};
}

WaveletDecomposition wavedec(std::span<const double> signal, int levels, const FilterBank& bank,
                             double sampling_rate_hz) {
    if (levels < 1) throw InvalidInput("wavedec: levels must be >= 1");
    if (levels > 30) throw InvalidInput("wavedec: levels too large");
    const std::size_t block = std::size_t{1} << levels;
    if (signal.empty() || signal.size() % block != 0) {
        throw InvalidInput("wavedec: length " + std::to_string(signal.size()) + " is not divisible by 2^" +
                           std::to_string(levels));
    }
    WaveletDecomposition dec;
    dec.levels = levels;
    dec.original_length = signal.size();
    dec.sampling_rate_hz = sampling_rate_hz;
    std::vector<double> current(signal.begin(), signal.end());
    for (int level = 0; level < levels; ++level) {
        LevelOutput step = dwt_step(current, bank);
        dec.details.push_back(std::move(step.detail));
        current = std::move(step.approx);
    }
    dec.approx = std::move(current);
    return dec;
}

std::vector<double> waverec(const WaveletDecomposition& dec, const FilterBank& bank) {
    if (dec.levels < 1 || dec.details.size() != static_cast<std::size_t>(dec.levels)) {
        throw InvalidInput("waverec: detail count does not match levels");
    }
    const std::size_t block = std::size_t{1} << dec.levels;
    if (dec.original_length == 0 || dec.original_length % block != 0 ||
        dec.approx.size() != dec.original_length / block) {
        throw InvalidInput("waverec: approximation length inconsistent with original length");
    }
    for (int k = 1; k <= dec.levels; ++k) {
        if (dec.details[k - 1].size() != (dec.original_length >> k)) {
            throw InvalidInput("waverec: D" + std::to_string(k) + " has length " +
                               std::to_string(dec.details[k - 1].size()) + ", expected " +
                               std::to_string(dec.original_length >> k));
        }
    }
    std::vector<double> current = dec.approx;
    for (int k = dec.levels; k >= 1; --k) {
        current = idwt_step(current, dec.details[k - 1], bank);
    }
    return current;
}

}  // namespace wcae::wavelet
