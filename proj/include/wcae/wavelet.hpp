#pragma once

// Orthogonal discrete wavelet transform with periodic boundary handling.
//
// Conventions
// -----------
// Analysis (one level) for a length-N signal x and a 12-tap filter h:
//
//     out[n] = sum_k h[k] * x[(2n + 1 - k) mod N],   n = 0 .. N/2-1
//
// i.e. circular convolution with h followed by keeping the odd-indexed
// samples. Synthesis upsamples each branch (u[2n] = c[n], odd slots zero)
// and convolves with the reconstruction filter g:
//
//     x[m] = sum_j g_lo[j] * u_a[(m + 10 - j) mod 2M] + sum_j g_hi[j] * u_d[(m + 10 - j) mod 2M]
//
// With g = time-reversed h, this offset (taps - 2) makes synthesis the
// exact adjoint of analysis, so the round trip is the identity with no
// delay. The DWT network layers rely on that adjoint relation.

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace wcae::wavelet {

inline constexpr std::size_t kDb6Taps = 12;

struct FilterBank {
    std::array<double, kDb6Taps> dec_lo{};
    std::array<double, kDb6Taps> dec_hi{};
    std::array<double, kDb6Taps> rec_lo{};
    std::array<double, kDb6Taps> rec_hi{};
};

/// Daubechies-6 orthonormal bank. Validated against the FilterBank
/// invariants on first use; throws std::logic_error if they fail.
const FilterBank& db6();

/// Returns a copy of db6().
FilterBank make_db6_filters();

/// Checks sums, orthonormality, QMF and time-reversal relations.
/// Returns the largest violation found.
double filter_bank_violation(const FilterBank& bank);

struct LevelOutput {
    std::vector<double> approx;
    std::vector<double> detail;
};

/// One analysis level. N must be even and non-zero.
LevelOutput dwt_step(std::span<const double> signal, const FilterBank& bank);

/// Allocation-free variant used by the network layers. approx and detail
/// must each hold signal.size()/2 values. Strided access lets callers
/// transform one channel of an interleaved tensor in place.
void dwt_step_into(const double* signal, std::size_t n, std::size_t stride, const FilterBank& bank,
                   double* approx, double* detail, std::size_t out_stride);

/// One synthesis level. approx and detail must have equal, non-zero length.
std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const FilterBank& bank);

/// Allocation-free synthesis; out receives 2*m values with out_stride.
void idwt_step_into(const double* approx, const double* detail, std::size_t m, std::size_t in_stride,
                    const FilterBank& bank, double* out, std::size_t out_stride);

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct WaveletDecomposition {
    std::vector<double> approx;                ///< A_L
    std::vector<std::vector<double>> details;  ///< D1 (finest) .. DL
    int levels = 0;
    std::size_t original_length = 0;
    double sampling_rate_hz = 0.0;

    /// Frequency band of D_k (1-based): (fs / 2^(k+1), fs / 2^k).
    Band detail_band(int k) const;
    /// Band of the approximation: (0, fs / 2^(L+1)).
    Band approx_band() const;
};

/// L-level decomposition. N must be divisible by 2^L and L >= 1.
WaveletDecomposition wavedec(std::span<const double> signal, int levels, const FilterBank& bank,
                             double sampling_rate_hz = 360.0);

/// Inverse of wavedec. Throws InvalidInput on inconsistent lengths.
std::vector<double> waverec(const WaveletDecomposition& dec, const FilterBank& bank);

}  // namespace wcae::wavelet
