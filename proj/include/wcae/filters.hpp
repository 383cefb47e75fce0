#pragma once

// Butterworth filters as second-order sections, zero-phase application and
// the moving-average smoother used by the reference preprocessing.

#include <span>
#include <vector>

namespace wcae::filt {

/// One biquad, a0 normalized to 1. First-order sections have b2 = a2 = 0.
struct Section {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

enum class Response { LowPass, HighPass };

/// Digital Butterworth design by the bilinear transform with prewarping.
/// Each section is gain-normalized at DC (low-pass) or Nyquist (high-pass).
std::vector<Section> butterworth(int order, double cutoff_hz, double fs_hz, Response response);

/// Complex frequency response magnitude at f.
double magnitude_response(std::span<const Section> sos, double f_hz, double fs_hz);

/// Causal cascade in transposed direct form II, zero initial state.
std::vector<double> sosfilt(std::span<const Section> sos, std::span<const double> x);

/// Odd: 2*x[0] - x[k] (continues slopes). Even: x[k] (mirror, no level step).
enum class PadMode { Odd, Even };

/// Forward-backward filtering with reflection padding and steady-state
/// initial conditions. padlen < 0 selects 3 * (2 * sections + 1), capped
/// at x.size() - 1.
std::vector<double> sosfiltfilt(std::span<const Section> sos, std::span<const double> x, int padlen = -1,
                                PadMode mode = PadMode::Odd);

/// Centered moving average of odd width; edges use replicated samples.
std::vector<double> moving_average(std::span<const double> x, std::size_t width);

}  // namespace wcae::filt
