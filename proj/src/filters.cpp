#include "wcae/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "wcae/error.hpp"

namespace wcae::filt {

namespace {

using cplx = std::complex<double>;

Section normalize_gain(Section s, Response response) {
    // |H| at z = 1 (DC) or z = -1 (Nyquist).
    const double z = response == Response::LowPass ? 1.0 : -1.0;
    const double num = s.b0 + s.b1 * z + s.b2 * z * z;
    const double den = 1.0 + s.a1 * z + s.a2 * z * z;
    const double g = std::abs(den / num);
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
    return s;
}

}  // namespace

std::vector<Section> butterworth(int order, double cutoff_hz, double fs_hz, Response response) {
    if (order < 1) throw InvalidInput("butterworth: order must be >= 1");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs_hz / 2.0)) {
        throw InvalidInput("butterworth: cutoff must lie strictly between 0 and fs/2");
    }
    const double k = 2.0 * fs_hz;
    const double wa = k * std::tan(std::numbers::pi * cutoff_hz / fs_hz);
    // Zeros of the digital filter: z = -1 for low-pass, z = +1 for high-pass.
    const double zsign = response == Response::LowPass ? 1.0 : -1.0;
    std::vector<Section> sos;
    for (int i = 0; i < order / 2; ++i) {
        const double theta = std::numbers::pi * (2.0 * i + order + 1) / (2.0 * order);
        cplx p = std::polar(1.0, theta);
        p = response == Response::LowPass ? wa * p : wa / p;
        const cplx zp = (k + p) / (k - p);
        Section s;
        s.b0 = 1.0;
        s.b1 = 2.0 * zsign;
        s.b2 = 1.0;
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        sos.push_back(normalize_gain(s, response));
    }
    if (order % 2 == 1) {
        const double p = -wa;  // s = -1 lands on -wa under both transforms
        const double zp = (k + p) / (k - p);
        Section s;
        s.b0 = 1.0;
        s.b1 = zsign;
        s.a1 = -zp;
        sos.push_back(normalize_gain(s, response));
    }
    return sos;
}

double magnitude_response(std::span<const Section> sos, double f_hz, double fs_hz) {
    const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
    cplx h = 1.0;
    for (const auto& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
    return std::abs(h);
}

namespace {

void run_cascade(std::span<const Section> sos, std::vector<double>& y, std::vector<double> z0,
                 std::vector<double> z1) {
    for (std::size_t j = 0; j < sos.size(); ++j) {
        const Section& s = sos[j];
        double a = z0[j], b = z1[j];
        for (double& v : y) {
            const double x = v;
            const double out = s.b0 * x + a;
            a = s.b1 * x - s.a1 * out + b;
            b = s.b2 * x - s.a2 * out;
            v = out;
        }
    }
}

// Per-section state for a unit-step input in steady state, scaled through
// the DC gains of the preceding sections.
void steady_state(std::span<const Section> sos, std::vector<double>& z0, std::vector<double>& z1) {
    z0.assign(sos.size(), 0.0);
    z1.assign(sos.size(), 0.0);
    double scale = 1.0;
    for (std::size_t j = 0; j < sos.size(); ++j) {
        const Section& s = sos[j];
        const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        z1[j] = scale * (s.b2 - s.a2 * g);
        z0[j] = scale * (s.b1 - s.a1 * g) + z1[j];
        scale *= g;
    }
}

}  // namespace

std::vector<double> sosfilt(std::span<const Section> sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_cascade(sos, y, std::vector<double>(sos.size()), std::vector<double>(sos.size()));
    return y;
}

std::vector<double> sosfiltfilt(std::span<const Section> sos, std::span<const double> x, int padlen, PadMode mode) {
    if (x.empty()) return {};
    std::size_t pad = padlen < 0 ? 3 * (2 * sos.size() + 1) : static_cast<std::size_t>(padlen);
    pad = std::min(pad, x.size() - 1);
    const std::size_t n = x.size();
    std::vector<double> ext(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) {
        if (mode == PadMode::Odd) {
            ext[i] = 2.0 * x[0] - x[pad - i];
            ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
        } else {
            ext[i] = x[pad - i];
            ext[pad + n + i] = x[n - 2 - i];
        }
    }
    std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

    std::vector<double> z0, z1;
    steady_state(sos, z0, z1);
    auto scaled = [](std::vector<double> v, double s) {
        for (double& e : v) e *= s;
        return v;
    };
    run_cascade(sos, ext, scaled(z0, ext.front()), scaled(z1, ext.front()));
    std::reverse(ext.begin(), ext.end());
    run_cascade(sos, ext, scaled(z0, ext.front()), scaled(z1, ext.front()));
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> moving_average(std::span<const double> x, std::size_t width) {
    if (width == 0 || width % 2 == 0) throw InvalidInput("moving_average: width must be odd");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(width / 2);
    std::vector<double> y(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t j = i - half; j <= i + half; ++j) sum += x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, n - 1))];
        y[static_cast<std::size_t>(i)] = sum / static_cast<double>(width);
    }
    return y;
}

}  // namespace wcae::filt
