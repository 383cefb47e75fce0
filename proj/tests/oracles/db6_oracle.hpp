#pragma once

// Independent construction of the Daubechies db6 scaling filter by
// spectral factorization, in long double. Test-only; shares no code with
// the library's filter bank.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cld = std::complex<long double>;

inline long double binomial(int n, int k) {
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Polynomial roots via Durand-Kerner, polished with Newton.
inline std::vector<cld> poly_roots(const std::vector<long double>& ascending) {
    const int deg = static_cast<int>(ascending.size()) - 1;
    const long double lead = ascending.back();
    auto eval = [&](cld z) {
        cld acc = 0;
        for (int i = deg; i >= 0; --i) acc = acc * z + ascending[i] / lead;
        return acc;
    };
    auto deriv = [&](cld z) {
        cld acc = 0;
        for (int i = deg; i >= 1; --i) acc = acc * z + static_cast<long double>(i) * ascending[i] / lead;
        return acc;
    };
    std::vector<cld> roots(deg);
    const cld seed(0.4L, 0.9L);
    for (int i = 0; i < deg; ++i) roots[i] = std::pow(seed, i);
    for (int iter = 0; iter < 2000; ++iter) {
        for (int i = 0; i < deg; ++i) {
            cld denom = 1;
            for (int j = 0; j < deg; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            roots[i] -= eval(roots[i]) / denom;
        }
    }
    for (auto& r : roots)
        for (int iter = 0; iter < 20; ++iter) r -= eval(r) / deriv(r);
    return roots;
}

/// Minimum-phase db(N) scaling filter, ascending powers of z, sum sqrt(2).
inline std::vector<long double> daubechies_min_phase(int vanishing_moments) {
    const int n = vanishing_moments;
    std::vector<long double> p(n);
    for (int k = 0; k < n; ++k) p[k] = binomial(n - 1 + k, k);
    const auto y_roots = poly_roots(p);

    std::vector<cld> poly{cld(1)};
    auto multiply = [&](cld root) {  // poly *= (z - root)
        std::vector<cld> next(poly.size() + 1, cld(0));
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i + 1] += poly[i];
            next[i] -= poly[i] * root;
        }
        poly = std::move(next);
    };
    for (int i = 0; i < n; ++i) multiply(cld(-1));
    for (const cld& y : y_roots) {
        // (2 - z - 1/z)/4 = y  ->  z^2 - (2 - 4y) z + 1 = 0
        const cld b = cld(2) - cld(4) * y;
        const cld disc = std::sqrt(b * b - cld(4));
        cld z1 = (b + disc) / cld(2);
        cld z2 = (b - disc) / cld(2);
        multiply(std::abs(z1) < 1.0L ? z1 : z2);
    }
    std::vector<long double> h(poly.size());
    long double sum = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        h[i] = poly[i].real();
        sum += h[i];
    }
    const long double scale = std::sqrt(2.0L) / sum;
    for (auto& v : h) v *= scale;
    return h;
}

}  // namespace oracle
