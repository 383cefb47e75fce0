#pragma once

// Bit-level model of format 212, written from the byte layout description
// rather than with shifts and masks: each 3-byte group holds 24 bits, listed
// LSB-first per byte, and each sample's 12 bits are placed individually.

#include <array>
#include <cstdint>
#include <vector>

namespace oracle {

// Bit positions (byte index, bit index) of the 12 bits of the two samples,
// from least to most significant.
inline std::array<std::pair<int, int>, 12> sample_bits(int which) {
    std::array<std::pair<int, int>, 12> pos{};
    for (int b = 0; b < 12; ++b) {
        if (which == 0) pos[b] = b < 8 ? std::pair{0, b} : std::pair{1, b - 8};
        else pos[b] = b < 8 ? std::pair{2, b} : std::pair{1, b - 8 + 4};
    }
    return pos;
}

inline std::vector<std::uint8_t> pack212(const std::vector<int>& samples) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < samples.size(); i += 2) {
        std::array<std::array<bool, 8>, 3> bits{};
        for (int which = 0; which < 2; ++which) {
            const int s = i + which < samples.size() ? samples[i + which] : 0;
            const int u = s < 0 ? s + 4096 : s;  // two's complement in 12 bits
            const auto pos = sample_bits(which);
            for (int b = 0; b < 12; ++b) bits[pos[b].first][pos[b].second] = ((u / (1 << b)) % 2) == 1;
        }
        for (int byte = 0; byte < 3; ++byte) {
            int v = 0;
            for (int b = 0; b < 8; ++b) v += bits[byte][b] ? (1 << b) : 0;
            out.push_back(static_cast<std::uint8_t>(v));
        }
    }
    return out;
}

inline std::vector<int> unpack212(const std::vector<std::uint8_t>& bytes, std::size_t count) {
    std::vector<int> out;
    for (std::size_t g = 0; out.size() < count; g += 3) {
        for (int which = 0; which < 2 && out.size() < count; ++which) {
            const auto pos = sample_bits(which);
            int u = 0;
            for (int b = 0; b < 12; ++b) {
                if ((bytes[g + pos[b].first] >> pos[b].second) & 1) u += 1 << b;
            }
            out.push_back(u >= 2048 ? u - 4096 : u);
        }
    }
    return out;
}

}  // namespace oracle
