#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites. They deliberately avoid the library's fast paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "handcue/imgcore.hpp"

namespace oracle {

using handcue::imgcore::BinaryMask;
using handcue::imgcore::Frame;

inline std::int64_t rect_sum(const Frame& f, int x, int y, int w, int h) {
    std::int64_t s = 0;
    for (int j = y; j < y + h; ++j)
        for (int i = x; i < x + w; ++i) s += f.at(i, j);
    return s;
}

// Direct 2-D convolution with the outer-product Gaussian, clamp-to-border.
inline std::vector<double> blur2d(const Frame& f, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k1(2 * r + 1);
    double total = 0;
    for (int i = -r; i <= r; ++i) total += k1[i + r] = std::exp(-(i * i) / (2 * sigma * sigma));
    for (auto& v : k1) v /= total;
    std::vector<double> out(f.pixel_count());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            double acc = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = std::clamp(x + dx, 0, f.width() - 1);
                    const int sy = std::clamp(y + dy, 0, f.height() - 1);
                    acc += k1[dx + r] * k1[dy + r] * f.at(sx, sy);
                }
            out[static_cast<std::size_t>(y) * f.width() + x] = acc;
        }
    return out;
}

// Set-definition morphology; pixels outside the image are simply absent.
inline BinaryMask dilate(const BinaryMask& m, int r) {
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool v = false;
            for (int dy = -r; dy <= r && !v; ++dy)
                for (int dx = -r; dx <= r && !v; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx >= 0 && sy >= 0 && sx < m.width() && sy < m.height()) v = m.get(sx, sy);
                }
            out.set(x, y, v);
        }
    return out;
}

inline BinaryMask erode(const BinaryMask& m, int r) {
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool v = true;
            for (int dy = -r; dy <= r && v; ++dy)
                for (int dx = -r; dx <= r && v; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx >= 0 && sy >= 0 && sx < m.width() && sy < m.height()) v = m.get(sx, sy);
                }
            out.set(x, y, v);
        }
    return out;
}

inline bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

// Recursive flood fill, 8-connectivity.
inline int count_components(const BinaryMask& m) {
    std::vector<char> seen(m.size(), 0);
    std::function<void(int, int)> fill = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= m.width() || y >= m.height()) return;
        const std::size_t i = static_cast<std::size_t>(y) * m.width() + x;
        if (seen[i] || !m[i]) return;
        seen[i] = 1;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx || dy) fill(x + dx, y + dy);
    };
    int n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * m.width() + x;
            if (m[i] && !seen[i]) {
                ++n;
                fill(x, y);
            }
        }
    return n;
}

inline Frame random_gray(std::mt19937& rng, int w, int h) {
    Frame f(w, h, 1);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& v : f.data()) v = static_cast<std::uint8_t>(d(rng));
    return f;
}

inline BinaryMask random_mask(std::mt19937& rng, int w, int h, double p) {
    BinaryMask m(w, h);
    std::bernoulli_distribution d(p);
    for (auto& v : m.bits()) v = d(rng) ? 1 : 0;
    return m;
}

}  // namespace oracle
