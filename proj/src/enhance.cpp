#include "ips/enhance.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ips/errors.hpp"

namespace ips::enhance {

sensorio::Frame adaptive_threshold(const sensorio::Frame& frame, int block, double offset) {
    const int w = frame.width;
    const int h = frame.height;
    if (block % 2 == 0 || block < 3 || block > std::min(w, h))
        throw ParamError("adaptive_threshold: block must be odd and within [3, " +
                         std::to_string(std::min(w, h)) + "], got " + std::to_string(block));

    const int r = block / 2;
    const int pw = w + 2 * r;
    const int ph = h + 2 * r;

    // Summed-area table over the border-replicated frame, one extra row/col of zeros.
    std::vector<double> sat(static_cast<size_t>(pw + 1) * (ph + 1), 0.0);
    const auto sat_at = [&](int x, int y) -> double& {
        return sat[static_cast<size_t>(y) * (pw + 1) + x];
    };
    for (int y = 0; y < ph; ++y) {
        const int sy = std::clamp(y - r, 0, h - 1);
        double row = 0.0;
        for (int x = 0; x < pw; ++x) {
            const int sx = std::clamp(x - r, 0, w - 1);
            row += frame.pixels[static_cast<size_t>(sy) * w + sx];
            sat_at(x + 1, y + 1) = sat_at(x + 1, y) + row;
        }
    }

    sensorio::Frame out;
    out.index = frame.index;
    out.t = frame.t;
    out.width = w;
    out.height = h;
    out.pixels.resize(frame.pixels.size());
    const double norm = 1.0 / (static_cast<double>(block) * block);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // window [x, x+block) x [y, y+block) in padded coordinates
            const double sum = sat_at(x + block, y + block) - sat_at(x, y + block) -
                               sat_at(x + block, y) + sat_at(x, y);
            const double mean = sum * norm;
            const double v = frame.pixels[static_cast<size_t>(y) * w + x];
            out.pixels[static_cast<size_t>(y) * w + x] = (v > mean - offset) ? 255 : 0;
        }
    }
    return out;
}

}  // namespace ips::enhance
