// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "argcore/errors.hpp"
#include "argcore/rng.hpp"

namespace argcore {

std::string describe(const BoundingBox& b) {
    std::ostringstream os;
    os << "[" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << "]";
    return os.str();
}

BinaryMask BinaryMask::from_bits(int width, int height, const std::vector<std::uint8_t>& bits) {
    if (width <= 0 || height <= 0) throw DataError("mask dimensions must be positive");
    if (bits.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("mask bit count does not match width*height");
    }
    BinaryMask m;
    m.width = width;
    m.height = height;
    std::uint8_t current = 0;  // runs start with zeros
    int run = 0;
    for (std::uint8_t b : bits) {
        if (b != 0 && b != 1) throw DataError("mask bits must be 0 or 1");
        if (b == current) {
            ++run;
        } else {
            m.rle.push_back(run);
            current = b;
            run = 1;
        }
    }
    m.rle.push_back(run);
    return m;
}

std::vector<std::uint8_t> BinaryMask::decode() const {
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    std::uint8_t current = 0;
    for (int run : rle) {
        if (run < 0) throw DataError("negative run length in mask");
        bits.insert(bits.end(), static_cast<std::size_t>(run), current);
        current = current != 0 ? 0 : 1;
    }
    if (bits.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("mask runs decode to " + std::to_string(bits.size()) + " bits, expected " +
                        std::to_string(static_cast<std::size_t>(width) * height));
    }
    return bits;
}

int BinaryMask::clip_to_box(const BoundingBox& box) {
    std::vector<std::uint8_t> bits = decode();
    int removed = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            auto& b = bits[static_cast<std::size_t>(y) * width + x];
            if (b != 0 && !box.contains(static_cast<double>(x), static_cast<double>(y))) {
                b = 0;
                ++removed;
            }
        }
    }
    if (removed > 0) *this = from_bits(width, height, bits);
    return removed;
}

int LabelVocab::action_index(const std::string& name) const {
    const auto it = std::find(actions.begin(), actions.end(), name);
    if (it == actions.end()) throw DataError("unknown action label '" + name + "'");
    return static_cast<int>(it - actions.begin());
}

int LabelVocab::group_index(const std::string& name) const {
    const auto it = std::find(groups.begin(), groups.end(), name);
    if (it == groups.end()) throw DataError("unknown group label '" + name + "'");
    return static_cast<int>(it - groups.begin());
}

SceneSample sample_frames(const SceneSample& sample, int k, std::uint64_t seed) {
    if (k < 1) throw ConfigError("sample_frames: k must be >= 1");
    const int t = static_cast<int>(sample.frames.size());
    SceneSample out;
    out.seq_id = sample.seq_id;
    out.group_label = sample.group_label;
    out.frames.reserve(static_cast<std::size_t>(k));
    if (t == 0) throw DataError("sample_frames: sequence '" + sample.seq_id + "' has no frames");

    if (t < k) {
        for (int i = 0; i < k; ++i) out.frames.push_back(sample.frames[static_cast<std::size_t>(i % t)]);
        return out;
    }
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const int lo = static_cast<int>((static_cast<std::int64_t>(i) * t) / k);
        const int hi = static_cast<int>((static_cast<std::int64_t>(i + 1) * t) / k);
        const int pick = lo + static_cast<int>(rng.uniform_int(0, hi - lo - 1));
        out.frames.push_back(sample.frames[static_cast<std::size_t>(pick)]);
    }
    return out;
}

}  // namespace argcore
