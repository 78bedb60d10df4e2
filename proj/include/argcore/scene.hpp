// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "argcore/tensor.hpp"

namespace argcore {

// Pixel units, origin top-left, pixel centers at integer coordinates.
struct BoundingBox {
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    bool contains(double px, double py) const { return px >= x1 && px <= x2 && py >= y1 && py <= y2; }
};

std::string describe(const BoundingBox& b);

// Full-frame binary raster, run-length encoded: alternating run lengths in
// row-major order, first run counting zeros.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<int> rle;

    static BinaryMask from_bits(int width, int height, const std::vector<std::uint8_t>& bits);
    std::vector<std::uint8_t> decode() const;  // length width*height, values 0/1

    // Zeroes bits outside the box; returns the number of bits removed.
    int clip_to_box(const BoundingBox& box);
};

struct Actor {
    std::string actor_id;
    BoundingBox bbox;
    std::optional<BinaryMask> mask;
    int action_label = 0;
};

struct FrameData {
    TensorPtr image;         // [3,H,W], values in [0,1]
    std::string image_path;  // dataset-relative path when round-tripping
    std::vector<Actor> actors;
};

struct SceneSample {
    std::string seq_id;
    std::vector<FrameData> frames;
    int group_label = 0;
};

struct LabelVocab {
    std::vector<std::string> actions;
    std::vector<std::string> groups;

    int action_index(const std::string& name) const;  // DataError if unknown
    int group_index(const std::string& name) const;
    bool operator==(const LabelVocab&) const = default;
};

// Uniform temporal sampling: the frame list is split into k contiguous
// segments of equal size and one frame is drawn per segment. Fewer than k
// frames repeat cyclically. Deterministic in the seed.
SceneSample sample_frames(const SceneSample& sample, int k, std::uint64_t seed);

}  // namespace argcore
