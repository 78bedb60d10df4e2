// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "argcore/scene.hpp"

namespace argcore {

// Binary PPM (P6, 8-bit) image I/O. Images convert to [3,H,W] floats in
// [0,1] on read; writes quantize with round(v*255) so a write/read round
// trip of quantized data is bit-exact.
TensorPtr read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

struct LoadStats {
    int mask_bits_clipped = 0;
    int masks_clipped = 0;
};

// A dataset is a directory holding dataset.jsonl plus an images/ folder of
// PPM frames, one JSON object per line:
//   {"seq_id": str, "group_label": str,
//    "frames": [{"image": "images/<f>.ppm",
//                "actors": [{"actor_id": str, "bbox": [x1,y1,x2,y2],
//                            "mask": {"w": int, "h": int, "rle": [int,...]} | null,
//                            "action": str}]}]}
// Unknown fields are rejected unless lenient is set. Mask bits outside an
// actor's box are clipped with a warning (counted in LoadStats).
std::pair<std::vector<SceneSample>, LabelVocab> load_dataset(const std::string& dir,
                                                             const std::optional<LabelVocab>& vocab = std::nullopt,
                                                             bool lenient = false, LoadStats* stats = nullptr);

void save_dataset(const std::string& dir, const std::vector<SceneSample>& samples, const LabelVocab& vocab);

}  // namespace argcore
