// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <string>
#include <vector>

#include "argcore/scene.hpp"
#include "argcore/tensor.hpp"

namespace argcore {

enum class RoiPool { avg, max };

struct FeatureConfig {
    int channels = 16;  // backbone output channels; the stack is 3 -> 8 -> 16 -> channels
    int roi_p = 5;
    int roi_samples = 2;
    RoiPool pool = RoiPool::avg;
    int embed_dim = 64;
    bool use_masks = true;
};

struct FeatureMap {
    TensorPtr tensor;           // [C, H', W']
    double spatial_scale = 1.0;  // feature pixels per image pixel
};

struct ConvLayerParams {
    TensorPtr kernels;  // [Cout, Cin, 3, 3]
    TensorPtr bias;     // [Cout]
};

struct BackboneParams {
    std::array<ConvLayerParams, 3> layers;
};

struct EmbedParams {
    TensorPtr weight;  // [C*P*P, d]
    TensorPtr bias;    // [1, d]
};

// Bilinear interpolation against pixel centers at integer coordinates;
// out-of-range queries clamp to the border pixel center.
struct BilinearSample {
    int x0, y0, x1, y1;
    double w00, w10, w01, w11;  // weights for (x0,y0), (x1,y0), (x0,y1), (x1,y1)
};
BilinearSample bilinear_at(double x, double y, int width, int height);
double bilinear(const FeatureMap& fm, int channel, double x, double y);

// Three 3x3 stride-2 convolutions (3 -> 8 -> 16 -> channels, padding 1) with
// ReLU between them; spatial scale 1/8. Input must be at least 8x8.
FeatureMap backbone_forward(const TensorPtr& image, const BackboneParams& params);

// Pools a P x P grid over the box with samples x samples bilinear taps per
// bin. Box coordinates are scaled by spatial_scale with no rounding.
TensorPtr roi_align(const FeatureMap& fm, const BoundingBox& box, int p, int samples,
                    RoiPool pool = RoiPool::avg);

// Fractional mask coverage per RoI bin, sampled at the same relative points
// as roi_align but against the full-resolution 0/1 raster. Values in [0,1].
TensorPtr mask_to_grid(const BinaryMask& mask, const BoundingBox& box, int p, int samples);

// Per-channel Hadamard product of RoI features with the coverage grid.
TensorPtr mask_filter(const TensorPtr& roi_feat, const TensorPtr& mask_grid);

struct ActorFeatureMatrix {
    TensorPtr x;  // [N, d]
    std::vector<std::array<double, 2>> positions;  // box centers, image pixels
    std::vector<int> frame_index;
    std::vector<std::string> actor_ids;
    std::vector<int> action_labels;

    int rows() const { return x ? x->dim(0) : 0; }
};

// Runs every (frame, actor) through backbone -> RoIAlign -> optional mask
// filter -> flatten -> learned projection; rows ordered by frame, then by
// annotation order within the frame.
ActorFeatureMatrix build_actor_matrix(const SceneSample& sampled, const BackboneParams& backbone,
                                      const EmbedParams& embed, const FeatureConfig& cfg);

}  // namespace argcore
