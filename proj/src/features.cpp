// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/features.hpp"

#include <algorithm>
#include <cmath>

#include "argcore/errors.hpp"

namespace argcore {

BilinearSample bilinear_at(double x, double y, int width, int height) {
    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
    BilinearSample s;
    s.x0 = static_cast<int>(std::floor(x));
    s.y0 = static_cast<int>(std::floor(y));
    s.x1 = std::min(s.x0 + 1, width - 1);
    s.y1 = std::min(s.y0 + 1, height - 1);
    const double fx = x - s.x0;
    const double fy = y - s.y0;
    s.w00 = (1.0 - fx) * (1.0 - fy);
    s.w10 = fx * (1.0 - fy);
    s.w01 = (1.0 - fx) * fy;
    s.w11 = fx * fy;
    return s;
}

double bilinear(const FeatureMap& fm, int channel, double x, double y) {
    const int h = fm.tensor->dim(1), w = fm.tensor->dim(2);
    const BilinearSample s = bilinear_at(x, y, w, h);
    const Tensor& t = *fm.tensor;
    return s.w00 * t.at(channel, s.y0, s.x0) + s.w10 * t.at(channel, s.y0, s.x1) +
           s.w01 * t.at(channel, s.y1, s.x0) + s.w11 * t.at(channel, s.y1, s.x1);
}

FeatureMap backbone_forward(const TensorPtr& image, const BackboneParams& params) {
    if (image->shape.size() != 3) throw DimensionError("backbone: expected [C,H,W], got " + format_shape(image->shape));
    if (image->dim(1) < 8 || image->dim(2) < 8) {
        throw ConfigError("backbone: input " + format_shape(image->shape) + " smaller than the required 8x8");
    }
    TensorPtr z = image;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        z = add_channel_bias(conv2d(z, params.layers[l].kernels, 2, 1), params.layers[l].bias);
        if (l + 1 < params.layers.size()) z = relu(z);
    }
    return FeatureMap{z, 1.0 / 8.0};
}

namespace {

// Channel-independent sampling plan for one box: 4 taps + weights per
// (bin, sub-sample), shared by the forward pass and the backward closure.
struct RoiPlan {
    std::vector<BilinearSample> taps;  // p*p*samples*samples entries
    int p = 0, samples = 0;
};

RoiPlan plan_roi(const BoundingBox& box, double scale, int p, int samples, int width, int height) {
    if (p < 1) throw ConfigError("roi_align: bins per side must be >= 1");
    if (samples < 1) throw ConfigError("roi_align: samples per bin side must be >= 1");
    const double x1 = box.x1 * scale, y1 = box.y1 * scale;
    const double x2 = box.x2 * scale, y2 = box.y2 * scale;
    const double bw = x2 - x1, bh = y2 - y1;
    if (bw < 1e-6 || bh < 1e-6) {
        throw DataError("roi_align: degenerate scaled box " + describe(box) + " at scale " + std::to_string(scale));
    }
    RoiPlan plan;
    plan.p = p;
    plan.samples = samples;
    plan.taps.reserve(static_cast<std::size_t>(p) * p * samples * samples);
    const double cell_w = bw / p, cell_h = bh / p;
    for (int by = 0; by < p; ++by) {
        for (int bx = 0; bx < p; ++bx) {
            for (int sy = 0; sy < samples; ++sy) {
                for (int sx = 0; sx < samples; ++sx) {
                    const double qx = x1 + bx * cell_w + (sx + 0.5) * cell_w / samples;
                    const double qy = y1 + by * cell_h + (sy + 0.5) * cell_h / samples;
                    plan.taps.push_back(bilinear_at(qx, qy, width, height));
                }
            }
        }
    }
    return plan;
}

double apply_tap(const double* chan, int w, const BilinearSample& t) {
    return t.w00 * chan[static_cast<std::size_t>(t.y0) * w + t.x0] +
           t.w10 * chan[static_cast<std::size_t>(t.y0) * w + t.x1] +
           t.w01 * chan[static_cast<std::size_t>(t.y1) * w + t.x0] +
           t.w11 * chan[static_cast<std::size_t>(t.y1) * w + t.x1];
}

}  // namespace

TensorPtr roi_align(const FeatureMap& fm, const BoundingBox& box, int p, int samples, RoiPool pool) {
    const TensorPtr& src = fm.tensor;
    if (src->shape.size() != 3) throw DimensionError("roi_align: expected [C,H,W] feature map");
    const int c = src->dim(0), h = src->dim(1), w = src->dim(2);
    RoiPlan plan = plan_roi(box, fm.spatial_scale, p, samples, w, h);
    const int per_bin = samples * samples;

    std::vector<double> out(static_cast<std::size_t>(c) * p * p);
    std::vector<int> argmax;  // per (channel, bin) winning tap, max pooling only
    if (pool == RoiPool::max) argmax.assign(static_cast<std::size_t>(c) * p * p, 0);

    for (int ch = 0; ch < c; ++ch) {
        const double* chan = &src->data[static_cast<std::size_t>(ch) * h * w];
        for (int bin = 0; bin < p * p; ++bin) {
            const BilinearSample* taps = &plan.taps[static_cast<std::size_t>(bin) * per_bin];
            double acc;
            if (pool == RoiPool::avg) {
                acc = 0.0;
                for (int t = 0; t < per_bin; ++t) acc += apply_tap(chan, w, taps[t]);
                acc /= per_bin;
            } else {
                acc = apply_tap(chan, w, taps[0]);
                int best = 0;
                for (int t = 1; t < per_bin; ++t) {
                    const double v = apply_tap(chan, w, taps[t]);
                    if (v > acc) {
                        acc = v;
                        best = t;
                    }
                }
                argmax[static_cast<std::size_t>(ch) * p * p + bin] = best;
            }
            out[static_cast<std::size_t>(ch) * p * p + bin] = acc;
        }
    }

    Tensor* psrc = src.get();
    return Tensor::from_op(
        {c, p, p}, std::move(out), {src},
        [psrc, c, h, w, p, per_bin, pool, plan = std::move(plan), argmax = std::move(argmax)](const Tensor& self) {
            for (int ch = 0; ch < c; ++ch) {
                double* gchan = &psrc->grad[static_cast<std::size_t>(ch) * h * w];
                for (int bin = 0; bin < p * p; ++bin) {
                    const double g = self.grad[static_cast<std::size_t>(ch) * p * p + bin];
                    if (g == 0.0) continue;
                    const BilinearSample* taps = &plan.taps[static_cast<std::size_t>(bin) * per_bin];
                    if (pool == RoiPool::avg) {
                        const double gs = g / per_bin;
                        for (int t = 0; t < per_bin; ++t) {
                            const BilinearSample& s = taps[t];
                            gchan[static_cast<std::size_t>(s.y0) * w + s.x0] += gs * s.w00;
                            gchan[static_cast<std::size_t>(s.y0) * w + s.x1] += gs * s.w10;
                            gchan[static_cast<std::size_t>(s.y1) * w + s.x0] += gs * s.w01;
                            gchan[static_cast<std::size_t>(s.y1) * w + s.x1] += gs * s.w11;
                        }
                    } else {
                        const BilinearSample& s = taps[argmax[static_cast<std::size_t>(ch) * p * p + bin]];
                        gchan[static_cast<std::size_t>(s.y0) * w + s.x0] += g * s.w00;
                        gchan[static_cast<std::size_t>(s.y0) * w + s.x1] += g * s.w10;
                        gchan[static_cast<std::size_t>(s.y1) * w + s.x0] += g * s.w01;
                        gchan[static_cast<std::size_t>(s.y1) * w + s.x1] += g * s.w11;
                    }
                }
            }
        });
}

TensorPtr mask_to_grid(const BinaryMask& mask, const BoundingBox& box, int p, int samples) {
    const std::vector<std::uint8_t> bits = mask.decode();
    std::vector<double> raster(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) raster[i] = bits[i];
    // coverage is always averaged: it is an area fraction, not a feature
    RoiPlan plan = plan_roi(box, 1.0, p, samples, mask.width, mask.height);
    const int per_bin = samples * samples;
    std::vector<double> out(static_cast<std::size_t>(p) * p);
    for (int bin = 0; bin < p * p; ++bin) {
        double acc = 0.0;
        for (int t = 0; t < per_bin; ++t)
            acc += apply_tap(raster.data(), mask.width, plan.taps[static_cast<std::size_t>(bin) * per_bin + t]);
        out[static_cast<std::size_t>(bin)] = acc / per_bin;
    }
    return Tensor::create({p, p}, std::move(out));
}

TensorPtr mask_filter(const TensorPtr& roi_feat, const TensorPtr& mask_grid) {
    if (roi_feat->shape.size() != 3 || mask_grid->shape.size() != 2 || roi_feat->dim(1) != mask_grid->dim(0) ||
        roi_feat->dim(2) != mask_grid->dim(1)) {
        throw DimensionError("mask_filter: features " + format_shape(roi_feat->shape) + " vs grid " +
                             format_shape(mask_grid->shape));
    }
    const int c = roi_feat->dim(0), pp = roi_feat->dim(1) * roi_feat->dim(2);
    std::vector<double> out(roi_feat->data.size());
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < pp; ++i)
            out[static_cast<std::size_t>(ch) * pp + i] =
                roi_feat->data[static_cast<std::size_t>(ch) * pp + i] * mask_grid->data[static_cast<std::size_t>(i)];
    Tensor* pf = roi_feat.get();
    Tensor* pg = mask_grid.get();
    return Tensor::from_op(roi_feat->shape, std::move(out), {roi_feat, mask_grid},
                           [pf, pg, c, pp](const Tensor& self) {
                               if (!pf->requires_grad) return;
                               for (int ch = 0; ch < c; ++ch)
                                   for (int i = 0; i < pp; ++i)
                                       pf->grad[static_cast<std::size_t>(ch) * pp + i] +=
                                           self.grad[static_cast<std::size_t>(ch) * pp + i] *
                                           pg->data[static_cast<std::size_t>(i)];
                           });
}

ActorFeatureMatrix build_actor_matrix(const SceneSample& sampled, const BackboneParams& backbone,
                                      const EmbedParams& embed, const FeatureConfig& cfg) {
    ActorFeatureMatrix result;
    std::vector<TensorPtr> rows;
    for (std::size_t fi = 0; fi < sampled.frames.size(); ++fi) {
        const FrameData& frame = sampled.frames[fi];
        if (frame.actors.empty()) {
            throw DataError("sequence '" + sampled.seq_id + "' frame " + std::to_string(fi) + " has no actors");
        }
        const FeatureMap fm = backbone_forward(frame.image, backbone);
        for (const Actor& actor : frame.actors) {
            TensorPtr feat = roi_align(fm, actor.bbox, cfg.roi_p, cfg.roi_samples, cfg.pool);
            if (cfg.use_masks && actor.mask.has_value()) {
                feat = mask_filter(feat, mask_to_grid(*actor.mask, actor.bbox, cfg.roi_p, cfg.roi_samples));
            }
            const int flat = feat->dim(0) * feat->dim(1) * feat->dim(2);
            rows.push_back(add_rowvec(matmul(reshape(feat, {1, flat}), embed.weight), embed.bias));
            result.positions.push_back({actor.bbox.cx(), actor.bbox.cy()});
            result.frame_index.push_back(static_cast<int>(fi));
            result.actor_ids.push_back(actor.actor_id);
            result.action_labels.push_back(actor.action_label);
        }
    }
    result.x = concat_rows(rows);
    return result;
}

}  // namespace argcore
