// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/synth.hpp"

#include <algorithm>
#include <cmath>

#include "argcore/errors.hpp"

namespace argcore {

namespace {

constexpr std::uint64_t kTagPlan = 0x504c;
constexpr std::uint64_t kTagActor = 0xc2;
constexpr std::uint64_t kTagBg = 0xb6;
constexpr std::uint64_t kTagBlob = 0xa1;
constexpr std::uint64_t kTagJunk = 0xd7;

struct Palette {
    double r, g, b;
};
constexpr Palette kClusterBase[2] = {{0.80, 0.30, 0.25}, {0.25, 0.35, 0.80}};

double stripe(int cluster, int px, int py) {
    const double t = cluster == 0 ? py : px;
    return 0.12 * std::sin(2.0 * 3.14159265358979323846 * t / 4.0);
}

double margin_of(const GeneratorConfig& cfg) { return cfg.box_size / 2.0 + cfg.position_jitter + 1.0; }

// Deterministic site layout: the two pair anchors first, then singleton far
// anchors on a site_min_distance lattice, all mutually farther than
// site_min_distance from each other and from the pair.
std::vector<std::pair<double, double>> site_template(const GeneratorConfig& cfg, int n_far) {
    const double m = margin_of(cfg);
    const double xmax = cfg.frame_w - 1 - m;
    const double ymax = cfg.frame_h - 1 - m;
    std::vector<std::pair<double, double>> anchors;
    anchors.emplace_back(m, m);
    double p2x = m + cfg.pair_distance, p2y = m;
    if (p2x > xmax) {
        p2x = m;
        p2y = m + cfg.pair_distance;
        if (p2y > ymax) throw ConfigError("generator: pair_distance does not fit the frame");
    }
    anchors.emplace_back(p2x, p2y);

    const double s = cfg.site_min_distance;
    for (double y = m; y <= ymax + 1e-9 && static_cast<int>(anchors.size()) < n_far + 2; y += s) {
        for (double x = m; x <= xmax + 1e-9 && static_cast<int>(anchors.size()) < n_far + 2; x += s) {
            bool ok = true;
            for (const auto& [ax, ay] : anchors) {
                if (std::hypot(x - ax, y - ay) < s) {
                    ok = false;
                    break;
                }
            }
            if (ok) anchors.emplace_back(x, y);
        }
    }
    if (static_cast<int>(anchors.size()) < n_far + 2) {
        throw ConfigError("generator: cannot place " + std::to_string(n_far + 2) + " actor boxes in a " +
                          std::to_string(cfg.frame_w) + "x" + std::to_string(cfg.frame_h) + " frame");
    }
    return anchors;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (sequences < 1) throw ConfigError("generator: sequences must be >= 1");
    if (actors_min < 2) throw ConfigError("generator: at least 2 actors are required");
    if (actors_max < actors_min) throw ConfigError("generator: actors_max < actors_min");
    if (frames < 1) throw ConfigError("generator: frames must be >= 1");
    if (frame_h < 8 || frame_w < 8) throw ConfigError("generator: frames must be at least 8x8");
    if (box_size < 3.0) throw ConfigError("generator: box_size must be >= 3");
    if (blob_radius <= 0.0) throw ConfigError("generator: blob_radius must be > 0");
    if (blob_radius + blob_center_jitter > box_size / 2.0 - 0.1) {
        throw ConfigError("generator: disc (radius + jitter) must fit strictly inside the box");
    }
    if (mu <= 0.0) throw ConfigError("generator: mu must be > 0");
    if (pair_distance < 0.0) throw ConfigError("generator: pair_distance must be >= 0");
    if (pair_distance + 2.0 * position_jitter * 1.4143 > mu) {
        throw ConfigError("generator: pair_distance + jitter exceeds mu; the pair would not relate");
    }
    if (site_min_distance <= mu + 2.0 * position_jitter * 1.4143) {
        throw ConfigError("generator: site_min_distance must exceed mu plus jitter slack");
    }
    if (pair_distance < box_size + 1.0 && !split_pair_frames) {
        throw ConfigError("generator: co-located pair boxes overlap; enable split_pair_frames");
    }
    if (split_pair_frames && frames < 2) {
        throw ConfigError("generator: split_pair_frames requires at least 2 frames");
    }
    if (distractor_amplitude < 0.0 || distractor_amplitude > 1.0) {
        throw ConfigError("generator: distractor_amplitude must be in [0,1]");
    }
    site_template(*this, actors_max - 2);  // placement feasibility
}

SequencePlan plan_sequence(const GeneratorConfig& cfg, Rng& rng) {
    const int n = static_cast<int>(rng.uniform_int(cfg.actors_min, cfg.actors_max));
    const bool matched = rng.coin();
    const int c = static_cast<int>(rng.uniform_int(0, 1));

    std::vector<int> clusters;
    clusters.push_back(c);                          // pair member A
    clusters.push_back(matched ? c : 1 - c);        // pair member B

    // Non-pair clusters: the first two balance the pair's contribution to the
    // scene's cluster multiset, the rest come in complementary pairs plus at
    // most one free draw. The multiset is then label-independent.
    std::vector<int> far;
    const int r = n - 2;
    if (r >= 2) {
        if (matched) {
            far.push_back(1 - c);
            far.push_back(1 - c);
        } else {
            const int y = static_cast<int>(rng.uniform_int(0, 1));
            far.push_back(y);
            far.push_back(1 - y);
        }
    } else if (r == 1) {
        far.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    int rest = r - static_cast<int>(far.size());
    while (rest >= 2) {
        const int x = static_cast<int>(rng.uniform_int(0, 1));
        far.push_back(x);
        far.push_back(1 - x);
        rest -= 2;
    }
    if (rest == 1) far.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    rng.shuffle(far);
    clusters.insert(clusters.end(), far.begin(), far.end());

    auto anchors = site_template(cfg, r);
    anchors.resize(static_cast<std::size_t>(n));

    // whole-layout mirroring keeps all pairwise distances intact
    const bool mx = rng.coin();
    const bool my = rng.coin();
    for (auto& [ax, ay] : anchors) {
        if (mx) ax = (cfg.frame_w - 1) - ax;
        if (my) ay = (cfg.frame_h - 1) - ay;
    }

    SequencePlan plan;
    plan.matched = matched;
    plan.actors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ActorPlan a;
        a.cx = anchors[static_cast<std::size_t>(i)].first + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
        a.cy = anchors[static_cast<std::size_t>(i)].second + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
        a.cluster = clusters[static_cast<std::size_t>(i)];
        a.is_pair_member = i < 2;
        if (cfg.split_pair_frames && i < 2) {
            a.in_even_frames = (i == 0);
            a.in_odd_frames = (i == 1);
        }
        plan.actors[static_cast<std::size_t>(i)] = a;
    }
    rng.shuffle(plan.actors);
    return plan;
}

LabelVocab synth_vocab() {
    LabelVocab v;
    v.actions = {"alpha", "beta"};
    v.groups = {"matched", "mixed"};
    return v;
}

namespace {

std::vector<SceneSample> generate(const GeneratorConfig& cfg, std::uint64_t seed, double amplitude) {
    cfg.validate();
    const LabelVocab vocab = synth_vocab();
    const int w = cfg.frame_w, h = cfg.frame_h;
    const std::size_t plane = static_cast<std::size_t>(w) * h;

    std::vector<SceneSample> out;
    out.reserve(static_cast<std::size_t>(cfg.sequences));

    for (int si = 0; si < cfg.sequences; ++si) {
        const std::uint64_t su = static_cast<std::uint64_t>(si);
        Rng plan_rng(derive_seed(seed, {kTagPlan, su}));
        const SequencePlan plan = plan_sequence(cfg, plan_rng);
        const int n = static_cast<int>(plan.actors.size());

        // fixed per-actor appearance: tint and disc offset
        struct ActorAppearance {
            double tint[3];
            double ox, oy;
            double junk_tint[3];
        };
        std::vector<ActorAppearance> app(static_cast<std::size_t>(n));
        for (int ai = 0; ai < n; ++ai) {
            Rng ar(derive_seed(seed, {kTagActor, su, static_cast<std::uint64_t>(ai)}));
            for (double& t : app[static_cast<std::size_t>(ai)].tint) t = ar.uniform(-0.08, 0.08);
            app[static_cast<std::size_t>(ai)].ox = ar.uniform(-cfg.blob_center_jitter, cfg.blob_center_jitter);
            app[static_cast<std::size_t>(ai)].oy = ar.uniform(-cfg.blob_center_jitter, cfg.blob_center_jitter);
            for (double& t : app[static_cast<std::size_t>(ai)].junk_tint) t = ar.uniform(-0.08, 0.08);
        }

        SceneSample s;
        char sid[16];
        std::snprintf(sid, sizeof(sid), "seq%05d", si);
        s.seq_id = sid;
        s.group_label = vocab.group_index(plan.matched ? "matched" : "mixed");

        for (int fi = 0; fi < cfg.frames; ++fi) {
            const std::uint64_t fu = static_cast<std::uint64_t>(fi);
            std::vector<unsigned char> img(plane * 3);

            Rng bg(derive_seed(seed, {kTagBg, su, fu}));
            std::vector<double> bgval(plane * 3);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int ch = 0; ch < 3; ++ch) {
                        const double v = 0.5 + bg.uniform(-0.05, 0.05);
                        bgval[static_cast<std::size_t>(ch) * plane + static_cast<std::size_t>(y) * w + x] = v;
                    }

            FrameData frame;
            const bool even = fi % 2 == 0;
            for (int ai = 0; ai < n; ++ai) {
                const ActorPlan& ap = plan.actors[static_cast<std::size_t>(ai)];
                const bool visible = even ? ap.in_even_frames : ap.in_odd_frames;
                if (!visible) continue;

                const double half = cfg.box_size / 2.0;
                BoundingBox box{ap.cx - half, ap.cy - half, ap.cx + half, ap.cy + half};
                const double bx = ap.cx + app[static_cast<std::size_t>(ai)].ox;
                const double by = ap.cy + app[static_cast<std::size_t>(ai)].oy;
                const double r2 = cfg.blob_radius * cfg.blob_radius;

                Rng blob_rng(derive_seed(seed, {kTagBlob, su, static_cast<std::uint64_t>(ai), fu}));
                Rng junk_rng(derive_seed(seed, {kTagJunk, su, static_cast<std::uint64_t>(ai), fu}));
                // random sub-rectangle of the box that carries distractor texture
                const double jw = cfg.box_size * junk_rng.uniform(0.35, 0.95);
                const double jh = cfg.box_size * junk_rng.uniform(0.35, 0.95);
                const double jx = box.x1 + junk_rng.uniform(0.0, cfg.box_size - jw);
                const double jy = box.y1 + junk_rng.uniform(0.0, cfg.box_size - jh);

                const int x_lo = std::max(0, static_cast<int>(std::ceil(box.x1)));
                const int x_hi = std::min(w - 1, static_cast<int>(std::floor(box.x2)));
                const int y_lo = std::max(0, static_cast<int>(std::ceil(box.y1)));
                const int y_hi = std::min(h - 1, static_cast<int>(std::floor(box.y2)));

                std::vector<std::uint8_t> bits(plane, 0);
                const Palette own = kClusterBase[ap.cluster];
                const Palette other = kClusterBase[1 - ap.cluster];
                for (int py = y_lo; py <= y_hi; ++py) {
                    for (int px = x_lo; px <= x_hi; ++px) {
                        const double dx = px - bx, dy = py - by;
                        const std::size_t at = static_cast<std::size_t>(py) * w + px;
                        if (dx * dx + dy * dy <= r2) {
                            bits[at] = 1;
                            const double base[3] = {own.r, own.g, own.b};
                            const double st = stripe(ap.cluster, px, py);
                            for (int ch = 0; ch < 3; ++ch) {
                                const double v = base[ch] + app[static_cast<std::size_t>(ai)].tint[ch] + st +
                                                 blob_rng.uniform(-0.06, 0.06);
                                bgval[static_cast<std::size_t>(ch) * plane + at] = v;
                            }
                        } else if (px >= jx && px <= jx + jw && py >= jy && py <= jy + jh) {
                            const double base[3] = {other.r, other.g, other.b};
                            const double st = stripe(1 - ap.cluster, px, py);
                            for (int ch = 0; ch < 3; ++ch) {
                                const double jv = base[ch] + app[static_cast<std::size_t>(ai)].junk_tint[ch] + st +
                                                  junk_rng.uniform(-0.06, 0.06);
                                double& dst = bgval[static_cast<std::size_t>(ch) * plane + at];
                                dst = dst + amplitude * (jv - dst);
                            }
                        }
                    }
                }

                Actor actor;
                actor.actor_id = "a" + std::to_string(ai);
                actor.bbox = box;
                actor.action_label = ap.cluster;
                actor.mask = BinaryMask::from_bits(w, h, bits);
                frame.actors.push_back(std::move(actor));
            }

            for (std::size_t i = 0; i < plane * 3; ++i) {
                const double v = std::clamp(bgval[i], 0.0, 1.0);
                img[i] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
            std::vector<double> data(plane * 3);
            for (std::size_t i = 0; i < plane * 3; ++i) data[i] = img[i] / 255.0;
            // planar storage already: bgval/img are [3][H][W]
            frame.image = Tensor::create({3, h, w}, std::move(data));
            frame.image_path = "images/" + s.seq_id + "_f" + std::to_string(fi) + ".ppm";
            s.frames.push_back(std::move(frame));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

std::vector<SceneSample> synth_relational(const GeneratorConfig& cfg, std::uint64_t seed) {
    return generate(cfg, seed, 0.0);
}

std::vector<SceneSample> synth_distractor(const GeneratorConfig& cfg, std::uint64_t seed) {
    return generate(cfg, seed, cfg.distractor_amplitude);
}

GeneratorConfig small_scene_config() {
    GeneratorConfig cfg;
    cfg.sequences = 1;
    cfg.actors_min = 3;
    cfg.actors_max = 3;
    cfg.frames = 2;
    cfg.frame_h = 32;
    cfg.frame_w = 40;
    cfg.box_size = 8.0;
    cfg.blob_radius = 3.0;
    cfg.blob_center_jitter = 0.0;
    cfg.pair_distance = 10.0;
    cfg.site_min_distance = 15.0;
    cfg.position_jitter = 0.5;
    cfg.mu = 12.0;
    cfg.split_pair_frames = false;
    return cfg;
}

}  // namespace argcore
