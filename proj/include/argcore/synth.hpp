// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "argcore/rng.hpp"
#include "argcore/scene.hpp"

namespace argcore {

// Synthetic relational task generator.
//
// Every sequence contains one designated pair of actors placed within `mu`
// of each other; all other actors sit at sites farther than `mu` from
// everything else. Each actor carries a latent appearance cluster rendered
// as a textured disc; the group label says whether the designated pair
// shares a cluster ("matched") or not ("mixed"). Cluster assignment is
// symmetric under swapping the two clusters and the non-pair actors are
// drawn so the multiset of clusters in a scene has the same distribution
// under both labels (exact for >= 2 non-pair actors). A classifier that sees
// per-actor appearance alone therefore carries no information about the
// label; only the pairing structure does. Individual action labels equal the
// latent cluster.
//
// The distractor variant additionally fills a random sub-region of each box
// outside the disc with texture imitating the opposite cluster, blended at
// `distractor_amplitude`. Pixels inside the disc (and outside boxes) are
// byte-identical to the amplitude-0 rendering.
struct GeneratorConfig {
    int sequences = 64;
    int actors_min = 4;
    int actors_max = 6;
    int frames = 6;  // frames rendered per sequence
    int frame_h = 80;
    int frame_w = 104;
    double box_size = 12.0;
    double blob_radius = 5.0;
    double blob_center_jitter = 0.0;   // disc offset inside the box
    double pair_distance = 29.0;       // 0 places both pair members at one site
    double site_min_distance = 36.0;   // spacing between unrelated sites
    double position_jitter = 1.0;      // per-actor placement jitter, each axis
    double mu = 32.0;                  // proximity radius the labels are built around
    double distractor_amplitude = 1.0; // used by synth_distractor only
    bool split_pair_frames = false;    // pair members alternate between frames

    void validate() const;  // ConfigError when the layout cannot fit the frame
};

struct ActorPlan {
    double cx = 0.0, cy = 0.0;  // box center, fixed across frames
    int cluster = 0;
    bool is_pair_member = false;
    bool in_even_frames = true;
    bool in_odd_frames = true;
};

struct SequencePlan {
    std::vector<ActorPlan> actors;  // row order after shuffling
    bool matched = false;           // pair shares a cluster
};

// Latent plan for one sequence; rendering consumes the plan. Exposed so the
// label/cluster joint distribution can be measured without paying for pixels.
SequencePlan plan_sequence(const GeneratorConfig& cfg, Rng& rng);

LabelVocab synth_vocab();

std::vector<SceneSample> synth_relational(const GeneratorConfig& cfg, std::uint64_t seed);
std::vector<SceneSample> synth_distractor(const GeneratorConfig& cfg, std::uint64_t seed);

// Small layout used by gradient-check drivers and tests: 2-frame sequences,
// 3 actors, 40x32 frames.
GeneratorConfig small_scene_config();

}  // namespace argcore
