// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "argcore/errors.hpp"

namespace argcore {

namespace fs = std::filesystem;
using nlohmann::json;

TensorPtr read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image '" + path + "'");
    std::string magic;
    in >> magic;
    if (magic != "P6") throw ParseError("'" + path + "': not a binary PPM (P6) file");
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0) throw ParseError("'" + path + "': bad PPM dimensions");
    if (maxval != 255) throw ParseError("'" + path + "': only 8-bit PPM supported, maxval=" + std::to_string(maxval));
    in.get();  // single whitespace byte after the header
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ParseError("'" + path + "': truncated pixel data");

    std::vector<double> data(raw.size());
    // interleaved RGB -> planar [3,H,W]
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * w + x] =
                    raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
    return Tensor::create({3, h, w}, std::move(data));
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.shape.size() != 3 || image.shape[0] != 3) {
        throw DimensionError("write_ppm: expected [3,H,W], got " + format_shape(image.shape));
    }
    const int h = image.shape[1], w = image.shape[2];
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image '" + path + "'");
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = image.data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * w + x];
                v = std::clamp(v, 0.0, 1.0);
                raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing image '" + path + "'");
}

namespace {

struct PendingActor {
    std::string actor_id;
    BoundingBox bbox;
    std::optional<BinaryMask> mask;
    std::string action;
};

struct PendingFrame {
    std::string image_rel;
    std::vector<PendingActor> actors;
};

struct PendingSample {
    std::string seq_id;
    std::string group_label;
    std::vector<PendingFrame> frames;
    int line = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw ParseError("dataset.jsonl:" + std::to_string(line) + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, bool lenient, int line,
                const char* where) {
    if (lenient) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) fail(line, std::string("unknown field '") + it.key() + "' in " + where);
    }
}

PendingSample parse_record(const std::string& text, int line, bool lenient) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(line, "record is not a JSON object");
    check_keys(j, {"seq_id", "group_label", "frames"}, lenient, line, "record");

    PendingSample s;
    s.line = line;
    if (!j.contains("seq_id") || !j["seq_id"].is_string()) fail(line, "missing or non-string field 'seq_id'");
    if (!j.contains("group_label") || !j["group_label"].is_string())
        fail(line, "missing or non-string field 'group_label'");
    if (!j.contains("frames") || !j["frames"].is_array()) fail(line, "missing or non-array field 'frames'");
    s.seq_id = j["seq_id"].get<std::string>();
    s.group_label = j["group_label"].get<std::string>();
    if (j["frames"].empty()) fail(line, "sequence '" + s.seq_id + "' has no frames");

    for (const auto& jf : j["frames"]) {
        if (!jf.is_object()) fail(line, "frame is not a JSON object");
        check_keys(jf, {"image", "actors"}, lenient, line, "frame");
        if (!jf.contains("image") || !jf["image"].is_string()) fail(line, "frame missing string field 'image'");
        if (!jf.contains("actors") || !jf["actors"].is_array()) fail(line, "frame missing array field 'actors'");
        PendingFrame f;
        f.image_rel = jf["image"].get<std::string>();
        if (jf["actors"].empty()) fail(line, "frame has no actors");
        for (const auto& ja : jf["actors"]) {
            if (!ja.is_object()) fail(line, "actor is not a JSON object");
            check_keys(ja, {"actor_id", "bbox", "mask", "action"}, lenient, line, "actor");
            PendingActor a;
            if (!ja.contains("actor_id") || !ja["actor_id"].is_string())
                fail(line, "actor missing string field 'actor_id'");
            a.actor_id = ja["actor_id"].get<std::string>();
            if (!ja.contains("bbox") || !ja["bbox"].is_array() || ja["bbox"].size() != 4)
                fail(line, "actor '" + a.actor_id + "' field 'bbox' must be [x1,y1,x2,y2]");
            for (const auto& v : ja["bbox"])
                if (!v.is_number()) fail(line, "actor '" + a.actor_id + "' bbox entries must be numbers");
            a.bbox = BoundingBox{ja["bbox"][0].get<double>(), ja["bbox"][1].get<double>(),
                                 ja["bbox"][2].get<double>(), ja["bbox"][3].get<double>()};
            if (!(a.bbox.x1 < a.bbox.x2)) fail(line, "actor '" + a.actor_id + "' bbox field x1 must be < x2");
            if (!(a.bbox.y1 < a.bbox.y2)) fail(line, "actor '" + a.actor_id + "' bbox field y1 must be < y2");
            if (!ja.contains("action") || !ja["action"].is_string())
                fail(line, "actor '" + a.actor_id + "' missing string field 'action'");
            a.action = ja["action"].get<std::string>();
            if (ja.contains("mask") && !ja["mask"].is_null()) {
                const auto& jm = ja["mask"];
                if (!jm.is_object()) fail(line, "actor mask must be an object or null");
                check_keys(jm, {"w", "h", "rle"}, lenient, line, "mask");
                if (!jm.contains("w") || !jm.contains("h") || !jm.contains("rle") ||
                    !jm["w"].is_number_integer() || !jm["h"].is_number_integer() || !jm["rle"].is_array())
                    fail(line, "actor mask requires integer w, h and array rle");
                BinaryMask m;
                m.width = jm["w"].get<int>();
                m.height = jm["h"].get<int>();
                if (m.width <= 0 || m.height <= 0) fail(line, "mask field w/h must be positive");
                for (const auto& r : jm["rle"]) {
                    if (!r.is_number_integer() || r.get<int>() < 0)
                        fail(line, "mask field rle must hold non-negative integers");
                    m.rle.push_back(r.get<int>());
                }
                a.mask = std::move(m);
            }
            f.actors.push_back(std::move(a));
        }
        s.frames.push_back(std::move(f));
    }
    return s;
}

}  // namespace

std::pair<std::vector<SceneSample>, LabelVocab> load_dataset(const std::string& dir,
                                                             const std::optional<LabelVocab>& vocab, bool lenient,
                                                             LoadStats* stats) {
    const fs::path root(dir);
    const fs::path jsonl = root / "dataset.jsonl";
    std::ifstream in(jsonl);
    if (!in) throw IoError("cannot open '" + jsonl.string() + "'");

    std::vector<PendingSample> pending;
    std::string lineText;
    int lineNo = 0;
    while (std::getline(in, lineText)) {
        ++lineNo;
        if (lineText.find_first_not_of(" \t\r") == std::string::npos) continue;
        pending.push_back(parse_record(lineText, lineNo, lenient));
    }

    LabelVocab vb;
    if (vocab.has_value()) {
        vb = *vocab;
    } else {
        std::set<std::string> actions, groups;
        for (const auto& s : pending) {
            groups.insert(s.group_label);
            for (const auto& f : s.frames)
                for (const auto& a : f.actors) actions.insert(a.action);
        }
        vb.actions.assign(actions.begin(), actions.end());
        vb.groups.assign(groups.begin(), groups.end());
    }

    LoadStats local;
    std::vector<SceneSample> out;
    out.reserve(pending.size());
    for (auto& p : pending) {
        SceneSample s;
        s.seq_id = p.seq_id;
        s.group_label = vb.group_index(p.group_label);
        int frame_w = -1, frame_h = -1;
        for (auto& pf : p.frames) {
            FrameData f;
            f.image_path = pf.image_rel;
            f.image = read_ppm((root / pf.image_rel).string());
            if (frame_w < 0) {
                frame_h = f.image->dim(1);
                frame_w = f.image->dim(2);
            } else if (frame_h != f.image->dim(1) || frame_w != f.image->dim(2)) {
                throw DataError("sequence '" + s.seq_id + "': frames have differing image dimensions");
            }
            for (auto& pa : pf.actors) {
                Actor a;
                a.actor_id = pa.actor_id;
                a.bbox = pa.bbox;
                if (a.bbox.x2 <= 0 || a.bbox.y2 <= 0 || a.bbox.x1 > frame_w - 1 || a.bbox.y1 > frame_h - 1) {
                    throw DataError("actor '" + a.actor_id + "' box " + describe(a.bbox) +
                                    " does not intersect the image plane");
                }
                a.action_label = vb.action_index(pa.action);
                if (pa.mask.has_value()) {
                    if (pa.mask->width != frame_w || pa.mask->height != frame_h) {
                        throw DataError("actor '" + a.actor_id + "' mask is " + std::to_string(pa.mask->width) + "x" +
                                        std::to_string(pa.mask->height) + " but the frame is " +
                                        std::to_string(frame_w) + "x" + std::to_string(frame_h));
                    }
                    BinaryMask m = *pa.mask;
                    const int removed = m.clip_to_box(a.bbox);
                    if (removed > 0) {
                        ++local.masks_clipped;
                        local.mask_bits_clipped += removed;
                        std::cerr << "warning: actor '" << a.actor_id << "' in sequence '" << s.seq_id << "': "
                                  << removed << " mask bits outside the box were clipped\n";
                    }
                    a.mask = std::move(m);
                }
                f.actors.push_back(std::move(a));
            }
            s.frames.push_back(std::move(f));
        }
        out.push_back(std::move(s));
    }
    if (stats) *stats = local;
    return {std::move(out), std::move(vb)};
}

void save_dataset(const std::string& dir, const std::vector<SceneSample>& samples, const LabelVocab& vocab) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    if (ec) throw IoError("cannot create dataset directory '" + dir + "': " + ec.message());

    std::ofstream out(root / "dataset.jsonl");
    if (!out) throw IoError("cannot write '" + (root / "dataset.jsonl").string() + "'");

    for (const auto& s : samples) {
        json jrec;
        jrec["seq_id"] = s.seq_id;
        jrec["group_label"] = vocab.groups.at(static_cast<std::size_t>(s.group_label));
        json jframes = json::array();
        for (std::size_t fi = 0; fi < s.frames.size(); ++fi) {
            const auto& f = s.frames[fi];
            std::string rel = f.image_path;
            if (rel.empty()) rel = "images/" + s.seq_id + "_f" + std::to_string(fi) + ".ppm";
            write_ppm((root / rel).string(), *f.image);
            json jf;
            jf["image"] = rel;
            json jactors = json::array();
            for (const auto& a : f.actors) {
                json ja;
                ja["actor_id"] = a.actor_id;
                ja["bbox"] = {a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2};
                ja["action"] = vocab.actions.at(static_cast<std::size_t>(a.action_label));
                if (a.mask.has_value()) {
                    ja["mask"] = {{"w", a.mask->width}, {"h", a.mask->height}, {"rle", a.mask->rle}};
                } else {
                    ja["mask"] = nullptr;
                }
                jactors.push_back(std::move(ja));
            }
            jf["actors"] = std::move(jactors);
            jframes.push_back(std::move(jf));
        }
        jrec["frames"] = std::move(jframes);
        out << jrec.dump() << "\n";
    }
    if (!out) throw IoError("failed writing dataset to '" + dir + "'");
}

}  // namespace argcore
