#include "cvid/plan.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cvid/error.hpp"

namespace cvid {

namespace {

constexpr double kEdgeSlack = 1e-9;

using json = nlohmann::ordered_json;

void check_box(const Box& b, const std::string& field) {
    if (!(b.x >= 0.0 && b.x <= 1.0)) throw Error::validation(field + ".x must lie in [0,1]");
    if (!(b.y >= 0.0 && b.y <= 1.0)) throw Error::validation(field + ".y must lie in [0,1]");
    if (!(b.width > 0.0 && b.width <= 1.0)) throw Error::validation(field + ".width must lie in (0,1]");
    if (!(b.height > 0.0 && b.height <= 1.0)) throw Error::validation(field + ".height must lie in (0,1]");
    if (b.x + b.width > 1.0 + kEdgeSlack) throw Error::validation(field + ": x+width exceeds 1");
    if (b.y + b.height > 1.0 + kEdgeSlack) throw Error::validation(field + ": y+height exceeds 1");
}

}  // namespace

bool Box::overlaps(const Box& o) const {
    const double ix = std::min(x + width, o.x + o.width) - std::max(x, o.x);
    const double iy = std::min(y + height, o.y + o.height) - std::max(y, o.y);
    return ix > kEdgeSlack && iy > kEdgeSlack;
}

int64_t RegionMask::count() const {
    int64_t n = 0;
    for (uint8_t v : values) n += v;
    return n;
}

void validate_plan(PromptPlan& plan) {
    plan.warnings.clear();
    if (plan.total_frames <= 0)
        throw Error::validation("total_frames must be positive");
    if (!(plan.alpha >= 0.0 && plan.alpha <= 1.0))
        throw Error::validation("alpha must lie in [0,1]");
    if (plan.segments.empty())
        throw Error::validation("segments must contain at least one entry");

    std::stable_sort(plan.segments.begin(), plan.segments.end(),
                     [](const TemporalSegment& a, const TemporalSegment& b) {
                         return a.start_frame < b.start_frame;
                     });

    int prev_start = -1;
    for (size_t si = 0; si < plan.segments.size(); ++si) {
        const std::string where = "segments[" + std::to_string(si) + "]";
        TemporalSegment& seg = plan.segments[si];
        if (seg.start_frame < 0)
            throw Error::validation(where + ".start_frame must be nonnegative");
        if (seg.start_frame % 8 != 0)
            throw Error::validation(where + ".start_frame not multiple of 8: " +
                                    std::to_string(seg.start_frame));
        if (seg.start_frame >= plan.total_frames)
            throw Error::validation(where + ".start_frame " + std::to_string(seg.start_frame) +
                                    " is not below total_frames " + std::to_string(plan.total_frames));
        if (seg.start_frame == prev_start)
            throw Error::validation(where + ".start_frame duplicates the previous segment");
        prev_start = seg.start_frame;
        if (seg.prompt.empty())
            throw Error::validation(where + ".prompt must be nonempty");
        if (seg.objects.empty())
            throw Error::validation(where + ".objects must contain at least one sub-object");
        for (size_t oi = 0; oi < seg.objects.size(); ++oi) {
            const std::string ofield = where + ".objects[" + std::to_string(oi) + "]";
            if (seg.objects[oi].prompt.empty())
                throw Error::validation(ofield + ".prompt must be nonempty");
            check_box(seg.objects[oi].box, ofield + ".box");
            for (size_t oj = 0; oj < oi; ++oj) {
                if (seg.objects[oi].box.overlaps(seg.objects[oj].box)) {
                    const std::string msg = ofield + ".box overlaps " + where + ".objects[" +
                                            std::to_string(oj) + "].box";
                    if (plan.allow_overlap)
                        plan.warnings.push_back("overlap allowed: " + msg);
                    else
                        throw Error::validation(msg);
                }
            }
        }
    }
    if (plan.segments.front().start_frame != 0)
        throw Error::validation("first segment must start at frame 0, got " +
                                std::to_string(plan.segments.front().start_frame));
}

PromptPlan parse_plan(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error::parse("plan document: " + std::string(e.what()));
    }
    try {
        if (!doc.is_object()) throw Error::parse("plan document must be a JSON object");
        PromptPlan plan;
        plan.total_frames = doc.at("total_frames").get<int>();
        plan.alpha = doc.value("alpha", 0.5);
        plan.allow_overlap = doc.value("allow_overlap", false);
        for (const auto& jseg : doc.at("segments")) {
            TemporalSegment seg;
            seg.start_frame = jseg.at("start_frame").get<int>();
            seg.prompt = jseg.at("prompt").get<std::string>();
            for (const auto& jobj : jseg.at("objects")) {
                SubObject obj;
                obj.prompt = jobj.at("prompt").get<std::string>();
                const auto& jb = jobj.at("box");
                if (!jb.is_array() || jb.size() != 4)
                    throw Error::validation("box must be an array [x,y,width,height]");
                obj.box = Box{jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(),
                              jb[3].get<double>()};
                seg.objects.push_back(std::move(obj));
            }
            plan.segments.push_back(std::move(seg));
        }
        validate_plan(plan);
        return plan;
    } catch (const json::exception& e) {
        throw Error::parse("plan document: " + std::string(e.what()));
    }
}

std::string serialize_plan(const PromptPlan& plan) {
    json doc;
    doc["total_frames"] = plan.total_frames;
    doc["alpha"] = plan.alpha;
    doc["allow_overlap"] = plan.allow_overlap;
    doc["segments"] = json::array();
    for (const auto& seg : plan.segments) {
        json jseg;
        jseg["start_frame"] = seg.start_frame;
        jseg["prompt"] = seg.prompt;
        jseg["objects"] = json::array();
        for (const auto& obj : seg.objects) {
            json jobj;
            jobj["prompt"] = obj.prompt;
            jobj["box"] = {obj.box.x, obj.box.y, obj.box.width, obj.box.height};
            jseg["objects"].push_back(std::move(jobj));
        }
        doc["segments"].push_back(std::move(jseg));
    }
    return doc.dump(2) + "\n";
}

const TemporalSegment& segment_for_frame(const PromptPlan& plan, int frame) {
    if (frame < 0 || frame >= plan.total_frames)
        throw Error::range("frame " + std::to_string(frame) + " outside [0, " +
                           std::to_string(plan.total_frames) + ")");
    const TemporalSegment* best = nullptr;
    for (const auto& seg : plan.segments) {
        if (seg.start_frame <= frame) best = &seg;
    }
    if (!best) throw Error::validation("plan has no segment covering frame 0");
    return *best;
}

RegionMask rasterize_mask(const Box& box, int height, int width) {
    if (height < 1 || width < 1)
        throw Error::validation("mask resolution must be at least 1x1");
    RegionMask mask = RegionMask::zeros(height, width);
    for (int r = 0; r < height; ++r) {
        const double cy = (r + 0.5) / height;
        for (int c = 0; c < width; ++c) {
            const double cx = (c + 0.5) / width;
            if (box.contains(cx, cy)) mask.at(r, c) = 1;
        }
    }
    return mask;
}

RegionMask downsample_mask(const RegionMask& mask, int height, int width) {
    if (height < 1 || width < 1)
        throw Error::validation("mask resolution must be at least 1x1");
    RegionMask out = RegionMask::zeros(height, width);
    for (int r = 0; r < height; ++r) {
        int sr = static_cast<int>((r + 0.5) * mask.height / height);
        sr = std::min(sr, mask.height - 1);
        for (int c = 0; c < width; ++c) {
            int sc = static_cast<int>((c + 0.5) * mask.width / width);
            sc = std::min(sc, mask.width - 1);
            out.at(r, c) = mask.at(sr, sc);
        }
    }
    return out;
}

PromptPlan plan_window(const PromptPlan& plan, int start_frame, int frame_count) {
    if (start_frame % 8 != 0 || frame_count % 8 != 0)
        throw Error::validation("plan window bounds must be multiples of 8");
    if (start_frame < 0 || frame_count <= 0 || start_frame + frame_count > plan.total_frames)
        throw Error::range("plan window [" + std::to_string(start_frame) + ", " +
                           std::to_string(start_frame + frame_count) + ") outside plan of " +
                           std::to_string(plan.total_frames) + " frames");
    PromptPlan out;
    out.total_frames = frame_count;
    out.alpha = plan.alpha;
    out.allow_overlap = plan.allow_overlap;
    // governing segment at the window start, then every segment inside it
    TemporalSegment head = segment_for_frame(plan, start_frame);
    head.start_frame = 0;
    out.segments.push_back(std::move(head));
    for (const auto& seg : plan.segments) {
        if (seg.start_frame > start_frame && seg.start_frame < start_frame + frame_count) {
            TemporalSegment s = seg;
            s.start_frame -= start_frame;
            out.segments.push_back(std::move(s));
        }
    }
    validate_plan(out);
    return out;
}

}  // namespace cvid
