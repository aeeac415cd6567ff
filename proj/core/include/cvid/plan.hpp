#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cvid {

// Normalized box, top-left anchored: [x, y, width, height], all fractions of
// the frame. Membership is half-open on the right/bottom edges so disjoint
// boxes rasterize to disjoint masks.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double width = 1.0;
    double height = 1.0;

    bool contains(double px, double py) const {
        return px >= x && px < x + width && py >= y && py < y + height;
    }
    bool overlaps(const Box& o) const;
    double area() const { return width * height; }
    bool operator==(const Box&) const = default;
};

// One described entity with its spatial region.
struct SubObject {
    std::string prompt;
    Box box;
    bool operator==(const SubObject&) const = default;
};

// The plan from one start frame onward: a global prompt plus its spatial
// decomposition. Start frames are multiples of 8.
struct TemporalSegment {
    int start_frame = 0;
    std::string prompt;
    std::vector<SubObject> objects;
    bool operator==(const TemporalSegment&) const = default;
};

// Temporally segmented, spatially decomposed prompt for a whole clip.
struct PromptPlan {
    int total_frames = 0;
    double alpha = 0.5;
    bool allow_overlap = false;
    std::vector<TemporalSegment> segments;

    // populated by validation when allow_overlap downgrades a check
    std::vector<std::string> warnings;

    bool operator==(const PromptPlan& o) const {
        return total_frames == o.total_frames && alpha == o.alpha &&
               allow_overlap == o.allow_overlap && segments == o.segments;
    }
};

// Binary spatial mask at one attention resolution.
struct RegionMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;  // row-major, each 0 or 1

    static RegionMask ones(int h, int w) { return {h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w, 1)}; }
    static RegionMask zeros(int h, int w) { return {h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w, 0)}; }

    uint8_t at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
    uint8_t& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
    int64_t count() const;
    bool operator==(const RegionMask&) const = default;
};

// Parses and validates a plan document (UTF-8 JSON, see README for the
// schema). Segment order is normalized; invariant violations throw a
// validation error naming the offending field.
PromptPlan parse_plan(std::string_view text);

// Canonical JSON serialization; parse(serialize(p)) == p for valid plans.
std::string serialize_plan(const PromptPlan& plan);

// Validates every plan invariant in place; sorts segments by start frame.
// Overlap violations become warnings when allow_overlap is set.
void validate_plan(PromptPlan& plan);

// The segment with the greatest start_frame <= frame.
const TemporalSegment& segment_for_frame(const PromptPlan& plan, int frame);

// Pixel-center rasterization of a box onto an h x w grid.
RegionMask rasterize_mask(const Box& box, int height, int width);

// Nearest-center resampling, for masks whose source box is not available.
RegionMask downsample_mask(const RegionMask& mask, int height, int width);

// A plan restricted to frames [start_frame, start_frame + frame_count), with
// frame indices re-based to 0. Both bounds must be multiples of 8.
PromptPlan plan_window(const PromptPlan& plan, int start_frame, int frame_count);

}  // namespace cvid
