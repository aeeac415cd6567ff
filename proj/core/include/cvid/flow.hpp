#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cvid/pgm.hpp"

namespace cvid {

// Dense per-pixel displacement from one frame to the next, in pixels.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> dx, dy;  // row-major

    float magnitude_mean() const;
};

struct FlowFilterConfig {
    double s1 = 0.25;
    double s2 = 0.75;
    bool normalize_by_width = true;  // scores as fractions of frame width
};

struct ClipVerdict {
    std::string id;
    double score = 0.0;
    bool kept = false;
    std::string reason;  // "below_s1" | "in_range" | "above_s2"
};

// Dense flow by two-level coarse-to-fine quadratic polynomial-expansion
// matching (window 5, 3 iterations per level). Frames must be at least 8x8
// and the same size; identical frames yield the zero field.
FlowField optical_flow(const GrayFrame& a, const GrayFrame& b);

// Mean over consecutive pairs of the mean per-pixel flow magnitude,
// divided by frame width when normalization is on.
double flow_score(const std::vector<GrayFrame>& frames, const FlowFilterConfig& cfg);

// kept <=> s1 <= score <= s2, bounds inclusive.
std::vector<ClipVerdict> filter_clips(const std::vector<std::pair<std::string, double>>& scores,
                                      const FlowFilterConfig& cfg);

}  // namespace cvid
