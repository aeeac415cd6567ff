#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cvid {

// 8-bit grayscale frame held as floats in [0, 255].
struct GrayFrame {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;  // row-major

    float at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
    float& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
};

// Binary PGM (P5, maxval 255) readers/writers.
GrayFrame read_pgm(const std::string& path);
void write_pgm(const GrayFrame& frame, const std::string& path);

}  // namespace cvid
