#include "cvid/pgm.hpp"

#include <cmath>
#include <fstream>

#include "cvid/error.hpp"

namespace cvid {

namespace {

// next whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

GrayFrame read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open for reading: " + path);
    if (next_token(in) != "P5") throw Error::parse(path + ": not a binary PGM (P5) file");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw Error::parse(path + ": malformed PGM header");
    }
    if (w < 1 || h < 1 || maxval != 255)
        throw Error::parse(path + ": unsupported PGM geometry or maxval");
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw Error::parse(path + ": truncated PGM payload");
    GrayFrame f{h, w, std::vector<float>(raw.size())};
    for (size_t i = 0; i < raw.size(); ++i) f.pixels[i] = static_cast<float>(raw[i]);
    return f;
}

void write_pgm(const GrayFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot open for writing: " + path);
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    for (float v : frame.pixels) {
        const long q = std::lround(std::min(255.0f, std::max(0.0f, v)));
        out.put(static_cast<char>(static_cast<uint8_t>(q)));
    }
    if (!out) throw Error::io("failed writing PGM to " + path);
}

}  // namespace cvid
