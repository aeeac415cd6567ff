#include "cvid/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cvid/error.hpp"

namespace cvid {

float FlowField::magnitude_mean() const {
    double sum = 0.0;
    for (size_t i = 0; i < dx.size(); ++i)
        sum += std::sqrt(static_cast<double>(dx[i]) * dx[i] + static_cast<double>(dy[i]) * dy[i]);
    return static_cast<float>(sum / static_cast<double>(dx.size()));
}

namespace {

constexpr int kPolyRadius = 2;     // 5x5 expansion window
constexpr double kPolySigma = 1.1;
constexpr int kBlurRadius = 2;     // 5-tap neighborhood averaging of G and h
constexpr double kBlurSigma = 1.5;
constexpr int kIterations = 3;
constexpr int kLevels = 2;

// Per-pixel quadratic model f(x) ~ xT A x + bT x + c in window-local coords.
struct PolyGrid {
    int h = 0, w = 0;
    // A = [[axx, axy], [axy, ayy]]
    std::vector<double> axx, ayy, axy, bx, by;
};

// Weighted least squares of the 6-coefficient quadratic over a clipped
// Gaussian window; certainty is zero outside the frame, so border fits stay
// exact for polynomial signals.
PolyGrid poly_expansion(const GrayFrame& img) {
    PolyGrid g;
    g.h = img.height;
    g.w = img.width;
    const size_t n = static_cast<size_t>(g.h) * g.w;
    g.axx.resize(n);
    g.ayy.resize(n);
    g.axy.resize(n);
    g.bx.resize(n);
    g.by.resize(n);

    std::array<double, 2 * kPolyRadius + 1> wgt{};
    for (int k = -kPolyRadius; k <= kPolyRadius; ++k)
        wgt[static_cast<size_t>(k + kPolyRadius)] = std::exp(-0.5 * k * k / (kPolySigma * kPolySigma));

    // basis order: 1, x, y, x^2, y^2, xy
    double m[6][6];
    double rhs[6];
    for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            for (auto& row : m) std::fill(std::begin(row), std::end(row), 0.0);
            std::fill(std::begin(rhs), std::end(rhs), 0.0);
            for (int ky = -kPolyRadius; ky <= kPolyRadius; ++ky) {
                const int sy = y + ky;
                if (sy < 0 || sy >= g.h) continue;
                for (int kx = -kPolyRadius; kx <= kPolyRadius; ++kx) {
                    const int sx = x + kx;
                    if (sx < 0 || sx >= g.w) continue;
                    const double wv = wgt[static_cast<size_t>(ky + kPolyRadius)] *
                                      wgt[static_cast<size_t>(kx + kPolyRadius)];
                    const double base[6] = {1.0,
                                            static_cast<double>(kx),
                                            static_cast<double>(ky),
                                            static_cast<double>(kx) * kx,
                                            static_cast<double>(ky) * ky,
                                            static_cast<double>(kx) * ky};
                    const double f = img.at(sy, sx);
                    for (int i = 0; i < 6; ++i) {
                        for (int j = i; j < 6; ++j) m[i][j] += wv * base[i] * base[j];
                        rhs[i] += wv * base[i] * f;
                    }
                }
            }
            for (int i = 1; i < 6; ++i)
                for (int j = 0; j < i; ++j) m[i][j] = m[j][i];

            // gaussian elimination with partial pivoting
            double a[6][7];
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) a[i][j] = m[i][j];
                a[i][6] = rhs[i];
            }
            for (int col = 0; col < 6; ++col) {
                int piv = col;
                for (int r = col + 1; r < 6; ++r)
                    if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
                if (std::fabs(a[piv][col]) < 1e-12) continue;  // degenerate: leave coefficient at 0
                if (piv != col)
                    for (int j = col; j < 7; ++j) std::swap(a[piv][j], a[col][j]);
                for (int r = 0; r < 6; ++r) {
                    if (r == col) continue;
                    const double factor = a[r][col] / a[col][col];
                    for (int j = col; j < 7; ++j) a[r][j] -= factor * a[col][j];
                }
            }
            double coef[6];
            for (int i = 0; i < 6; ++i)
                coef[i] = std::fabs(a[i][i]) < 1e-12 ? 0.0 : a[i][6] / a[i][i];

            const size_t idx = static_cast<size_t>(y) * g.w + x;
            g.bx[idx] = coef[1];
            g.by[idx] = coef[2];
            g.axx[idx] = coef[3];
            g.ayy[idx] = coef[4];
            g.axy[idx] = coef[5] * 0.5;
        }
    }
    return g;
}

GrayFrame downsample2(const GrayFrame& img) {
    GrayFrame out{img.height / 2, img.width / 2, {}};
    out.pixels.resize(static_cast<size_t>(out.height) * out.width);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(y, x) = 0.25f * (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) +
                                    img.at(2 * y + 1, 2 * x) + img.at(2 * y + 1, 2 * x + 1));
    return out;
}

// separable normalized Gaussian blur; weights renormalized over the
// in-bounds support so borders are not darkened
void blur_field(std::vector<double>& v, int h, int w) {
    std::array<double, 2 * kBlurRadius + 1> wgt{};
    for (int k = -kBlurRadius; k <= kBlurRadius; ++k)
        wgt[static_cast<size_t>(k + kBlurRadius)] = std::exp(-0.5 * k * k / (kBlurSigma * kBlurSigma));
    std::vector<double> tmp(v.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, norm = 0.0;
            for (int k = -kBlurRadius; k <= kBlurRadius; ++k) {
                const int sx = x + k;
                if (sx < 0 || sx >= w) continue;
                const double wv = wgt[static_cast<size_t>(k + kBlurRadius)];
                acc += wv * v[static_cast<size_t>(y) * w + sx];
                norm += wv;
            }
            tmp[static_cast<size_t>(y) * w + x] = acc / norm;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, norm = 0.0;
            for (int k = -kBlurRadius; k <= kBlurRadius; ++k) {
                const int sy = y + k;
                if (sy < 0 || sy >= h) continue;
                const double wv = wgt[static_cast<size_t>(k + kBlurRadius)];
                acc += wv * tmp[static_cast<size_t>(sy) * w + x];
                norm += wv;
            }
            v[static_cast<size_t>(y) * w + x] = acc / norm;
        }
}

// one matching pass: displacement solve from averaged expansions under the
// current flow estimate
void refine(const PolyGrid& p1, const PolyGrid& p2, std::vector<double>& fx,
            std::vector<double>& fy) {
    const int h = p1.h, w = p1.w;
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<double> g11(n), g12(n), g22(n), h1(n), h2(n);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const int x2 = std::clamp(static_cast<int>(std::lround(x + fx[i])), 0, w - 1);
            const int y2 = std::clamp(static_cast<int>(std::lround(y + fy[i])), 0, h - 1);
            const size_t j = static_cast<size_t>(y2) * w + x2;
            const double axx = 0.5 * (p1.axx[i] + p2.axx[j]);
            const double ayy = 0.5 * (p1.ayy[i] + p2.ayy[j]);
            const double axy = 0.5 * (p1.axy[i] + p2.axy[j]);
            const double ox = x2 - x, oy = y2 - y;  // offset actually sampled
            const double dbx = -0.5 * (p2.bx[j] - p1.bx[i]) + axx * ox + axy * oy;
            const double dby = -0.5 * (p2.by[j] - p1.by[i]) + axy * ox + ayy * oy;
            g11[i] = axx * axx + axy * axy;
            g12[i] = axx * axy + axy * ayy;
            g22[i] = axy * axy + ayy * ayy;
            h1[i] = axx * dbx + axy * dby;
            h2[i] = axy * dbx + ayy * dby;
        }
    }
    blur_field(g11, h, w);
    blur_field(g12, h, w);
    blur_field(g22, h, w);
    blur_field(h1, h, w);
    blur_field(h2, h, w);

    for (size_t i = 0; i < n; ++i) {
        const double det = g11[i] * g22[i] - g12[i] * g12[i];
        if (det > 1e-9) {
            fx[i] = (g22[i] * h1[i] - g12[i] * h2[i]) / det;
            fy[i] = (g11[i] * h2[i] - g12[i] * h1[i]) / det;
        } else {
            fx[i] = 0.0;
            fy[i] = 0.0;
        }
    }
}

}  // namespace

FlowField optical_flow(const GrayFrame& a, const GrayFrame& b) {
    if (a.height != b.height || a.width != b.width)
        throw Error::dimension("optical_flow frames differ in size");
    if (a.height < 8 || a.width < 8)
        throw Error::validation("optical_flow needs frames of at least 8x8");

    std::vector<GrayFrame> pyr_a{a}, pyr_b{b};
    for (int l = 1; l < kLevels; ++l) {
        pyr_a.push_back(downsample2(pyr_a.back()));
        pyr_b.push_back(downsample2(pyr_b.back()));
    }

    std::vector<double> fx, fy;
    for (int level = kLevels - 1; level >= 0; --level) {
        const GrayFrame& la = pyr_a[static_cast<size_t>(level)];
        const GrayFrame& lb = pyr_b[static_cast<size_t>(level)];
        const size_t n = static_cast<size_t>(la.height) * la.width;
        if (level == kLevels - 1) {
            fx.assign(n, 0.0);
            fy.assign(n, 0.0);
        } else {
            // nearest upsample of the coarser estimate, doubled
            const int ch = pyr_a[static_cast<size_t>(level + 1)].height;
            const int cw = pyr_a[static_cast<size_t>(level + 1)].width;
            std::vector<double> ux(n), uy(n);
            for (int y = 0; y < la.height; ++y)
                for (int x = 0; x < la.width; ++x) {
                    const size_t src = static_cast<size_t>(std::min(y / 2, ch - 1)) * cw +
                                       std::min(x / 2, cw - 1);
                    ux[static_cast<size_t>(y) * la.width + x] = 2.0 * fx[src];
                    uy[static_cast<size_t>(y) * la.width + x] = 2.0 * fy[src];
                }
            fx = std::move(ux);
            fy = std::move(uy);
        }
        const PolyGrid p1 = poly_expansion(la);
        const PolyGrid p2 = poly_expansion(lb);
        for (int it = 0; it < kIterations; ++it) refine(p1, p2, fx, fy);
    }

    FlowField f;
    f.height = a.height;
    f.width = a.width;
    f.dx.resize(fx.size());
    f.dy.resize(fy.size());
    for (size_t i = 0; i < fx.size(); ++i) {
        f.dx[i] = static_cast<float>(fx[i]);
        f.dy[i] = static_cast<float>(fy[i]);
    }
    return f;
}

double flow_score(const std::vector<GrayFrame>& frames, const FlowFilterConfig& cfg) {
    if (frames.size() < 2) throw Error::validation("flow_score needs at least 2 frames");
    double sum = 0.0;
    for (size_t i = 0; i + 1 < frames.size(); ++i)
        sum += optical_flow(frames[i], frames[i + 1]).magnitude_mean();
    double score = sum / static_cast<double>(frames.size() - 1);
    if (cfg.normalize_by_width) score /= static_cast<double>(frames.front().width);
    return score;
}

std::vector<ClipVerdict> filter_clips(const std::vector<std::pair<std::string, double>>& scores,
                                      const FlowFilterConfig& cfg) {
    std::vector<ClipVerdict> out;
    out.reserve(scores.size());
    for (const auto& [id, score] : scores) {
        ClipVerdict v;
        v.id = id;
        v.score = score;
        if (score < cfg.s1) {
            v.kept = false;
            v.reason = "below_s1";
        } else if (score > cfg.s2) {
            v.kept = false;
            v.reason = "above_s2";
        } else {
            v.kept = true;
            v.reason = "in_range";
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace cvid
