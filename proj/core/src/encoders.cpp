#include "cvid/encoders.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cvid/error.hpp"
#include "cvid/rng.hpp"

namespace cvid {

TextEmbedding TextEmbedding::null(int dim) {
    return TextEmbedding{1, dim, Tensor({1, dim})};
}

TextEncoder::TextEncoder(int dim, uint64_t vocab_seed) : dim_(dim), vocab_seed_(vocab_seed) {
    if (dim < 1) throw Error::validation("text encoder dim must be positive");
}

TextEmbedding TextEncoder::encode(std::string_view prompt) const {
    std::vector<std::string_view> tokens;
    size_t i = 0;
    while (i < prompt.size()) {
        while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
        size_t start = i;
        while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
        if (i > start) tokens.push_back(prompt.substr(start, i - start));
    }
    if (tokens.empty()) throw Error::validation("cannot encode an empty prompt");

    Tensor values({static_cast<int>(tokens.size()), dim_});
    for (size_t t = 0; t < tokens.size(); ++t) {
        CounterRng rng(CounterRng::derive(vocab_seed_, hash64(tokens[t])));
        double norm_sq = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const float v = static_cast<float>(rng.gaussian());
            values.at(static_cast<int>(t), j) = v;
            norm_sq += static_cast<double>(v) * v;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (int j = 0; j < dim_; ++j)
            values.at(static_cast<int>(t), j) = static_cast<float>(values.at(static_cast<int>(t), j) * inv);
    }
    return TextEmbedding{static_cast<int>(tokens.size()), dim_, std::move(values)};
}

namespace {

Tensor gaussian_tensor(std::vector<int> shape, uint64_t key, double stddev) {
    Tensor t(std::move(shape));
    CounterRng rng(key);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.gaussian() * stddev);
    return t;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

}  // namespace

ReferenceEncoder ReferenceEncoder::seeded(uint64_t seed) {
    ReferenceEncoder enc;
    const double conv_std = 0.25 / std::sqrt(4.0 * 9.0);
    enc.conv_kernel = gaussian_tensor({kConvChannels, kInChannels, 3, 3},
                                      CounterRng::derive(seed, 1), conv_std);
    enc.conv_bias = Tensor({kConvChannels});
    // identity tap: leading output channels copy the raw latent channels
    for (int c = 0; c < kInChannels; ++c) enc.conv_kernel.at(c, c, 1, 1) += 1.0f;

    enc.w1 = gaussian_tensor({kHiddenDim, kHiddenDim}, CounterRng::derive(seed, 2),
                             0.25 / std::sqrt(static_cast<double>(kHiddenDim)));
    enc.b1 = Tensor({kHiddenDim});
    for (int c = 0; c < kHiddenDim; ++c) enc.w1.at(c, c) += 1.0f;

    enc.w2 = gaussian_tensor({kHiddenDim, kOutputDim}, CounterRng::derive(seed, 3),
                             0.25 / std::sqrt(static_cast<double>(kHiddenDim)));
    enc.b2 = Tensor({kOutputDim});
    for (int c = 0; c < kHiddenDim; ++c) enc.w2.at(c, c) += 1.0f;
    return enc;
}

RefContext encode_reference(const Tensor& frames, const ReferenceEncoder& enc) {
    if (frames.rank() != 4)
        throw Error::dimension("encode_reference expects frames [l,4,h,w], got " + frames.shape_str());
    if (frames.dim(1) != ReferenceEncoder::kInChannels)
        throw Error::dimension("encode_reference expects 4 latent channels, got " +
                               std::to_string(frames.dim(1)));
    const int l = frames.dim(0), h = frames.dim(2), w = frames.dim(3);
    const int tokens = l * h * w;

    // conv each frame, then gather per-position feature rows frame-major
    Tensor features({tokens, ReferenceEncoder::kConvChannels});
    for (int f = 0; f < l; ++f) {
        Tensor frame({ReferenceEncoder::kInChannels, h, w});
        for (int c = 0; c < ReferenceEncoder::kInChannels; ++c)
            for (int r = 0; r < h; ++r)
                for (int x = 0; x < w; ++x) frame.at(c, r, x) = frames.at(f, c, r, x);
        Tensor conv = conv2d(frame, enc.conv_kernel, 1, enc.conv_bias);
        for (int r = 0; r < h; ++r)
            for (int x = 0; x < w; ++x) {
                const int row = (f * h + r) * w + x;
                for (int c = 0; c < ReferenceEncoder::kConvChannels; ++c)
                    features.at(row, c) = conv.at(c, r, x);
            }
    }

    Tensor hidden = matmul(features, enc.w1);
    for (int r = 0; r < tokens; ++r)
        for (int c = 0; c < ReferenceEncoder::kHiddenDim; ++c) {
            float v = hidden.at(r, c) + enc.b1[c];
            hidden.at(r, c) = enc.hidden_activation == Activation::silu ? silu(v) : v;
        }

    Tensor x_ref = matmul(hidden, enc.w2);
    for (int r = 0; r < tokens; ++r)
        for (int c = 0; c < ReferenceEncoder::kOutputDim; ++c) x_ref.at(r, c) += enc.b2[c];

    RefContext ctx;
    ctx.x_ref = std::move(x_ref);
    ctx.object_mask = RegionMask::ones(h, w);
    ctx.frame_start = 0;
    ctx.frame_count = l;
    ctx.height = h;
    ctx.width = w;
    return ctx;
}

}  // namespace cvid
