#pragma once

#include <cstdint>
#include <string_view>

#include "cvid/plan.hpp"
#include "cvid/tensor.hpp"

namespace cvid {

// Token embeddings for one prompt: one unit-norm row per whitespace token.
struct TextEmbedding {
    int tokens = 0;
    int dim = 0;
    Tensor values;  // [tokens, dim]

    // Single zero token; stands in for the empty prompt on the
    // unconditional guidance path.
    static TextEmbedding null(int dim);
};

// Deterministic hash-seeded stand-in for a pretrained text encoder: each
// token maps to a fixed pseudo-random unit vector, so distinct prompts give
// distinct, stable key/value sources.
class TextEncoder {
public:
    explicit TextEncoder(int dim, uint64_t vocab_seed = 0x7e57c0de);

    TextEmbedding encode(std::string_view prompt) const;
    int dim() const { return dim_; }

private:
    int dim_;
    uint64_t vocab_seed_;
};

enum class Activation { silu, identity };

// Reference-frame feature encoder: a 3x3 conv over 4-channel latents into
// 320 channels, then a per-position MLP (one hidden layer of 320) to 1024.
struct ReferenceEncoder {
    static constexpr int kInChannels = 4;
    static constexpr int kConvChannels = 320;
    static constexpr int kHiddenDim = 320;
    static constexpr int kOutputDim = 1024;

    Tensor conv_kernel;  // [320, 4, 3, 3]
    Tensor conv_bias;    // [320]
    Tensor w1;           // [320, 320]
    Tensor b1;           // [320]
    Tensor w2;           // [320, 1024]
    Tensor b2;           // [1024]
    Activation hidden_activation = Activation::silu;  // conv itself stays linear

    // Random weights with an identity-favoring component on the leading
    // channels, so encoded features retain a readable copy of the raw
    // latent content for downstream value projections.
    static ReferenceEncoder seeded(uint64_t seed);
};

// Encoded reference frames plus the region their object occupies.
struct RefContext {
    Tensor x_ref;           // [frame_count * height * width, 1024], frame-major
    RegionMask object_mask; // at the reference grid resolution
    int frame_start = 0;    // index k of the first reference frame
    int frame_count = 0;    // l
    int height = 0;         // reference grid rows
    int width = 0;          // reference grid cols
};

// frames: [l, 4, h, w] latents. The returned context carries an all-ones
// object mask and a span starting at 0; callers scope both afterwards.
RefContext encode_reference(const Tensor& frames, const ReferenceEncoder& enc);

}  // namespace cvid
