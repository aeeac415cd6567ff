#pragma once

#include <cstdint>
#include <vector>

#include "cvid/encoders.hpp"
#include "cvid/plan.hpp"
#include "cvid/tensor.hpp"

namespace cvid {

// Projection weights for one cross-attention site. Queries come from latent
// frame features (d_model wide), keys/values from text or reference
// encodings (d_source wide).
struct AttentionLayer {
    int d = 0;      // total attention dim
    int heads = 1;  // d splits evenly across heads
    Tensor w_q;     // [d_model, d]
    Tensor w_k;     // [d_source, d]
    Tensor w_v;     // [d_source, d]

    static AttentionLayer seeded(uint64_t seed, int d_model, int d_source, int d, int heads = 1);
    int source_dim() const { return w_k.dim(0); }
};

// Projected queries for the positions of one frame.
struct FrameQuery {
    Tensor q;  // [height*width, d]
    int height = 0;
    int width = 0;
    int positions() const { return height * width; }
};

FrameQuery project_query(const Tensor& features, const AttentionLayer& layer, int height, int width);

// Softmax(q kᵀ / sqrt(d_head)) v over pre-projected keys and values, head by
// head; the shared core of the text and reference paths.
Tensor attention_values(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

// Softmax(Q Kᵀ / sqrt(d_head)) V with K, V projected from the embedding.
Tensor cross_attention(const FrameQuery& q, const TextEmbedding& emb, const AttentionLayer& layer);

// Cross-attention for one sub-object with its output confined to the
// object's region: rows outside the mask are exactly zero.
Tensor masked_subobject_attention(const FrameQuery& q, const TextEmbedding& sub_emb,
                                  const RegionMask& mask, const AttentionLayer& layer);

// Elementwise sum of the per-sub-object attention values.
Tensor compose_regions(const std::vector<Tensor>& parts);

// alpha * original + (1 - alpha) * region.
Tensor blend_global(const Tensor& original, const Tensor& region, double alpha);

// Stack per-frame values into [t, positions, d], order preserved.
Tensor temporal_concat(const std::vector<Tensor>& frames);

// How uncovered positions are blended. literal applies the alpha blend
// everywhere, which scales positions no sub-object covers by alpha;
// coverage_renormalized keeps the plain global attention there instead.
enum class BlendMode { literal, coverage_renormalized };

// Optional capture of every intermediate of one frame's composition.
struct AttnDump {
    Tensor original;
    std::vector<Tensor> masked_subobjects;
    Tensor region_sum;
    Tensor blended;
};

// One frame of the compositional pipeline: global attention, per-sub-object
// masked attention at the query's resolution, region sum, alpha blend.
Tensor frame_compositional_attention(const FrameQuery& q, const TemporalSegment& segment,
                                     const TextEncoder& encoder, const AttentionLayer& layer,
                                     double alpha, BlendMode mode = BlendMode::literal,
                                     AttnDump* dump = nullptr);

// The full spatial-then-temporal composition over a clip: per frame, pick
// the governing segment, compose its sub-objects, blend with the global
// prompt, then concatenate along time. frame_features holds one
// [height*width, d_model] tensor per frame.
Tensor spatio_temporal_cross_attention(const std::vector<Tensor>& frame_features,
                                       const PromptPlan& plan, const AttentionLayer& layer,
                                       const TextEncoder& encoder, int height, int width,
                                       BlendMode mode = BlendMode::literal);

// Cross-attention of the current frame against encoded reference frames.
// Query rows outside current_mask are zeroed before the product, reference
// rows outside the context's object mask are zeroed before projection, and
// output rows outside current_mask are exactly zero.
Tensor reference_frame_attention(const FrameQuery& q, const RefContext& ctx,
                                 const RegionMask& current_mask, const AttentionLayer& layer);

}  // namespace cvid
