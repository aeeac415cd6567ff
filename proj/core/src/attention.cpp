#include "cvid/attention.hpp"

#include <cmath>
#include <string>

#include "cvid/error.hpp"
#include "cvid/rng.hpp"

namespace cvid {

namespace {

Tensor gaussian_matrix(int rows, int cols, uint64_t key) {
    Tensor t({rows, cols});
    CounterRng rng(key);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(rows));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.gaussian() * stddev);
    return t;
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
    Tensor out({a.dim(0), c1 - c0});
    for (int i = 0; i < a.dim(0); ++i)
        for (int j = c0; j < c1; ++j) out.at(i, j - c0) = a.at(i, j);
    return out;
}

}  // namespace

Tensor attention_values(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || !k.same_shape(v))
        throw Error::dimension("attention_values expects rank-2 q and matching k/v");
    if (k.dim(1) != q.dim(1))
        throw Error::dimension("attention_values dim mismatch: q " + q.shape_str() + " vs k " +
                               k.shape_str());
    const int d = q.dim(1);
    const int dh = d / heads;
    Tensor out({q.dim(0), d});
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dh));
        Tensor logits({qh.dim(0), kh.dim(0)});
        for (int i = 0; i < qh.dim(0); ++i)
            for (int j = 0; j < kh.dim(0); ++j) {
                double acc = 0.0;
                for (int r = 0; r < dh; ++r)
                    acc += static_cast<double>(qh.at(i, r)) * kh.at(j, r);
                logits.at(i, j) = static_cast<float>(acc * inv_sqrt_d);
            }
        Tensor attn = matmul(softmax_rows(logits), vh);
        for (int i = 0; i < attn.dim(0); ++i)
            for (int j = 0; j < dh; ++j) out.at(i, h * dh + j) = attn.at(i, j);
    }
    return out;
}

namespace {

void check_query(const FrameQuery& q, const AttentionLayer& layer) {
    if (q.q.rank() != 2 || q.q.dim(0) != q.positions())
        throw Error::dimension("frame query rows " + q.q.shape_str() + " do not match resolution " +
                               std::to_string(q.height) + "x" + std::to_string(q.width));
    if (q.q.dim(1) != layer.d)
        throw Error::dimension("frame query dim " + std::to_string(q.q.dim(1)) +
                               " does not match layer d " + std::to_string(layer.d));
}

void check_mask_resolution(const RegionMask& mask, const FrameQuery& q, const char* what) {
    if (mask.height != q.height || mask.width != q.width)
        throw Error::dimension(std::string(what) + " resolution " + std::to_string(mask.height) + "x" +
                               std::to_string(mask.width) + " does not match query resolution " +
                               std::to_string(q.height) + "x" + std::to_string(q.width));
}

}  // namespace

AttentionLayer AttentionLayer::seeded(uint64_t seed, int d_model, int d_source, int d, int heads) {
    if (d < 1 || heads < 1 || d % heads != 0)
        throw Error::validation("attention dim " + std::to_string(d) +
                                " must be a positive multiple of heads " + std::to_string(heads));
    AttentionLayer layer;
    layer.d = d;
    layer.heads = heads;
    layer.w_q = gaussian_matrix(d_model, d, CounterRng::derive(seed, 11));
    layer.w_k = gaussian_matrix(d_source, d, CounterRng::derive(seed, 12));
    layer.w_v = gaussian_matrix(d_source, d, CounterRng::derive(seed, 13));
    return layer;
}

FrameQuery project_query(const Tensor& features, const AttentionLayer& layer, int height, int width) {
    if (features.rank() != 2 || features.dim(0) != height * width)
        throw Error::dimension("frame features " + features.shape_str() + " do not cover " +
                               std::to_string(height) + "x" + std::to_string(width) + " positions");
    return FrameQuery{matmul(features, layer.w_q), height, width};
}

Tensor cross_attention(const FrameQuery& q, const TextEmbedding& emb, const AttentionLayer& layer) {
    check_query(q, layer);
    if (emb.dim != layer.source_dim())
        throw Error::dimension("embedding dim " + std::to_string(emb.dim) +
                               " does not match layer key-side input " +
                               std::to_string(layer.source_dim()));
    Tensor k = matmul(emb.values, layer.w_k);
    Tensor v = matmul(emb.values, layer.w_v);
    return attention_values(q.q, k, v, layer.heads);
}

Tensor masked_subobject_attention(const FrameQuery& q, const TextEmbedding& sub_emb,
                                  const RegionMask& mask, const AttentionLayer& layer) {
    check_mask_resolution(mask, q, "sub-object mask");
    Tensor out = cross_attention(q, sub_emb, layer);
    for (int p = 0; p < out.dim(0); ++p) {
        if (mask.values[static_cast<size_t>(p)]) continue;
        for (int j = 0; j < out.dim(1); ++j) out.at(p, j) = 0.0f;
    }
    return out;
}

Tensor compose_regions(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw Error::validation("compose_regions needs at least one part");
    Tensor out = parts.front();
    for (size_t i = 1; i < parts.size(); ++i) out = add(out, parts[i]);
    return out;
}

Tensor blend_global(const Tensor& original, const Tensor& region, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error::validation("alpha must lie in [0,1], got " + std::to_string(alpha));
    if (!original.same_shape(region))
        throw Error::dimension("blend_global shape mismatch: " + original.shape_str() + " vs " +
                               region.shape_str());
    Tensor out = original;
    for (int64_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<float>(alpha * original[i] + (1.0 - alpha) * region[i]);
    return out;
}

Tensor temporal_concat(const std::vector<Tensor>& frames) {
    if (frames.empty()) throw Error::validation("temporal_concat needs at least one frame");
    const Tensor& first = frames.front();
    if (first.rank() != 2)
        throw Error::dimension("temporal_concat expects rank-2 frames, got " + first.shape_str());
    for (const Tensor& f : frames)
        if (!f.same_shape(first))
            throw Error::dimension("temporal_concat shape mismatch: " + f.shape_str() + " vs " +
                                   first.shape_str());
    Tensor out({static_cast<int>(frames.size()), first.dim(0), first.dim(1)});
    for (size_t t = 0; t < frames.size(); ++t)
        for (int i = 0; i < first.dim(0); ++i)
            for (int j = 0; j < first.dim(1); ++j)
                out.at(static_cast<int>(t), i, j) = frames[t].at(i, j);
    return out;
}

Tensor frame_compositional_attention(const FrameQuery& q, const TemporalSegment& segment,
                                     const TextEncoder& encoder, const AttentionLayer& layer,
                                     double alpha, BlendMode mode, AttnDump* dump) {
    Tensor original = cross_attention(q, encoder.encode(segment.prompt), layer);

    std::vector<Tensor> parts;
    parts.reserve(segment.objects.size());
    std::vector<uint8_t> covered(static_cast<size_t>(q.positions()), 0);
    for (const SubObject& obj : segment.objects) {
        RegionMask mask = rasterize_mask(obj.box, q.height, q.width);
        for (int p = 0; p < q.positions(); ++p)
            covered[static_cast<size_t>(p)] |= mask.values[static_cast<size_t>(p)];
        parts.push_back(masked_subobject_attention(q, encoder.encode(obj.prompt), mask, layer));
    }
    Tensor region = compose_regions(parts);
    Tensor blended = blend_global(original, region, alpha);
    if (mode == BlendMode::coverage_renormalized) {
        for (int p = 0; p < q.positions(); ++p) {
            if (covered[static_cast<size_t>(p)]) continue;
            for (int j = 0; j < blended.dim(1); ++j) blended.at(p, j) = original.at(p, j);
        }
    }
    if (dump) {
        dump->original = original;
        dump->masked_subobjects = parts;
        dump->region_sum = region;
        dump->blended = blended;
    }
    return blended;
}

Tensor spatio_temporal_cross_attention(const std::vector<Tensor>& frame_features,
                                       const PromptPlan& plan, const AttentionLayer& layer,
                                       const TextEncoder& encoder, int height, int width,
                                       BlendMode mode) {
    if (frame_features.empty())
        throw Error::validation("spatio_temporal_cross_attention needs at least one frame");
    if (static_cast<int>(frame_features.size()) != plan.total_frames)
        throw Error::dimension("plan covers " + std::to_string(plan.total_frames) +
                               " frames but " + std::to_string(frame_features.size()) +
                               " feature frames were given");
    std::vector<Tensor> per_frame;
    per_frame.reserve(frame_features.size());
    for (size_t f = 0; f < frame_features.size(); ++f) {
        FrameQuery q = project_query(frame_features[f], layer, height, width);
        const TemporalSegment& seg = segment_for_frame(plan, static_cast<int>(f));
        per_frame.push_back(frame_compositional_attention(q, seg, encoder, layer, plan.alpha, mode));
    }
    return temporal_concat(per_frame);
}

Tensor reference_frame_attention(const FrameQuery& q, const RefContext& ctx,
                                 const RegionMask& current_mask, const AttentionLayer& layer) {
    check_query(q, layer);
    check_mask_resolution(current_mask, q, "current mask");
    if (ctx.x_ref.rank() != 2 || ctx.x_ref.dim(1) != layer.source_dim())
        throw Error::dimension("x_ref " + ctx.x_ref.shape_str() + " does not match layer key-side input " +
                               std::to_string(layer.source_dim()));
    const int ref_positions = ctx.height * ctx.width;
    if (ctx.frame_count * ref_positions != ctx.x_ref.dim(0) ||
        ctx.object_mask.height != ctx.height || ctx.object_mask.width != ctx.width)
        throw Error::dimension("reference context grid does not match its x_ref rows");

    // zero query rows outside the current region before the product
    Tensor masked_q = q.q;
    for (int p = 0; p < masked_q.dim(0); ++p) {
        if (current_mask.values[static_cast<size_t>(p)]) continue;
        for (int j = 0; j < masked_q.dim(1); ++j) masked_q.at(p, j) = 0.0f;
    }

    // zero reference rows outside the object's source region
    Tensor masked_ref = ctx.x_ref;
    for (int row = 0; row < masked_ref.dim(0); ++row) {
        const int pos = row % ref_positions;
        if (ctx.object_mask.values[static_cast<size_t>(pos)]) continue;
        for (int j = 0; j < masked_ref.dim(1); ++j) masked_ref.at(row, j) = 0.0f;
    }

    Tensor k = matmul(masked_ref, layer.w_k);
    Tensor v = matmul(masked_ref, layer.w_v);
    Tensor out = attention_values(masked_q, k, v, layer.heads);
    for (int p = 0; p < out.dim(0); ++p) {
        if (current_mask.values[static_cast<size_t>(p)]) continue;
        for (int j = 0; j < out.dim(1); ++j) out.at(p, j) = 0.0f;
    }
    return out;
}

}  // namespace cvid
