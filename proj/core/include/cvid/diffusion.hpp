#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cvid/attention.hpp"
#include "cvid/encoders.hpp"
#include "cvid/plan.hpp"
#include "cvid/rng.hpp"
#include "cvid/tensor.hpp"

namespace cvid {

// Variance schedule over the full training-step range.
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> betas;
    std::vector<double> alpha_bars;  // cumulative products of (1 - beta)

    // alpha_bar at step t, with t == -1 denoting the clean terminal state.
    double alpha_bar(int t) const;
};

// How the two endpoint betas are interpolated. `linear` takes them as given;
// `sqrt_linear` interpolates their square roots, for configurations whose
// endpoint values follow the sqrt-space convention.
enum class BetaInterp { linear, sqrt_linear };

NoiseSchedule linear_beta_schedule(int steps, double beta0, double betaT,
                                   BetaInterp interp = BetaInterp::linear);

// Rank-4 latent clip [frames, 4, height, width].
struct LatentVideo {
    Tensor data;

    LatentVideo() = default;
    explicit LatentVideo(Tensor t);
    LatentVideo(int frames, int height, int width);

    static constexpr int kChannels = 4;
    int frames() const { return data.dim(0); }
    int height() const { return data.dim(2); }
    int width() const { return data.dim(3); }
};

struct SamplerConfig {
    int ddim_steps = 50;
    double eta = 1.0;
    double guidance_scale = 7.5;
    uint64_t seed = 0;
    int workers = 1;                     // frame-parallel denoiser workers
    bool reference_conditioning = true;  // RefAttn on previous-chunk frames
};

// forward process q(x_t | x_0) for the epsilon parametrization
LatentVideo add_noise(const LatentVideo& x0, const LatentVideo& noise, int t,
                      const NoiseSchedule& sched);

// eps_uncond + scale * (eps_cond - eps_uncond)
LatentVideo cfg_combine(const LatentVideo& eps_cond, const LatentVideo& eps_uncond, double scale);

// One DDIM update from step t to step t_prev (t_prev == -1 lands on the
// clean state). rng supplies the stochastic term when eta > 0.
LatentVideo ddim_step(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const SamplerConfig& cfg, const NoiseSchedule& sched, CounterRng& rng);

// The ddim_steps timesteps used for sampling: uniform over [0, steps-1]
// inclusive of both ends, ascending.
std::vector<int> ddim_timesteps(int schedule_steps, int ddim_steps);

// Anything that predicts epsilon. plan == nullptr selects the unconditional
// path; refs may be empty.
class EpsilonModel {
public:
    virtual ~EpsilonModel() = default;
    virtual LatentVideo predict(const LatentVideo& x_t, int t, const PromptPlan* plan,
                                std::span<const RefContext> refs, int workers) const = 0;
};

enum class RefAttnPlacement { after_cross_attention, before_cross_attention };

struct DenoiserConfig {
    int channels = 16;   // hidden width
    int attn_dim = 16;   // attention dim at both resolutions
    int text_dim = 32;   // text-encoder embedding width
    int heads = 1;
    int ref_frames = 2;  // reference frames carried across chunks
    uint64_t seed = 0x6c1dULL;
    // Reference residual gain. Negative: an epsilon-space push opposite the
    // retrieved content steers the implied clean frame toward it.
    double ref_gate = -1.5;
    RefAttnPlacement ref_placement = RefAttnPlacement::after_cross_attention;
    BlendMode blend = BlendMode::literal;
};

// Small seeded two-resolution conv/attention network standing in for a
// pretrained video U-Net. Frames are processed independently; the only
// cross-frame coupling is reference conditioning. After the attention
// stages every op is per-position, so masked reference residuals cannot
// leak outside their regions.
class ToyDenoiser : public EpsilonModel {
public:
    explicit ToyDenoiser(const DenoiserConfig& cfg = {});

    LatentVideo predict(const LatentVideo& x_t, int t, const PromptPlan* plan,
                        std::span<const RefContext> refs, int workers) const override;

    const DenoiserConfig& config() const { return cfg_; }
    const TextEncoder& text_encoder() const { return text_encoder_; }
    const ReferenceEncoder& reference_encoder() const { return ref_encoder_; }

    // Union, at full latent resolution, of every region a reference residual
    // can touch (each context's mask plus the footprint of its half-res
    // counterpart). Outside this mask, predictions with and without refs are
    // bit-identical.
    RegionMask reference_footprint(std::span<const RefContext> refs, int height, int width) const;

private:
    struct ResBlock {
        Tensor conv_a, bias_a, conv_b, bias_b;
    };
    struct AttnSite {
        AttentionLayer text;
        Tensor w_out;  // [d, channels]
        AttentionLayer ref;
        Tensor w_ref_out;  // [d, channels]
    };

    Tensor frame_eps(const Tensor& frame, int t, const TemporalSegment* segment, double alpha,
                     std::span<const RefContext> refs,
                     const std::vector<Tensor>& ref_k, const std::vector<Tensor>& ref_v) const;

    DenoiserConfig cfg_;
    TextEncoder text_encoder_;
    ReferenceEncoder ref_encoder_;
    Tensor conv_in_, conv_in_bias_;
    Tensor time_table_;  // [1000, channels]
    ResBlock res_full_, res_half_;
    AttnSite site_full_, site_half_;
    Tensor conv_out_, conv_out_bias_;  // 1x1
};

// Conditional epsilon prediction for one timestep.
LatentVideo denoise(const LatentVideo& x_t, int t, const PromptPlan& plan,
                    std::span<const RefContext> refs, const ToyDenoiser& model, int workers = 1);

// Unconditional prediction (empty-prompt embedding, no references).
LatentVideo denoise_unconditional(const LatentVideo& x_t, int t, const ToyDenoiser& model,
                                  int workers = 1);

// Full sampling loop: seeded Gaussian latents, then ddim_steps iterations of
// {conditional + unconditional predict, guidance combine, DDIM update}.
// initial_latents, when given, replaces the seeded Gaussian start (the
// img2img-style entry point; also how the sampler is driven from a known
// forward-noised state). chunk_index separates the noise streams of
// auto-regressive chunks.
LatentVideo generate(const PromptPlan& plan, const SamplerConfig& cfg, const NoiseSchedule& sched,
                     const EpsilonModel& model, int height, int width,
                     std::span<const RefContext> refs = {}, const Tensor* initial_latents = nullptr,
                     int chunk_index = 0);

// Chunked generation: chunk c > 0 is conditioned, via reference attention,
// on the last ref_frames frames of chunk c-1 encoded per sub-object region.
LatentVideo generate_autoregressive(const PromptPlan& plan, int chunk_frames,
                                    const SamplerConfig& cfg, const NoiseSchedule& sched,
                                    const ToyDenoiser& model, int height, int width);

// Contact sheet of every frame's channel-0 slice, min-max normalized per
// frame, tiled into one binary PGM.
void write_preview_pgm(const LatentVideo& video, const std::string& path);

}  // namespace cvid
