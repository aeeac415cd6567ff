#include "cvid/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "cvid/error.hpp"

namespace cvid {

// ---- schedule --------------------------------------------------------------

double NoiseSchedule::alpha_bar(int t) const {
    if (t == -1) return 1.0;
    if (t < 0 || t >= steps)
        throw Error::range("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps) + ")");
    return alpha_bars[static_cast<size_t>(t)];
}

NoiseSchedule linear_beta_schedule(int steps, double beta0, double betaT, BetaInterp interp) {
    if (steps < 2) throw Error::validation("schedule needs at least 2 steps");
    if (!(beta0 > 0.0 && beta0 <= betaT && betaT < 1.0))
        throw Error::validation("betas must satisfy 0 < beta0 <= betaT < 1, got beta0=" +
                                std::to_string(beta0) + " betaT=" + std::to_string(betaT));
    NoiseSchedule s;
    s.steps = steps;
    s.betas.resize(static_cast<size_t>(steps));
    s.alpha_bars.resize(static_cast<size_t>(steps));
    const double lo = interp == BetaInterp::linear ? beta0 : std::sqrt(beta0);
    const double hi = interp == BetaInterp::linear ? betaT : std::sqrt(betaT);
    double cumprod = 1.0;
    for (int i = 0; i < steps; ++i) {
        double v = lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
        if (interp == BetaInterp::sqrt_linear) v *= v;
        s.betas[static_cast<size_t>(i)] = v;
        cumprod *= 1.0 - v;
        s.alpha_bars[static_cast<size_t>(i)] = cumprod;
    }
    return s;
}

// ---- latents ---------------------------------------------------------------

LatentVideo::LatentVideo(Tensor t) : data(std::move(t)) {
    if (data.rank() != 4)
        throw Error::dimension("latent video must be rank 4 [t,c,h,w], got " + data.shape_str());
    if (data.dim(1) != kChannels)
        throw Error::validation("latent video must have 4 channels, got " + std::to_string(data.dim(1)));
}

LatentVideo::LatentVideo(int frames, int height, int width)
    : LatentVideo(Tensor({frames, kChannels, height, width})) {}

namespace {

LatentVideo gaussian_like(int frames, int height, int width, uint64_t key) {
    LatentVideo v(frames, height, width);
    CounterRng rng(key);
    for (int64_t i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(rng.gaussian());
    return v;
}

void require_same_shape(const LatentVideo& a, const LatentVideo& b, const char* op) {
    if (!a.data.same_shape(b.data))
        throw Error::dimension(std::string(op) + " shape mismatch: " + a.data.shape_str() + " vs " +
                               b.data.shape_str());
}

}  // namespace

LatentVideo add_noise(const LatentVideo& x0, const LatentVideo& noise, int t,
                      const NoiseSchedule& sched) {
    require_same_shape(x0, noise, "add_noise");
    const double ab = sched.alpha_bar(t);  // range-checks t
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    LatentVideo out = x0;
    for (int64_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(a * x0.data[i] + b * noise.data[i]);
    return out;
}

LatentVideo cfg_combine(const LatentVideo& eps_cond, const LatentVideo& eps_uncond, double scale) {
    require_same_shape(eps_cond, eps_uncond, "cfg_combine");
    LatentVideo out = eps_uncond;
    for (int64_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(eps_uncond.data[i] +
                                         scale * (static_cast<double>(eps_cond.data[i]) - eps_uncond.data[i]));
    return out;
}

LatentVideo ddim_step(const LatentVideo& x_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const SamplerConfig& cfg, const NoiseSchedule& sched, CounterRng& rng) {
    require_same_shape(x_t, eps_hat, "ddim_step");
    if (t_prev >= t) throw Error::range("ddim_step needs t_prev < t");
    const double ab_t = sched.alpha_bar(t);
    const double ab_p = sched.alpha_bar(t_prev);

    const double sigma = cfg.eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) *
                         std::sqrt(std::max(0.0, 1.0 - ab_t / ab_p));
    double radicand = 1.0 - ab_p - sigma * sigma;
    if (radicand < 0.0) {
        if (radicand < -1e-12)
            throw Error::numeric("ddim_step: sigma^2 exceeds 1 - alpha_bar_prev (eta too large)");
        radicand = 0.0;
    }
    const double inv_sqrt_ab_t = 1.0 / std::sqrt(ab_t);
    const double sqrt_one_minus_ab_t = std::sqrt(1.0 - ab_t);
    const double sqrt_ab_p = std::sqrt(ab_p);
    const double dir = std::sqrt(radicand);

    LatentVideo out = x_t;
    const bool stochastic = sigma > 0.0 && t_prev >= 0;
    for (int64_t i = 0; i < out.data.size(); ++i) {
        const double x0_pred = (x_t.data[i] - sqrt_one_minus_ab_t * eps_hat.data[i]) * inv_sqrt_ab_t;
        double v = sqrt_ab_p * x0_pred + dir * eps_hat.data[i];
        if (stochastic) v += sigma * rng.gaussian();
        out.data[i] = static_cast<float>(v);
    }
    ensure_finite(out.data, "ddim_step");
    return out;
}

std::vector<int> ddim_timesteps(int schedule_steps, int ddim_steps) {
    if (ddim_steps < 1 || ddim_steps > schedule_steps)
        throw Error::validation("ddim_steps must lie in [1, schedule steps]");
    std::vector<int> ts;
    ts.reserve(static_cast<size_t>(ddim_steps));
    if (ddim_steps == 1) {
        ts.push_back(schedule_steps - 1);
        return ts;
    }
    for (int i = 0; i < ddim_steps; ++i) {
        const double v = static_cast<double>(i) * (schedule_steps - 1) / (ddim_steps - 1);
        ts.push_back(static_cast<int>(std::lround(v)));
    }
    return ts;
}

// ---- toy denoiser ----------------------------------------------------------

namespace {

constexpr int kTimeSteps = 1000;

Tensor seeded_conv(int c_out, int c_in, int k, uint64_t key, double gain) {
    Tensor t({c_out, c_in, k, k});
    CounterRng rng(key);
    const double stddev = gain / std::sqrt(static_cast<double>(c_in) * k * k);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.gaussian() * stddev);
    return t;
}

Tensor seeded_matrix(int rows, int cols, uint64_t key, double gain) {
    Tensor t({rows, cols});
    CounterRng rng(key);
    const double stddev = gain / std::sqrt(static_cast<double>(rows));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.gaussian() * stddev);
    return t;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

Tensor silu_all(const Tensor& a) {
    Tensor out = a;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = silu(out[i]);
    return out;
}

Tensor avgpool2(const Tensor& a) {
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    Tensor out({c, h / 2, w / 2});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h / 2; ++y)
            for (int x = 0; x < w / 2; ++x)
                out.at(ci, y, x) = 0.25f * (a.at(ci, 2 * y, 2 * x) + a.at(ci, 2 * y, 2 * x + 1) +
                                            a.at(ci, 2 * y + 1, 2 * x) + a.at(ci, 2 * y + 1, 2 * x + 1));
    return out;
}

Tensor upsample2_nearest(const Tensor& a, int h, int w) {
    const int c = a.dim(0);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(ci, y, x) = a.at(ci, y / 2, x / 2);
    return out;
}

Tensor flatten_positions(const Tensor& a) {
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    Tensor out({h * w, c});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(y * w + x, ci) = a.at(ci, y, x);
    return out;
}

void add_rows_as_grid(Tensor& hidden, const Tensor& rows, double gain) {
    const int c = hidden.dim(0), h = hidden.dim(1), w = hidden.dim(2);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                hidden.at(ci, y, x) =
                    static_cast<float>(hidden.at(ci, y, x) + gain * rows.at(y * w + x, ci));
}

}  // namespace

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg)
    : cfg_(cfg),
      text_encoder_(cfg.text_dim, CounterRng::derive(cfg.seed, 100)),
      ref_encoder_(ReferenceEncoder::seeded(CounterRng::derive(cfg.seed, 101))) {
    const int c = cfg_.channels;
    const int d = cfg_.attn_dim;
    conv_in_ = seeded_conv(c, LatentVideo::kChannels, 3, CounterRng::derive(cfg_.seed, 1), 0.8);
    conv_in_bias_ = Tensor({c});
    time_table_ = seeded_matrix(kTimeSteps, c, CounterRng::derive(cfg_.seed, 2), 8.0);

    auto make_res = [&](uint64_t lane) {
        ResBlock b;
        b.conv_a = seeded_conv(c, c, 3, CounterRng::derive(cfg_.seed, lane), 0.8);
        b.bias_a = Tensor({c});
        b.conv_b = seeded_conv(c, c, 3, CounterRng::derive(cfg_.seed, lane + 1), 0.8);
        b.bias_b = Tensor({c});
        return b;
    };
    res_full_ = make_res(10);
    res_half_ = make_res(20);

    auto make_site = [&](uint64_t lane) {
        AttnSite s;
        s.text = AttentionLayer::seeded(CounterRng::derive(cfg_.seed, lane), c, cfg_.text_dim, d,
                                        cfg_.heads);
        s.w_out = seeded_matrix(d, c, CounterRng::derive(cfg_.seed, lane + 1), 0.5);
        s.ref = AttentionLayer::seeded(CounterRng::derive(cfg_.seed, lane + 2),
                                       c, ReferenceEncoder::kOutputDim, d, cfg_.heads);
        s.w_ref_out = seeded_matrix(d, c, CounterRng::derive(cfg_.seed, lane + 3), 0.15);
        // identity-favoring value/output path: attended reference content
        // survives into the leading hidden channels
        for (int j = 0; j < std::min(ReferenceEncoder::kOutputDim, d); ++j) s.ref.w_v.at(j, j) += 1.0f;
        for (int j = 0; j < std::min(d, c); ++j) s.w_ref_out.at(j, j) += 1.0f;
        return s;
    };
    site_full_ = make_site(30);
    site_half_ = make_site(40);

    conv_out_ = seeded_conv(LatentVideo::kChannels, c, 1, CounterRng::derive(cfg_.seed, 50), 0.6);
    conv_out_bias_ = Tensor({LatentVideo::kChannels});
    // leading hidden channels map straight onto the output channels
    for (int o = 0; o < LatentVideo::kChannels; ++o) conv_out_.at(o, o, 0, 0) += 1.0f;
}

RegionMask ToyDenoiser::reference_footprint(std::span<const RefContext> refs, int height,
                                            int width) const {
    RegionMask out = RegionMask::zeros(height, width);
    for (const RefContext& ctx : refs) {
        RegionMask full = downsample_mask(ctx.object_mask, height, width);
        RegionMask half = downsample_mask(ctx.object_mask, height / 2, width / 2);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                uint8_t v = full.at(r, c);
                v |= half.at(r / 2, c / 2);
                out.at(r, c) |= v;
            }
    }
    return out;
}

Tensor ToyDenoiser::frame_eps(const Tensor& frame, int t, const TemporalSegment* segment,
                              double alpha, std::span<const RefContext> refs,
                              const std::vector<Tensor>& ref_k,
                              const std::vector<Tensor>& ref_v) const {
    const int h = frame.dim(1), w = frame.dim(2);

    Tensor h0 = conv2d(frame, conv_in_, 1, conv_in_bias_);
    for (int c = 0; c < cfg_.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) h0.at(c, y, x) += time_table_.at(t, c);

    auto resblock = [this](const Tensor& in, const ResBlock& b) {
        Tensor u = conv2d(silu_all(in), b.conv_a, 1, b.bias_a);
        u = conv2d(silu_all(u), b.conv_b, 1, b.bias_b);
        return add(in, u);
    };
    h0 = resblock(h0, res_full_);
    // the half-resolution branch splits before any attention so that masked
    // reference residuals never pass through a spatially mixing op
    Tensor h1 = resblock(avgpool2(h0), res_half_);

    struct SiteView {
        const AttnSite* site;
        Tensor* hidden;
        int h, w;
        size_t kv_offset;  // index of this site's first prepared K/V pair
    };
    SiteView views[2] = {{&site_full_, &h0, h, w, 0},
                         {&site_half_, &h1, h / 2, w / 2, refs.size()}};

    for (SiteView& sv : views) {
        auto apply_text = [&]() {
            FrameQuery fq = project_query(flatten_positions(*sv.hidden), sv.site->text, sv.h, sv.w);
            Tensor a = segment
                           ? frame_compositional_attention(fq, *segment, text_encoder_, sv.site->text,
                                                           alpha, cfg_.blend)
                           : cross_attention(fq, TextEmbedding::null(cfg_.text_dim), sv.site->text);
            add_rows_as_grid(*sv.hidden, matmul(a, sv.site->w_out), 1.0);
        };
        auto apply_refs = [&]() {
            if (refs.empty()) return;
            FrameQuery fq = project_query(flatten_positions(*sv.hidden), sv.site->ref, sv.h, sv.w);
            Tensor sum({sv.h * sv.w, cfg_.attn_dim});
            for (size_t i = 0; i < refs.size(); ++i) {
                const RegionMask cm = downsample_mask(refs[i].object_mask, sv.h, sv.w);
                Tensor mq = fq.q;
                for (int p = 0; p < mq.dim(0); ++p) {
                    if (cm.values[static_cast<size_t>(p)]) continue;
                    for (int j = 0; j < mq.dim(1); ++j) mq.at(p, j) = 0.0f;
                }
                Tensor r = attention_values(mq, ref_k[sv.kv_offset + i], ref_v[sv.kv_offset + i],
                                            cfg_.heads);
                for (int p = 0; p < r.dim(0); ++p) {
                    if (cm.values[static_cast<size_t>(p)]) continue;
                    for (int j = 0; j < r.dim(1); ++j) r.at(p, j) = 0.0f;
                }
                sum = add(sum, r);
            }
            add_rows_as_grid(*sv.hidden, matmul(sum, sv.site->w_ref_out), cfg_.ref_gate);
        };
        if (cfg_.ref_placement == RefAttnPlacement::before_cross_attention) {
            apply_refs();
            apply_text();
        } else {
            apply_text();
            apply_refs();
        }
    }

    Tensor merged = add(h0, upsample2_nearest(h1, h, w));
    return conv2d(silu_all(merged), conv_out_, 0, conv_out_bias_);
}

LatentVideo ToyDenoiser::predict(const LatentVideo& x_t, int t, const PromptPlan* plan,
                                 std::span<const RefContext> refs, int workers) const {
    const int frames = x_t.frames(), h = x_t.height(), w = x_t.width();
    if (t < 0 || t >= kTimeSteps)
        throw Error::range("timestep " + std::to_string(t) + " outside [0, 1000)");
    if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0)
        throw Error::validation("latent resolution must be even and at least 2x2 for the two-level denoiser");
    if (plan && plan->total_frames != frames)
        throw Error::validation("plan covers " + std::to_string(plan->total_frames) +
                                " frames but latents have " + std::to_string(frames));

    // K/V of each reference context are fixed for the whole call; project once.
    std::vector<Tensor> ref_k, ref_v;
    if (!refs.empty()) {
        ref_k.reserve(refs.size() * 2);
        ref_v.reserve(refs.size() * 2);
        for (const AttnSite* site : {&site_full_, &site_half_}) {
            for (const RefContext& ctx : refs) {
                Tensor masked = ctx.x_ref;
                const int ref_positions = ctx.height * ctx.width;
                if (ctx.frame_count * ref_positions != masked.dim(0))
                    throw Error::dimension("reference context grid does not match its x_ref rows");
                for (int row = 0; row < masked.dim(0); ++row) {
                    if (ctx.object_mask.values[static_cast<size_t>(row % ref_positions)]) continue;
                    for (int j = 0; j < masked.dim(1); ++j) masked.at(row, j) = 0.0f;
                }
                ref_k.push_back(matmul(masked, site->ref.w_k));
                ref_v.push_back(matmul(masked, site->ref.w_v));
            }
        }
    }

    const double alpha = plan ? plan->alpha : 1.0;
    LatentVideo out(frames, h, w);
    auto run_frame = [&](int f) {
        Tensor frame({LatentVideo::kChannels, h, w});
        for (int c = 0; c < LatentVideo::kChannels; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) frame.at(c, y, x) = x_t.data.at(f, c, y, x);
        const TemporalSegment* seg = plan ? &segment_for_frame(*plan, f) : nullptr;
        Tensor eps = frame_eps(frame, t, seg, alpha, refs, ref_k, ref_v);
        for (int c = 0; c < LatentVideo::kChannels; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out.data.at(f, c, y, x) = eps.at(c, y, x);
    };

    const int n_workers = std::max(1, std::min(workers, frames));
    if (n_workers == 1) {
        for (int f = 0; f < frames; ++f) run_frame(f);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<size_t>(n_workers));
        for (int wi = 0; wi < n_workers; ++wi) {
            pool.emplace_back([&, wi]() {
                try {
                    for (int f = wi; f < frames; f += n_workers) run_frame(f);
                } catch (...) {
                    errors[static_cast<size_t>(wi)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return out;
}

LatentVideo denoise(const LatentVideo& x_t, int t, const PromptPlan& plan,
                    std::span<const RefContext> refs, const ToyDenoiser& model, int workers) {
    return model.predict(x_t, t, &plan, refs, workers);
}

LatentVideo denoise_unconditional(const LatentVideo& x_t, int t, const ToyDenoiser& model,
                                  int workers) {
    return model.predict(x_t, t, nullptr, {}, workers);
}

// ---- sampling loops --------------------------------------------------------

namespace {

constexpr uint64_t kLaneInit = 0xa111ce00ULL;
constexpr uint64_t kLaneStep = 0x57e90000ULL;

void check_sampler(const SamplerConfig& cfg, const NoiseSchedule& sched) {
    if (cfg.ddim_steps < 1 || cfg.ddim_steps > sched.steps)
        throw Error::validation("ddim_steps must lie in [1, schedule steps]");
    if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0))
        throw Error::validation("eta must lie in [0,1]");
    if (cfg.workers < 1) throw Error::validation("workers must be at least 1");
}

}  // namespace

LatentVideo generate(const PromptPlan& plan, const SamplerConfig& cfg, const NoiseSchedule& sched,
                     const EpsilonModel& model, int height, int width,
                     std::span<const RefContext> refs, const Tensor* initial_latents,
                     int chunk_index) {
    check_sampler(cfg, sched);
    const uint64_t chunk_key = CounterRng::derive(cfg.seed, static_cast<uint64_t>(chunk_index));

    LatentVideo x =
        initial_latents
            ? LatentVideo(*initial_latents)
            : gaussian_like(plan.total_frames, height, width, CounterRng::derive(chunk_key, kLaneInit));
    if (x.frames() != plan.total_frames || x.height() != height || x.width() != width)
        throw Error::dimension("initial latents " + x.data.shape_str() + " do not match the request");

    std::span<const RefContext> used_refs = cfg.reference_conditioning ? refs : std::span<const RefContext>{};
    const std::vector<int> ts = ddim_timesteps(sched.steps, cfg.ddim_steps);
    for (int i = static_cast<int>(ts.size()) - 1; i >= 0; --i) {
        const int t = ts[static_cast<size_t>(i)];
        const int t_prev = i > 0 ? ts[static_cast<size_t>(i - 1)] : -1;
        LatentVideo eps_cond = model.predict(x, t, &plan, used_refs, cfg.workers);
        LatentVideo eps = cfg.guidance_scale == 1.0
                              ? std::move(eps_cond)
                              : cfg_combine(eps_cond, model.predict(x, t, nullptr, {}, cfg.workers),
                                            cfg.guidance_scale);
        CounterRng step_rng(CounterRng::derive(chunk_key, kLaneStep + static_cast<uint64_t>(t)));
        x = ddim_step(x, eps, t, t_prev, cfg, sched, step_rng);
    }
    return x;
}

LatentVideo generate_autoregressive(const PromptPlan& plan, int chunk_frames,
                                    const SamplerConfig& cfg, const NoiseSchedule& sched,
                                    const ToyDenoiser& model, int height, int width) {
    if (chunk_frames < 8 || chunk_frames % 8 != 0)
        throw Error::validation("chunk_frames must be a positive multiple of 8");
    if (plan.total_frames % chunk_frames != 0)
        throw Error::validation("total_frames " + std::to_string(plan.total_frames) +
                                " is not a multiple of chunk_frames " + std::to_string(chunk_frames));
    const int n_chunks = plan.total_frames / chunk_frames;
    const int l = model.config().ref_frames;
    if (chunk_frames < l)
        throw Error::validation("chunk_frames smaller than the reference span");

    LatentVideo out(plan.total_frames, height, width);
    for (int c = 0; c < n_chunks; ++c) {
        PromptPlan window = plan_window(plan, c * chunk_frames, chunk_frames);

        std::vector<RefContext> refs;
        if (c > 0 && cfg.reference_conditioning) {
            Tensor tail({l, LatentVideo::kChannels, height, width});
            for (int f = 0; f < l; ++f) {
                const int src = c * chunk_frames - l + f;
                for (int ch = 0; ch < LatentVideo::kChannels; ++ch)
                    for (int y = 0; y < height; ++y)
                        for (int x = 0; x < width; ++x)
                            tail.at(f, ch, y, x) = out.data.at(src, ch, y, x);
            }
            const TemporalSegment& boundary = segment_for_frame(plan, c * chunk_frames - 1);
            for (const SubObject& obj : boundary.objects) {
                RefContext ctx = encode_reference(tail, model.reference_encoder());
                ctx.object_mask = rasterize_mask(obj.box, height, width);
                ctx.frame_start = c * chunk_frames - l;
                refs.push_back(std::move(ctx));
            }
        }

        LatentVideo chunk = generate(window, cfg, sched, model, height, width, refs, nullptr, c);
        for (int f = 0; f < chunk_frames; ++f)
            for (int ch = 0; ch < LatentVideo::kChannels; ++ch)
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x)
                        out.data.at(c * chunk_frames + f, ch, y, x) = chunk.data.at(f, ch, y, x);
    }
    return out;
}

void write_preview_pgm(const LatentVideo& video, const std::string& path) {
    const int t = video.frames(), h = video.height(), w = video.width();
    int cols = 1;
    while (cols * cols < t) ++cols;
    const int rows = (t + cols - 1) / cols;
    std::vector<uint8_t> sheet(static_cast<size_t>(rows * h) * (cols * w), 0);
    for (int f = 0; f < t; ++f) {
        float lo = video.data.at(f, 0, 0, 0), hi = lo;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                lo = std::min(lo, video.data.at(f, 0, y, x));
                hi = std::max(hi, video.data.at(f, 0, y, x));
            }
        const float span = hi > lo ? hi - lo : 1.0f;
        const int ty = (f / cols) * h, tx = (f % cols) * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float v = (video.data.at(f, 0, y, x) - lo) / span;
                sheet[static_cast<size_t>(ty + y) * (cols * w) + tx + x] =
                    static_cast<uint8_t>(std::lround(v * 255.0f));
            }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot open for writing: " + path);
    out << "P5\n" << cols * w << " " << rows * h << "\n255\n";
    out.write(reinterpret_cast<const char*>(sheet.data()), static_cast<std::streamsize>(sheet.size()));
    if (!out) throw Error::io("failed writing preview to " + path);
}

}  // namespace cvid
