#include "asdnb/augment.hpp"

#include <cmath>
#include <random>

#include "asdnb/errors.hpp"

namespace asdnb {

void AugmentationConfig::validate() const {
    for (Real p : {flip_prob, negative_audio_prob})
        if (!(p >= 0.0 && p <= 1.0)) throw ValueRange("augmentation probability outside [0,1]");
    if (!(crop_scale_min > 0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0))
        throw ValueRange("crop scale range must satisfy 0 < min <= max <= 1");
    if (snr_db_min > snr_db_max) throw ValueRange("snr_db_min > snr_db_max");
}

namespace {

Tensor warp_frame(const Tensor& img, bool flip, Real cos_t, Real sin_t, Real scale, Real cx_in,
                  Real cy_in) {
    const std::int64_t h = img.dim(1), w = img.dim(2);
    Tensor out({1, h, w});
    const Real c_out_x = (static_cast<Real>(w) - 1) / 2;
    const Real c_out_y = (static_cast<Real>(h) - 1) / 2;
    for (std::int64_t oy = 0; oy < h; ++oy) {
        for (std::int64_t ox = 0; ox < w; ++ox) {
            Real u = static_cast<Real>(ox) - c_out_x;
            const Real v = static_cast<Real>(oy) - c_out_y;
            if (flip) u = -u;
            // inverse rotation, then scale into the crop window
            const Real ix = (cos_t * u + sin_t * v) * scale + cx_in;
            const Real iy = (-sin_t * u + cos_t * v) * scale + cy_in;
            Real value = 0;
            const std::int64_t x0 = static_cast<std::int64_t>(std::floor(ix));
            const std::int64_t y0 = static_cast<std::int64_t>(std::floor(iy));
            const Real fx = ix - static_cast<Real>(x0);
            const Real fy = iy - static_cast<Real>(y0);
            auto sample = [&](std::int64_t x, std::int64_t y) -> Real {
                if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
                return img[y * w + x];
            };
            value = (1 - fx) * (1 - fy) * sample(x0, y0) + fx * (1 - fy) * sample(x0 + 1, y0) +
                    (1 - fx) * fy * sample(x0, y0 + 1) + fx * fy * sample(x0 + 1, y0 + 1);
            out[oy * w + ox] = std::clamp(value, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace

ClipSample augment_clip(const ClipSample& sample, const AugmentationConfig& config,
                        std::uint64_t clip_seed) {
    config.validate();
    if (!config.enabled || sample.face_frames.empty()) return sample;

    std::mt19937_64 rng(mix_seed(config.seed, clip_seed));
    // draw order: flip, angle, scale, window offsets
    const bool flip = std::uniform_real_distribution<Real>(0, 1)(rng) < config.flip_prob;
    const Real angle = std::uniform_real_distribution<Real>(-config.rotate_degrees,
                                                            config.rotate_degrees)(rng) *
                       M_PI / 180.0;
    const Real scale = config.crop_scale_min == config.crop_scale_max
                           ? config.crop_scale_min
                           : std::uniform_real_distribution<Real>(config.crop_scale_min,
                                                                  config.crop_scale_max)(rng);
    const Real side = static_cast<Real>(kFrameSize);
    const Real margin = side - scale * side;
    const Real tx = margin <= 0 ? 0 : std::uniform_real_distribution<Real>(0, margin)(rng);
    const Real ty = margin <= 0 ? 0 : std::uniform_real_distribution<Real>(0, margin)(rng);
    const Real cx_in = tx + scale * (side - 1) / 2;
    const Real cy_in = ty + scale * (side - 1) / 2;
    const Real cos_t = std::cos(angle), sin_t = std::sin(angle);

    ClipSample out = sample;
    for (int t = 0; t < sample.num_frames(); ++t) {
        out.face_frames[static_cast<std::size_t>(t)] =
            warp_frame(sample.face_frames[static_cast<std::size_t>(t)], flip, cos_t, sin_t, scale, cx_in, cy_in);
        out.body_frames[static_cast<std::size_t>(t)] =
            warp_frame(sample.body_frames[static_cast<std::size_t>(t)], flip, cos_t, sin_t, scale, cx_in, cy_in);
    }
    return out;
}

ClipSample negative_audio_mix(const ClipSample& sample, const std::vector<Real>& donor,
                              const AugmentationConfig& config, std::uint64_t clip_seed) {
    config.validate();
    if (donor.empty() || sample.waveform.empty()) return sample;

    std::mt19937_64 rng(mix_seed(config.seed, clip_seed ^ 0x5eed0a0dULL));
    const Real snr_db = config.snr_db_min == config.snr_db_max
                            ? config.snr_db_min
                            : std::uniform_real_distribution<Real>(config.snr_db_min,
                                                                   config.snr_db_max)(rng);

    Real p_sig = 0, p_don = 0;
    for (Real v : sample.waveform) p_sig += v * v;
    p_sig /= static_cast<Real>(sample.waveform.size());
    for (Real v : donor) p_don += v * v;
    p_don /= static_cast<Real>(donor.size());

    Real gain = 0;
    if (p_don > 0 && p_sig > 0 && std::isfinite(snr_db))
        gain = std::sqrt(p_sig / p_don) * std::pow(10.0, -snr_db / 20.0);
    if (gain == 0) return sample;

    ClipSample out = sample;
    for (std::size_t i = 0; i < out.waveform.size(); ++i)
        out.waveform[i] += gain * donor[i % donor.size()];
    return out;  // labels intentionally untouched
}

}  // namespace asdnb
