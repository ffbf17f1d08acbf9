#include "asdnb/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "asdnb/errors.hpp"
#include "asdnb/io.hpp"

namespace asdnb {

namespace fs = std::filesystem;
using json = nlohmann::json;

void SyntheticSpec::validate() const {
    if (num_tracks < 1) throw ValueRange("num_tracks must be >= 1");
    if (frames_per_track < 1) throw ValueRange("frames_per_track must be >= 1");
    if (!(fps > 0)) throw ValueRange("fps must be positive");
    if (min_run < 1 || max_run < min_run) throw ValueRange("bad label run-length bounds");
    if (!(feature_noise_prob >= 0 && feature_noise_prob <= 1))
        throw ValueRange("feature_noise_prob outside [0,1]");
    if (!(tone_hz > 0 && tone_hz < kSampleRate / 2.0)) throw ValueRange("tone_hz outside (0, 8000)");
}

const char* to_string(SignalChannel c) {
    switch (c) {
        case SignalChannel::face: return "face";
        case SignalChannel::body: return "body";
        case SignalChannel::both: return "both";
    }
    return "both";
}

SignalChannel signal_channel_from_string(const std::string& s) {
    if (s == "face") return SignalChannel::face;
    if (s == "body") return SignalChannel::body;
    if (s == "both") return SignalChannel::both;
    throw ConfigError("unknown signal channel '" + s + "' (face|body|both)");
}

namespace {

constexpr Real kBackground = 0.10;
constexpr Real kStaticShape = 0.30;   // head / torso
constexpr Real kPatchIdle = 0.45;     // mouth / hand at rest
constexpr Real kPatchActive = 0.95;
constexpr int kMotionPeriod = 6;      // frames; within the encoder's temporal radius
constexpr int kMotionAmplitude = 8;   // pixels

Real quantize_pixel(Real v) {
    return static_cast<Real>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0;
}

void fill_rect(Tensor& img, int x1, int y1, int x2, int y2, Real value) {
    const std::int64_t w = img.dim(2), h = img.dim(1);
    for (std::int64_t y = std::max(0, y1); y < std::min<std::int64_t>(h, y2); ++y)
        for (std::int64_t x = std::max(0, x1); x < std::min<std::int64_t>(w, x2); ++x)
            img[y * w + x] = value;
}

void fill_ellipse(Tensor& img, Real cx, Real cy, Real rx, Real ry, Real value) {
    const std::int64_t w = img.dim(2), h = img.dim(1);
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
            const Real dx = (static_cast<Real>(x) - cx) / rx;
            const Real dy = (static_cast<Real>(y) - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) img[y * w + x] = value;
        }
}

int motion_offset(int t) {
    return static_cast<int>(std::lround(
        kMotionAmplitude * std::sin(2.0 * M_PI * t / kMotionPeriod)));
}

Tensor render_face(int t, bool active) {
    Tensor img = Tensor::full({1, kFrameSize, kFrameSize}, kBackground);
    fill_ellipse(img, 56, 44, 26, 32, kStaticShape);
    const int dx = active ? motion_offset(t) : 0;
    fill_rect(img, 48 + dx, 72, 64 + dx, 82, active ? kPatchActive : kPatchIdle);
    for (std::int64_t i = 0; i < img.numel(); ++i) img[i] = quantize_pixel(img[i]);
    return img;
}

Tensor render_body(int t, bool active) {
    Tensor img = Tensor::full({1, kFrameSize, kFrameSize}, kBackground);
    fill_rect(img, 34, 40, 78, 104, kStaticShape);
    const int dy = active ? motion_offset(t) : 0;
    fill_rect(img, 14, 60 + dy, 30, 76 + dy, active ? kPatchActive : kPatchIdle);
    for (std::int64_t i = 0; i < img.numel(); ++i) img[i] = quantize_pixel(img[i]);
    return img;
}

Real quantize_sample(Real v) {
    return static_cast<Real>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0)) / 32767.0;
}

}  // namespace

std::vector<ClipSample> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int samples_per_frame = static_cast<int>(std::lround(kSampleRate / spec.fps));

    std::vector<ClipSample> tracks;
    tracks.reserve(static_cast<std::size_t>(spec.num_tracks));
    for (int ti = 0; ti < spec.num_tracks; ++ti) {
        std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(ti)));
        const int t_len = spec.frames_per_track;

        // label runs
        std::vector<int> labels;
        labels.reserve(static_cast<std::size_t>(t_len));
        int state = static_cast<int>(rng() & 1);
        while (static_cast<int>(labels.size()) < t_len) {
            const int run = std::uniform_int_distribution<int>(spec.min_run, spec.max_run)(rng);
            for (int i = 0; i < run && static_cast<int>(labels.size()) < t_len; ++i)
                labels.push_back(state);
            state = 1 - state;
        }

        // Corruption arrives in bursts longer than the encoders' temporal
        // receptive fields (the visual encoder alone spans +/-6 frames), so
        // recovering a corrupted frame requires clip-scale context. Burst
        // starts are drawn so the marginal per-frame rate matches the knob.
        std::vector<char> corrupted(static_cast<std::size_t>(t_len), 0);
        if (spec.feature_noise_prob > 0) {
            constexpr int kBurstMin = 8, kBurstMax = 12;
            constexpr Real kMeanBurst = (kBurstMin + kBurstMax) / 2.0;
            // renewal process: wait ~Geom(q), burst ~U[min,max]; q chosen so
            // the stationary corrupted fraction equals the knob. The walk
            // starts one burst before frame 0 so edges see the same rate.
            const Real q = spec.feature_noise_prob /
                           (kMeanBurst * (1.0 - spec.feature_noise_prob));
            std::uniform_real_distribution<Real> unit(0, 1);
            int t = -kBurstMax;
            while (t < t_len) {
                if (unit(rng) < q) {
                    const int burst = std::uniform_int_distribution<int>(kBurstMin, kBurstMax)(rng);
                    for (int k = 0; k < burst && t < t_len; ++k, ++t)
                        if (t >= 0) corrupted[static_cast<std::size_t>(t)] = 1;
                } else {
                    ++t;
                }
            }
        }

        ClipSample clip;
        char id[32];
        std::snprintf(id, sizeof(id), "track_%04d", ti);
        clip.track_id = id;
        clip.fps = spec.fps;
        clip.labels = labels;
        clip.face_frames.reserve(static_cast<std::size_t>(t_len));
        clip.body_frames.reserve(static_cast<std::size_t>(t_len));
        clip.waveform.resize(static_cast<std::size_t>(t_len) * samples_per_frame);

        std::uniform_real_distribution<Real> noise(-0.05, 0.05);
        for (int t = 0; t < t_len; ++t) {
            const bool speaking = labels[static_cast<std::size_t>(t)] == 1;
            const bool render_active = speaking && !corrupted[static_cast<std::size_t>(t)];
            const bool face_signal = spec.signal_channel != SignalChannel::body;
            const bool body_signal = spec.signal_channel != SignalChannel::face;
            clip.face_frames.push_back(render_face(t, face_signal && render_active));
            clip.body_frames.push_back(render_body(t, body_signal && render_active));

            Real* audio = clip.waveform.data() + static_cast<std::int64_t>(t) * samples_per_frame;
            if (render_active) {
                for (int n = 0; n < samples_per_frame; ++n) {
                    const std::int64_t global_n = static_cast<std::int64_t>(t) * samples_per_frame + n;
                    audio[n] = quantize_sample(
                        0.35 * std::sin(2.0 * M_PI * spec.tone_hz * global_n / kSampleRate));
                }
            } else {
                for (int n = 0; n < samples_per_frame; ++n)
                    audio[n] = quantize_sample(noise(rng));
            }
        }
        tracks.push_back(std::move(clip));
    }
    return tracks;
}

void write_synthetic_dataset(const SyntheticSpec& spec, const std::string& dir) {
    const std::vector<ClipSample> tracks = generate_synthetic(spec);
    fs::create_directories(dir);

    json manifest;
    manifest["version"] = 1;
    manifest["num_tracks"] = spec.num_tracks;
    manifest["frames_per_track"] = spec.frames_per_track;
    manifest["signal_channel"] = to_string(spec.signal_channel);
    manifest["tone_hz"] = spec.tone_hz;
    manifest["seed"] = spec.seed;
    manifest["fps"] = spec.fps;
    manifest["min_run"] = spec.min_run;
    manifest["max_run"] = spec.max_run;
    manifest["feature_noise_prob"] = spec.feature_noise_prob;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

    for (const auto& clip : tracks) {
        const std::string tdir = dir + "/" + clip.track_id;
        fs::create_directories(tdir);
        char name[32];
        for (int t = 0; t < clip.num_frames(); ++t) {
            std::snprintf(name, sizeof(name), "/face_%04d.pgm", t);
            write_pgm(clip.face_frames[static_cast<std::size_t>(t)], tdir + name);
            std::snprintf(name, sizeof(name), "/body_%04d.pgm", t);
            write_pgm(clip.body_frames[static_cast<std::size_t>(t)], tdir + name);
        }
        write_wav(clip.waveform, kSampleRate, tdir + "/audio.wav");
        write_text_file(tdir + "/labels.json", json(clip.labels).dump() + "\n");
        json meta;
        meta["track_id"] = clip.track_id;
        meta["fps"] = clip.fps;
        write_text_file(tdir + "/track.json", meta.dump() + "\n");
    }
}

std::vector<ClipSample> load_track_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
    std::vector<std::string> track_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) track_dirs.push_back(e.path().string());
    std::sort(track_dirs.begin(), track_dirs.end());
    if (track_dirs.empty()) throw EmptyDataset("no track directories under '" + dir + "'");

    std::vector<ClipSample> tracks;
    tracks.reserve(track_dirs.size());
    for (const auto& tdir : track_dirs) {
        const json meta = json::parse(read_text_file(tdir + "/track.json"));
        ClipSample clip;
        clip.track_id = meta.at("track_id").get<std::string>();
        clip.fps = meta.at("fps").get<Real>();
        clip.labels = json::parse(read_text_file(tdir + "/labels.json")).get<std::vector<int>>();
        const int t_len = static_cast<int>(clip.labels.size());
        char name[32];
        for (int t = 0; t < t_len; ++t) {
            std::snprintf(name, sizeof(name), "/face_%04d.pgm", t);
            clip.face_frames.push_back(read_pgm(tdir + name));
            std::snprintf(name, sizeof(name), "/body_%04d.pgm", t);
            clip.body_frames.push_back(read_pgm(tdir + name));
        }
        int rate = 0;
        clip.waveform = read_wav(tdir + "/audio.wav", &rate);
        if (rate != kSampleRate) throw IoError(tdir + "/audio.wav: expected 16 kHz");
        tracks.push_back(std::move(clip));
    }
    return tracks;
}

}  // namespace asdnb
