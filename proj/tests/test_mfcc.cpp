#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "asdnb/errors.hpp"
#include "asdnb/mfcc.hpp"
#include "asdnb/types.hpp"

using namespace asdnb;

namespace {

std::vector<Real> random_wave(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> d(-0.8, 0.8);
    std::vector<Real> w(n);
    for (auto& v : w) v = d(rng);
    return w;
}

}  // namespace

TEST_CASE("one second at 16 kHz yields a 98x13 matrix") {
    const MFCCMatrix m = compute_mfcc(random_wave(16000, 1), 16000);
    CHECK(m.frames.dim(0) == 98);  // floor((16000-400)/160)+1
    CHECK(m.frames.dim(1) == 13);
    CHECK(m.frames.all_finite());
}

TEST_CASE("fewer than one window of samples is rejected") {
    CHECK_THROWS_AS(compute_mfcc(random_wave(399, 2), 16000), TooShort);
    CHECK_NOTHROW(compute_mfcc(random_wave(400, 2), 16000));
}

TEST_CASE("non-16kHz input is rejected") {
    CHECK_THROWS_AS(compute_mfcc(random_wave(16000, 3), 44100), BadSampleRate);
}

TEST_CASE("constant-zero waveform gives identical rows") {
    const MFCCMatrix m = compute_mfcc(std::vector<Real>(4000, 0.0), 16000);
    REQUIRE(m.frames.dim(0) > 1);
    for (std::int64_t r = 1; r < m.frames.dim(0); ++r)
        for (int c = 0; c < kMfccCoeffs; ++c)
            CHECK(m.frames[r * kMfccCoeffs + c] == m.frames[c]);
}

TEST_CASE("frame-count formula holds for random lengths") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(400, 16000);
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = len(rng);
        const MFCCMatrix m = compute_mfcc(random_wave(n, 100 + static_cast<std::uint64_t>(i)), 16000);
        CHECK(m.frames.dim(0) == mfcc_frame_count(static_cast<std::int64_t>(n)));
    }
}

TEST_CASE("hop-shift moves rows by one (interior rows)") {
    const std::vector<Real> wave = random_wave(16000, 7);
    const std::vector<Real> shifted(wave.begin() + kMfccHopSamples, wave.end());
    const MFCCMatrix a = compute_mfcc(wave, 16000);
    const MFCCMatrix b = compute_mfcc(shifted, 16000);
    REQUIRE(b.frames.dim(0) == a.frames.dim(0) - 1);
    // row 0 of the shifted signal carries the pre-emphasis boundary; skip it
    for (std::int64_t r = 1; r < b.frames.dim(0); ++r)
        for (int c = 0; c < kMfccCoeffs; ++c)
            CHECK(std::abs(b.frames[r * kMfccCoeffs + c] - a.frames[(r + 1) * kMfccCoeffs + c]) <
                  1e-6);
}

TEST_CASE("amplitude scaling only offsets the 0th coefficient") {
    const std::vector<Real> wave = random_wave(8000, 11);
    std::vector<Real> scaled(wave);
    for (auto& v : scaled) v *= 0.37;
    const MFCCMatrix a = compute_mfcc(wave, 16000);
    const MFCCMatrix b = compute_mfcc(scaled, 16000);
    bool c0_changed = false;
    for (std::int64_t r = 0; r < a.frames.dim(0); ++r) {
        if (std::abs(a.frames[r * kMfccCoeffs] - b.frames[r * kMfccCoeffs]) > 1e-6) c0_changed = true;
        for (int c = 1; c < kMfccCoeffs; ++c)
            CHECK(std::abs(a.frames[r * kMfccCoeffs + c] - b.frames[r * kMfccCoeffs + c]) < 1e-5);
    }
    CHECK(c0_changed);
}

TEST_CASE("alignment resamples 98 rows onto a 100-row grid") {
    const MFCCMatrix m = compute_mfcc(random_wave(16000, 13), 16000);
    const Tensor aligned = align_audio_to_video(m, 25, 25.0);
    REQUIRE(aligned.dim(0) == 100);
    REQUIRE(aligned.dim(1) == 13);
    // endpoints match the source rows exactly
    for (int c = 0; c < kMfccCoeffs; ++c) {
        CHECK(aligned[c] == doctest::Approx(m.frames[c]).epsilon(1e-12));
        CHECK(aligned[99 * kMfccCoeffs + c] ==
              doctest::Approx(m.frames[97 * kMfccCoeffs + c]).epsilon(1e-12));
    }
    // independent interpolation oracle for an interior row
    const Real pos = 42.0 * 97.0 / 99.0;
    const auto i0 = static_cast<std::int64_t>(pos);
    const Real frac = pos - static_cast<Real>(i0);
    for (int c = 0; c < kMfccCoeffs; ++c) {
        const Real expected =
            (1 - frac) * m.frames[i0 * kMfccCoeffs + c] + frac * m.frames[(i0 + 1) * kMfccCoeffs + c];
        CHECK(aligned[42 * kMfccCoeffs + c] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("alignment is the identity when rows already match") {
    MFCCMatrix m;
    m.frames = Tensor({100, kMfccCoeffs});
    for (std::int64_t i = 0; i < m.frames.numel(); ++i) m.frames[i] = static_cast<Real>(i) * 0.01;
    const Tensor aligned = align_audio_to_video(m, 25, 25.0);
    CHECK(aligned.data() == m.frames.data());  // same buffer, untouched
}

TEST_CASE("alignment rejects empty input") {
    MFCCMatrix empty;
    empty.frames = Tensor({0, kMfccCoeffs});
    CHECK_THROWS_AS(align_audio_to_video(empty, 25, 25.0), EmptyInput);
}

TEST_CASE("single-row input broadcasts to all output rows") {
    MFCCMatrix m;
    m.frames = Tensor({1, kMfccCoeffs});
    for (int c = 0; c < kMfccCoeffs; ++c) m.frames[c] = c;
    const Tensor aligned = align_audio_to_video(m, 2, 25.0);
    REQUIRE(aligned.dim(0) == 8);
    for (std::int64_t r = 0; r < 8; ++r)
        for (int c = 0; c < kMfccCoeffs; ++c) CHECK(aligned[r * kMfccCoeffs + c] == m.frames[c]);
}

TEST_CASE("feature dump round-trips through the binary format") {
    const MFCCMatrix m = compute_mfcc(random_wave(4800, 17), 16000);
    const std::string path =
        (std::filesystem::temp_directory_path() / "asdnb_mfcc_dump_test.mfcc").string();
    write_mfcc_dump(m, path);
    const MFCCMatrix back = read_mfcc_dump(path);
    REQUIRE(back.frames.dim(0) == m.frames.dim(0));
    for (std::int64_t i = 0; i < m.frames.numel(); ++i)
        CHECK(std::abs(back.frames[i] - m.frames[i]) <=
              std::abs(m.frames[i]) * 1e-6 + 1e-6);  // float32 payload
    std::filesystem::remove(path);
}
