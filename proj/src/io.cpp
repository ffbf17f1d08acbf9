#include "asdnb/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "asdnb/errors.hpp"

namespace asdnb {

void write_pgm(const Tensor& image, const std::string& path) {
    if (image.ndim() != 3 || image.dim(0) != 1)
        throw IoError("write_pgm expects a [1,H,W] tensor, got " + image.shape_str());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const std::int64_t h = image.dim(1), w = image.dim(2);
    f << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (std::int64_t y = 0; y < h; ++y) {
        const Real* src = image.data() + y * w;
        for (std::int64_t x = 0; x < w; ++x)
            row[static_cast<std::size_t>(x)] =
                static_cast<unsigned char>(std::lround(std::clamp(src[x], 0.0, 1.0) * 255.0));
        f.write(reinterpret_cast<const char*>(row.data()), w);
    }
    if (!f) throw IoError("short write to '" + path + "'");
}

Tensor read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string magic;
    f >> magic;
    if (magic != "P5") throw IoError("'" + path + "' is not a binary PGM");
    std::int64_t w = 0, h = 0;
    int maxval = 0;
    f >> w >> h >> maxval;
    if (maxval != 255 || w <= 0 || h <= 0) throw IoError("unsupported PGM header in '" + path + "'");
    f.get();  // single whitespace after header
    std::vector<unsigned char> buf(static_cast<std::size_t>(w * h));
    f.read(reinterpret_cast<char*>(buf.data()), w * h);
    if (!f) throw IoError("truncated PGM '" + path + "'");
    Tensor img({1, h, w});
    for (std::int64_t i = 0; i < w * h; ++i)
        img[i] = static_cast<Real>(buf[static_cast<std::size_t>(i)]) / 255.0;
    return img;
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u16(std::ofstream& f, std::uint16_t v) {
    f.write(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

void write_wav(const std::vector<Real>& samples, int sample_rate, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    f.write("RIFF", 4);
    put_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(f, 16);
    put_u16(f, 1);  // PCM
    put_u16(f, 1);  // mono
    put_u32(f, static_cast<std::uint32_t>(sample_rate));
    put_u32(f, static_cast<std::uint32_t>(sample_rate * 2));
    put_u16(f, 2);
    put_u16(f, 16);
    f.write("data", 4);
    put_u32(f, data_bytes);
    std::vector<std::int16_t> pcm(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        pcm[i] = static_cast<std::int16_t>(std::lround(std::clamp(samples[i], -1.0, 1.0) * 32767.0));
    f.write(reinterpret_cast<const char*>(pcm.data()), static_cast<std::streamsize>(pcm.size() * 2));
    if (!f) throw IoError("short write to '" + path + "'");
}

std::vector<Real> read_wav(const std::string& path, int* sample_rate) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    char tag[4];
    std::uint32_t u32 = 0;
    std::uint16_t fmt = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    f.read(tag, 4);
    if (std::memcmp(tag, "RIFF", 4) != 0) throw IoError("'" + path + "' is not a WAV file");
    f.read(reinterpret_cast<char*>(&u32), 4);
    f.read(tag, 4);
    if (std::memcmp(tag, "WAVE", 4) != 0) throw IoError("'" + path + "' is not a WAV file");

    std::vector<Real> samples;
    while (f.read(tag, 4) && f.read(reinterpret_cast<char*>(&u32), 4)) {
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            f.read(reinterpret_cast<char*>(&fmt), 2);
            f.read(reinterpret_cast<char*>(&channels), 2);
            f.read(reinterpret_cast<char*>(&rate), 4);
            f.ignore(6);
            f.read(reinterpret_cast<char*>(&bits), 2);
            f.ignore(u32 > 16 ? u32 - 16 : 0);
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (fmt != 1 || channels != 1 || bits != 16)
                throw IoError("'" + path + "': only 16-bit mono PCM is supported");
            std::vector<std::int16_t> pcm(u32 / 2);
            f.read(reinterpret_cast<char*>(pcm.data()), u32);
            if (!f) throw IoError("truncated WAV '" + path + "'");
            samples.resize(pcm.size());
            for (std::size_t i = 0; i < pcm.size(); ++i)
                samples[i] = static_cast<Real>(pcm[i]) / 32767.0;
            break;
        } else {
            f.ignore(u32 + (u32 & 1));
        }
    }
    if (samples.empty()) throw IoError("'" + path + "' has no data chunk");
    if (sample_rate) *sample_rate = static_cast<int>(rate);
    return samples;
}

void write_score_plot(const std::vector<Real>& scores, const std::vector<int>& labels,
                      const std::string& path) {
    if (scores.empty() || scores.size() != labels.size())
        throw IoError("score plot needs equal, nonempty scores/labels");
    const int t = static_cast<int>(scores.size());
    const int px_per_frame = std::max(1, 512 / t);
    const int w = t * px_per_frame, h = 128;
    std::vector<unsigned char> rgb(static_cast<std::size_t>(w * h * 3));

    auto put = [&](int x, int y, unsigned char r, unsigned char g, unsigned char b) {
        const std::size_t i = static_cast<std::size_t>((y * w + x) * 3);
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    };
    for (int x = 0; x < w; ++x) {
        const int frame = x / px_per_frame;
        const bool pos = labels[static_cast<std::size_t>(frame)] == 1;
        for (int y = 0; y < h; ++y)
            put(x, y, pos ? 24 : 16, pos ? 64 : 16, pos ? 24 : 16);
    }
    for (int x = 0; x < w; ++x) {
        const int frame = x / px_per_frame;
        const Real s = std::clamp(scores[static_cast<std::size_t>(frame)], 0.0, 1.0);
        const int y = static_cast<int>(std::lround((1.0 - s) * (h - 1)));
        for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, h - 1);
            put(x, yy, 250, 250, 250);
        }
    }
    // 0.5 threshold line
    for (int x = 0; x < w; x += 3) put(x, h / 2, 128, 128, 128);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "P6\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw IoError("short write to '" + path + "'");
}

std::uint64_t file_fingerprint(const std::string& path) {
    const std::string bytes = read_text_file(path);
    return fnv1a(bytes.data(), bytes.size());
}

}  // namespace asdnb
