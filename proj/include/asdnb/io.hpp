#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asdnb/common.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb {

// 8-bit grayscale PGM (binary P5). Tensors are [1,H,W] with values in [0,1];
// pixels are stored as round(v*255).
void write_pgm(const Tensor& image, const std::string& path);
Tensor read_pgm(const std::string& path);

// 16-bit PCM mono WAV; samples in [-1,1] stored as round(v*32767).
void write_wav(const std::vector<Real>& samples, int sample_rate, const std::string& path);
std::vector<Real> read_wav(const std::string& path, int* sample_rate = nullptr);

// Score-timeline plot: per-frame score curve over a label band, written as a
// binary PPM (P6).
void write_score_plot(const std::vector<Real>& scores, const std::vector<int>& labels,
                      const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::uint64_t file_fingerprint(const std::string& path);  // FNV-1a of the bytes

}  // namespace asdnb
