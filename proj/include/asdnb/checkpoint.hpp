#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asdnb/tensor.hpp"

namespace asdnb {

// Versioned container: 8-byte magic, u64 manifest length, JSON manifest
// (names, shapes, dtype, epoch, config fingerprint), then the raw payload of
// all tensors in manifest order as little-endian float64. Round-trips are
// bit-exact.
struct CheckpointData {
    int version = 1;
    int epoch = 0;
    std::uint64_t config_fingerprint = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);  // throws CheckpointError

}  // namespace asdnb
