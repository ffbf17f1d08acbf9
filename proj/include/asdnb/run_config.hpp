#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asdnb/common.hpp"

namespace asdnb {

// Flat `key = value` config file; '#' starts a comment. CLI flags override
// file values.
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);  // throws ConfigError

    void set(const std::string& key, std::string value);
    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    Real get_real(const std::string& key, Real fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// One manifest per run: command, resolved config, seed, code version, input
// fingerprints, output paths. No timestamps, so identical runs write
// identical manifests.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;  // path -> fingerprint
    std::vector<std::string> outputs;
};

void write_run_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace asdnb
