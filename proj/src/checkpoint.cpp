#include "asdnb/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "asdnb/errors.hpp"

namespace asdnb {

using json = nlohmann::json;

namespace {
constexpr char kMagic[8] = {'A', 'S', 'D', 'N', 'B', 'C', 'K', '1'};
}

const Tensor* CheckpointData::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
    json manifest;
    manifest["version"] = data.version;
    manifest["epoch"] = data.epoch;
    manifest["config_fingerprint"] = data.config_fingerprint;
    json entries = json::array();
    for (const auto& [name, tensor] : data.tensors) {
        json e;
        e["name"] = name;
        e["shape"] = tensor.shape();
        e["dtype"] = "f64";
        entries.push_back(std::move(e));
    }
    manifest["entries"] = std::move(entries);
    const std::string m = manifest.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open '" + path + "' for writing");
    f.write(kMagic, 8);
    const std::uint64_t msize = m.size();
    f.write(reinterpret_cast<const char*>(&msize), 8);
    f.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto& [name, tensor] : data.tensors)
        f.write(reinterpret_cast<const char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.numel() * static_cast<std::int64_t>(sizeof(Real))));
    if (!f) throw CheckpointError("short write to '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open '" + path + "'");
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError("'" + path + "' is not a checkpoint file");
    std::uint64_t msize = 0;
    f.read(reinterpret_cast<char*>(&msize), 8);
    std::string m(msize, '\0');
    f.read(m.data(), static_cast<std::streamsize>(msize));
    if (!f) throw CheckpointError("truncated manifest in '" + path + "'");

    json manifest;
    try {
        manifest = json::parse(m);
    } catch (const json::exception& e) {
        throw CheckpointError("bad manifest in '" + path + "': " + e.what());
    }

    CheckpointData data;
    data.version = manifest.at("version").get<int>();
    if (data.version != 1) throw CheckpointError("unsupported checkpoint version");
    data.epoch = manifest.at("epoch").get<int>();
    data.config_fingerprint = manifest.at("config_fingerprint").get<std::uint64_t>();
    for (const auto& e : manifest.at("entries")) {
        if (e.at("dtype").get<std::string>() != "f64")
            throw CheckpointError("unsupported dtype in '" + path + "'");
        Tensor t(e.at("shape").get<std::vector<std::int64_t>>());
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * static_cast<std::int64_t>(sizeof(Real))));
        if (!f) throw CheckpointError("truncated payload in '" + path + "'");
        data.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    return data;
}

}  // namespace asdnb
