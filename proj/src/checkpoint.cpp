#include "remnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace remnet::ckpt {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64 = 0;

template <typename T>
void write_pod(std::ofstream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const char* what) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is.good()) throw std::runtime_error(std::string("checkpoint: truncated ") + what);
    return value;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

void save(const std::string& path, const std::vector<nn::ParamRef>& tensors,
          const nlohmann::json& metadata) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, kVersion);
    const std::string meta = metadata.dump();
    write_pod<std::uint64_t>(os, meta.size());
    os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    write_pod<std::uint64_t>(os, tensors.size());
    for (const nn::ParamRef& p : tensors) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_pod<std::uint32_t>(os, kDtypeF64);
        const auto& shape = p.tensor->shape();
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
        for (std::int64_t d : shape) write_pod<std::int64_t>(os, d);
        os.write(reinterpret_cast<const char*>(p.tensor->data()),
                 static_cast<std::streamsize>(p.tensor->numel() * sizeof(double)));
    }
    if (!os.good()) throw std::runtime_error("checkpoint: write failed: " + path);
}

std::pair<std::vector<NamedTensor>, nlohmann::json> read_all(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is.good() || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(is, "version");
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto meta_len = read_pod<std::uint64_t>(is, "metadata length");
    std::string meta(meta_len, '\0');
    is.read(meta.data(), static_cast<std::streamsize>(meta_len));
    if (!is.good()) throw std::runtime_error("checkpoint: truncated metadata");
    nlohmann::json metadata = nlohmann::json::parse(meta);

    const auto count = read_pod<std::uint64_t>(is, "tensor count");
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto name_len = read_pod<std::uint32_t>(is, "tensor name length");
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        const auto dtype = read_pod<std::uint32_t>(is, "tensor dtype");
        if (dtype != kDtypeF64) {
            throw std::runtime_error("checkpoint: unsupported dtype for tensor " + t.name);
        }
        const auto rank = read_pod<std::uint32_t>(is, "tensor rank");
        t.shape.resize(rank);
        std::size_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.shape[r] = read_pod<std::int64_t>(is, "tensor dim");
            numel *= static_cast<std::size_t>(t.shape[r]);
        }
        t.data.resize(numel);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!is.good()) throw std::runtime_error("checkpoint: truncated data for tensor " + t.name);
        tensors.push_back(std::move(t));
    }
    return {std::move(tensors), std::move(metadata)};
}

nlohmann::json read_metadata(const std::string& path) {
    return read_all(path).second;
}

nlohmann::json load_into(const std::string& path, const std::vector<nn::ParamRef>& tensors) {
    auto [stored, metadata] = read_all(path);
    std::map<std::string, NamedTensor*> by_name;
    for (NamedTensor& t : stored) by_name[t.name] = &t;
    for (const nn::ParamRef& p : tensors) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            throw std::runtime_error("checkpoint: missing tensor " + p.name);
        }
        if (it->second->shape != p.tensor->shape()) {
            throw std::runtime_error("checkpoint: shape mismatch for tensor " + p.name + " (file " +
                                     shape_to_string(it->second->shape) + ", model " +
                                     p.tensor->shape_str() + ")");
        }
        p.tensor->values() = it->second->data;
    }
    return metadata;
}

}  // namespace remnet::ckpt
