#include "melanet/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "melanet/errors.hpp"
#include "melanet/tensor.hpp"

namespace melanet::nn {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'N', 'T', 'C', 'K', 'P', 'T'};
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeF64 = 1;

void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
    write_bytes(os, &v, sizeof(T));
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<uint64_t>(os, s.size());
    write_bytes(os, s.data(), s.size());
}

void read_bytes(std::istream& is, void* p, size_t n, const std::string& field) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n)
        throw DataError("checkpoint: truncated while reading '" + field + "'");
}

template <typename T>
T read_pod(std::istream& is, const std::string& field) {
    T v;
    read_bytes(is, &v, sizeof(T), field);
    return v;
}

std::string read_string(std::istream& is, const std::string& field) {
    auto n = read_pod<uint64_t>(is, field);
    if (n > (1u << 20)) throw DataError("checkpoint: implausible length for '" + field + "'");
    std::string s(n, '\0');
    read_bytes(is, s.data(), n, field);
    return s;
}

void write_shape(std::ostream& os, const std::vector<int>& shape) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_pod<int32_t>(os, d);
}

std::vector<int> read_shape(std::istream& is, const std::string& field) {
    auto ndim = read_pod<uint32_t>(is, field);
    if (ndim > 8) throw DataError("checkpoint: implausible rank for '" + field + "'");
    std::vector<int> shape(ndim);
    for (auto& d : shape) {
        d = read_pod<int32_t>(is, field);
        if (d <= 0) throw DataError("checkpoint: non-positive dimension in '" + field + "'");
    }
    return shape;
}

}  // namespace

void Checkpoint::put_f32(const std::string& name, std::vector<int> shape,
                         std::vector<float> data) {
    if (shape_numel(shape) != static_cast<long long>(data.size()))
        throw DataError("checkpoint: shape/data size mismatch for '" + name + "'");
    arrays_f32[name] = {std::move(shape), std::move(data)};
}

void Checkpoint::put_f64(const std::string& name, std::vector<int> shape,
                         std::vector<double> data) {
    if (shape_numel(shape) != static_cast<long long>(data.size()))
        throw DataError("checkpoint: shape/data size mismatch for '" + name + "'");
    arrays_f64[name] = {std::move(shape), std::move(data)};
}

const ArrayF32& Checkpoint::get_f32(const std::string& name) const {
    auto it = arrays_f32.find(name);
    if (it == arrays_f32.end()) throw DataError("checkpoint: missing array '" + name + "'");
    return it->second;
}

const ArrayF64& Checkpoint::get_f64(const std::string& name) const {
    auto it = arrays_f64.find(name);
    if (it == arrays_f64.end()) throw DataError("checkpoint: missing array '" + name + "'");
    return it->second;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");

    write_bytes(os, kMagic, sizeof(kMagic));
    write_pod<uint32_t>(os, kVersion);
    write_string(os, metadata.dump());
    write_pod<uint64_t>(os, arrays_f32.size() + arrays_f64.size());
    for (const auto& [name, arr] : arrays_f32) {
        write_string(os, name);
        write_pod<uint8_t>(os, kDtypeF32);
        write_shape(os, arr.shape);
        write_bytes(os, arr.data.data(), arr.data.size() * sizeof(float));
    }
    for (const auto& [name, arr] : arrays_f64) {
        write_string(os, name);
        write_pod<uint8_t>(os, kDtypeF64);
        write_shape(os, arr.shape);
        write_bytes(os, arr.data.data(), arr.data.size() * sizeof(double));
    }
    os.flush();
    if (!os) throw DataError("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open '" + path.string() + "'");

    char magic[8];
    read_bytes(is, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("checkpoint: bad magic in '" + path.string() + "'");
    auto version = read_pod<uint32_t>(is, "version");
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version) +
                        " (expected " + std::to_string(kVersion) + ")");

    Checkpoint ckpt;
    std::string meta_text = read_string(is, "metadata");
    ckpt.metadata = nlohmann::json::parse(meta_text, nullptr, false);
    if (ckpt.metadata.is_discarded())
        throw DataError("checkpoint: corrupt field 'metadata' (invalid JSON)");

    auto count = read_pod<uint64_t>(is, "array count");
    for (uint64_t i = 0; i < count; ++i) {
        std::string name = read_string(is, "array name");
        auto dtype = read_pod<uint8_t>(is, name);
        auto shape = read_shape(is, name);
        size_t numel = static_cast<size_t>(shape_numel(shape));
        if (dtype == kDtypeF32) {
            std::vector<float> data(numel);
            read_bytes(is, data.data(), numel * sizeof(float), name);
            ckpt.arrays_f32[name] = {std::move(shape), std::move(data)};
        } else if (dtype == kDtypeF64) {
            std::vector<double> data(numel);
            read_bytes(is, data.data(), numel * sizeof(double), name);
            ckpt.arrays_f64[name] = {std::move(shape), std::move(data)};
        } else {
            throw DataError("checkpoint: unknown dtype for '" + name + "'");
        }
    }
    return ckpt;
}

}  // namespace melanet::nn
