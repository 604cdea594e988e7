#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace melanet::nn {

struct ArrayF32 {
    std::vector<int> shape;
    std::vector<float> data;
};

struct ArrayF64 {
    std::vector<int> shape;
    std::vector<double> data;
};

// Self-describing container of named numeric arrays plus a JSON metadata
// block. Arrays are stored sorted by name, so save -> load -> save is
// byte-identical.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    nlohmann::json metadata = nlohmann::json::object();
    std::map<std::string, ArrayF32> arrays_f32;
    std::map<std::string, ArrayF64> arrays_f64;

    void put_f32(const std::string& name, std::vector<int> shape, std::vector<float> data);
    void put_f64(const std::string& name, std::vector<int> shape, std::vector<double> data);
    const ArrayF32& get_f32(const std::string& name) const;
    const ArrayF64& get_f64(const std::string& name) const;
    bool has_f32(const std::string& name) const { return arrays_f32.count(name) > 0; }
    bool has_f64(const std::string& name) const { return arrays_f64.count(name) > 0; }

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace melanet::nn
