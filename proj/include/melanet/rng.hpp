#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace melanet {

// FNV-1a, used for stream-seed derivation and config fingerprints.
uint64_t fnv1a64(std::string_view s);
uint64_t fnv1a64(const void* data, size_t n, uint64_t basis);

// Deterministic per-stage / per-sample seed: hash of stream name mixed with the master seed.
uint64_t derive_seed(uint64_t master_seed, std::string_view stream_name);

// mt19937_64 engine with explicit value mappings. The std:: distributions are
// implementation-defined, so uniform/normal draws are produced here directly.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform();  // [0,1)
    double uniform(double lo, double hi);
    int64_t uniform_int(int64_t n);  // [0,n), n > 0
    double normal();                 // standard normal, Box-Muller
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    std::vector<int> permutation(int n);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace melanet
