#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace melanet {

// Dense row-major float tensor. Convention for 4-D data is NCHW.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in);
    Tensor(std::vector<int> shape_in, float fill_value);

    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }
    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    bool empty() const { return data.empty(); }

    // 4-D accessor (NCHW).
    float& at(int n, int c, int h, int w) {
        return data[static_cast<size_t>(((int64_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    float at(int n, int c, int h, int w) const {
        return data[static_cast<size_t>(((int64_t(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    void fill(float v);
    void zero() { fill(0.0f); }
    void reshape(std::vector<int> new_shape);  // numel must match

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// y += x (shapes must match)
void add_inplace(Tensor& y, const Tensor& x);
// y += a * x
void axpy_inplace(Tensor& y, float a, const Tensor& x);
void scale_inplace(Tensor& y, float a);
bool all_finite(const Tensor& t);

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace melanet
