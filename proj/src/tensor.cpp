#include "melanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace melanet {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    }
    data.assign(static_cast<size_t>(shape_numel(shape)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape_in, float fill_value) : Tensor(std::move(shape_in)) {
    fill(fill_value);
}

void Tensor::fill(float v) {
    std::fill(data.begin(), data.end(), v);
}

void Tensor::reshape(std::vector<int> new_shape) {
    if (shape_numel(new_shape) != numel())
        throw std::invalid_argument("Tensor::reshape: numel mismatch");
    shape = std::move(new_shape);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

void add_inplace(Tensor& y, const Tensor& x) {
    if (!y.same_shape(x)) throw std::invalid_argument("add_inplace: shape mismatch");
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
}

void axpy_inplace(Tensor& y, float a, const Tensor& x) {
    if (!y.same_shape(x)) throw std::invalid_argument("axpy_inplace: shape mismatch");
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

void scale_inplace(Tensor& y, float a) {
    for (float& v : y.data) v *= a;
}

bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace melanet
