#include "pointedge/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "pointedge/errors.hpp"

namespace pointedge {

namespace {

std::size_t shape_product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_)) {
        throw ValidationError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                              pointedge::shape_string(shape_));
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t c = n ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(n * c);
    for (const auto& r : rows) {
        if (r.size() != c) throw ValidationError("from_rows: ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({n, c}, std::move(data));
}

Tensor Tensor::column(std::span<const double> values) {
    return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ValidationError("rows(): expected rank-2 tensor, got " + shape_string());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ValidationError("cols(): expected rank-2 tensor, got " + shape_string());
    return shape_[1];
}

double Tensor::item() const {
    if (data_.size() != 1) throw ValidationError("item(): tensor " + shape_string() + " is not a scalar");
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_string() const { return pointedge::shape_string(shape_); }

}  // namespace pointedge
