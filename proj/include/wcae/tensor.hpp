#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wcae/error.hpp"

namespace wcae {

/// Shape of a rank-3 activation: batch x length x channels.
struct Shape {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::size_t channels = 0;

    std::size_t size() const noexcept { return batch * length * channels; }
    friend bool operator==(const Shape&, const Shape&) = default;
    std::string str() const {
        return "(" + std::to_string(batch) + "," + std::to_string(length) + "," + std::to_string(channels) + ")";
    }
};

/// Dense rank-3 tensor.
///
/// Layout is fixed: element (b, t, c) lives at ((b * length) + t) * channels + c,
/// so channels are contiguous and each batch item is a row-major
/// length x channels matrix. Checkpoints store arrays in this order.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {
        if (shape.batch == 0 || shape.length == 0 || shape.channels == 0) {
            throw InvalidInput("Tensor3: all dimensions must be >= 1, got " + shape.str());
        }
    }
    Tensor3(std::size_t batch, std::size_t length, std::size_t channels, double fill = 0.0)
        : Tensor3(Shape{batch, length, channels}, fill) {}

    const Shape& shape() const noexcept { return shape_; }
    std::size_t batch() const noexcept { return shape_.batch; }
    std::size_t length() const noexcept { return shape_.length; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t b, std::size_t t, std::size_t c) noexcept {
        return data_[(b * shape_.length + t) * shape_.channels + c];
    }
    double operator()(std::size_t b, std::size_t t, std::size_t c) const noexcept {
        return data_[(b * shape_.length + t) * shape_.channels + c];
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    /// Pointer to the length x channels plane of batch item b.
    double* item(std::size_t b) noexcept { return data_.data() + b * shape_.length * shape_.channels; }
    const double* item(std::size_t b) const noexcept {
        return data_.data() + b * shape_.length * shape_.channels;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

private:
    Shape shape_{};
    std::vector<double> data_;
};

}  // namespace wcae
