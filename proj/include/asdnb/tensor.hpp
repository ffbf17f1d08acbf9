#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "asdnb/common.hpp"

namespace asdnb {

// Dense row-major tensor of Real. The buffer is shared between copies;
// tensors are treated as immutable once produced, so layers may cache shallow
// copies for backward without duplicating activations. Use clone() before
// in-place mutation of a tensor someone else may hold.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape);

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, Real value);
    static Tensor from(std::vector<std::int64_t> shape, std::vector<Real> values);

    bool defined() const { return data_ != nullptr; }
    std::int64_t numel() const { return numel_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::string shape_str() const;

    Real* data() { return data_.get(); }
    const Real* data() const { return data_.get(); }

    Real& operator[](std::int64_t i) { return data_.get()[i]; }
    Real operator[](std::int64_t i) const { return data_.get()[i]; }

    // Same buffer, new shape (element count must match).
    Tensor reshaped(std::vector<std::int64_t> shape) const;
    Tensor clone() const;

    void fill(Real v);
    void zero() { fill(0); }
    void add_(const Tensor& other);          // elementwise +=
    void scale_(Real k);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::shared_ptr<Real[]> data_;
    std::vector<std::int64_t> shape_;
    std::int64_t numel_ = 0;
};

}  // namespace asdnb
