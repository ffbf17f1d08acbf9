#include "asdnb/tensor.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "asdnb/errors.hpp"

namespace asdnb {

namespace {
std::int64_t product(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

// Activation buffers are tens of MB and are reallocated every batch; keep
// them on the heap free lists instead of round-tripping through mmap, which
// costs a page fault per 4 KiB on every reuse.
[[maybe_unused]] const bool malloc_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
}();
}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    numel_ = product(shape_);
    data_ = std::shared_ptr<Real[]>(new Real[static_cast<std::size_t>(numel_)]);
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    Tensor t(std::move(shape));
    t.fill(0);
    return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, Real value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<Real> values) {
    Tensor t(std::move(shape));
    if (t.numel() != static_cast<std::int64_t>(values.size()))
        throw ShapeMismatch("Tensor::from: " + t.shape_str() + " vs " + std::to_string(values.size()) + " values");
    std::copy(values.begin(), values.end(), t.data());
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << ']';
    return os.str();
}

Tensor Tensor::reshaped(std::vector<std::int64_t> shape) const {
    if (product(shape) != numel_)
        throw ShapeMismatch("reshape " + shape_str() + " -> incompatible element count");
    Tensor t;
    t.data_ = data_;
    t.shape_ = std::move(shape);
    t.numel_ = numel_;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t(shape_);
    std::memcpy(t.data(), data(), static_cast<std::size_t>(numel_) * sizeof(Real));
    return t;
}

void Tensor::fill(Real v) {
    std::fill(data(), data() + numel_, v);
}

void Tensor::add_(const Tensor& other) {
    if (!same_shape(other)) throw ShapeMismatch("add_: " + shape_str() + " vs " + other.shape_str());
    const Real* src = other.data();
    Real* dst = data();
    for (std::int64_t i = 0; i < numel_; ++i) dst[i] += src[i];
}

void Tensor::scale_(Real k) {
    Real* dst = data();
    for (std::int64_t i = 0; i < numel_; ++i) dst[i] *= k;
}

bool Tensor::all_finite() const {
    const Real* p = data();
    for (std::int64_t i = 0; i < numel_; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

}  // namespace asdnb
