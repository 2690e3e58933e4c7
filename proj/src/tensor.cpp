#include "mia/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mia {

void check_shape(const Shape& shape) {
    if (shape.empty()) {
        throw std::invalid_argument("tensor shape must have at least one axis");
    }
    for (std::size_t e : shape) {
        if (e == 0) {
            throw std::invalid_argument("tensor extent must be >= 1, got shape " + shape_str(shape));
        }
    }
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
    }
}

template <typename T>
std::size_t BasicTensor<T>::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
        throw std::out_of_range("index rank does not match tensor rank");
    }
    std::size_t off = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= shape_[i]) throw std::out_of_range("tensor index out of range");
        off = off * shape_[i] + index[i];
    }
    return off;
}

template <typename T>
void BasicTensor<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
    BasicTensor out = *this;
    out.reshape(std::move(shape));
    return out;
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
    check_shape(shape);
    if (shape_numel(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    shape_ = std::move(shape);
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace mia
