#include "remnet/tensor.hpp"

#include <sstream>
#include <stdexcept>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace remnet {

namespace {

// Activation tensors run to tens of MB and are allocated/freed every layer
// call; glibc would hand each one to mmap and eat a page-fault storm per
// step. Keep large blocks on the heap for reuse.
struct MallocTuning {
    MallocTuning() {
#ifdef __GLIBC__
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    }
};
const MallocTuning malloc_tuning;

}  // namespace

std::size_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::size_t n = 1;
    for (std::int64_t d : shape) {
        if (d < 0) throw std::invalid_argument("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape, bool requires_grad)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0), requires_grad_(requires_grad) {}

Tensor Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    return Tensor(std::move(shape), requires_grad);
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<std::int64_t> shape, std::vector<double> values,
                         bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("tensor data size does not match shape");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    t.requires_grad_ = requires_grad;
    return t;
}

Tensor Tensor::randn(std::vector<std::int64_t> shape, Rng& rng, double stddev,
                     bool requires_grad) {
    Tensor t(std::move(shape), requires_grad);
    for (double& v : t.data_) v = rng.next_gaussian() * stddev;
    return t;
}

void Tensor::set_requires_grad(bool flag) {
    requires_grad_ = flag;
    if (!flag) grad_.clear();
}

std::vector<double>& Tensor::grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
    return grad_;
}

void Tensor::zero_grad() {
    std::fill(grad_.begin(), grad_.end(), 0.0);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

}  // namespace remnet
