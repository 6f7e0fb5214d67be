#pragma once

// Dense row-major tensors with a define-by-run computation graph.
//
// A Tensor is a shared handle: copies alias the same storage, gradient buffer
// and producing node. Operations that consume at least one tensor requiring
// gradients record a Node holding their inputs and a backward closure; the
// graph is therefore owned by the tensors that reference it and disappears
// once the loss of a training step goes out of scope.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faae {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct TensorData;

template <typename T>
class Tensor;

template <typename T>
struct Node {
    std::string_view op;
    std::vector<Tensor<T>> inputs;
    // Reads the output gradient from `out` and accumulates into the inputs.
    std::function<void(const TensorData<T>& out)> backward;
};

template <typename T>
struct TensorData {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
    std::shared_ptr<Node<T>> node;
};

template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor();
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<T> values);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, T value);
    static Tensor scalar(T value);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return impl_->value.size(); }

    std::span<T> data() { return impl_->value; }
    std::span<const T> data() const { return impl_->value; }
    const std::vector<T>& values() const { return impl_->value; }
    T item() const;
    T at(std::size_t flat_index) const { return impl_->value.at(flat_index); }

    bool has_grad() const { return !impl_->grad.empty(); }
    // Zero-filled gradient buffer, allocated on first use.
    std::span<T> grad();
    std::span<const T> grad() const { return impl_->grad; }
    void zero_grad();

    bool requires_grad() const { return impl_->requires_grad; }
    // Only leaves may toggle gradient tracking.
    Tensor& set_requires_grad(bool on = true);
    bool is_leaf() const { return impl_->node == nullptr; }
    const std::shared_ptr<Node<T>>& node() const { return impl_->node; }

    // New leaf with a copy of the values and no graph linkage.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
    TensorData<T>& impl() { return *impl_; }
    const TensorData<T>& impl() const { return *impl_; }

    // Wraps a freshly computed value. A Node is attached when recording is
    // enabled and any input requires gradients.
    static Tensor make_result(Shape shape, std::vector<T> values, std::string_view op,
                              std::vector<Tensor> inputs,
                              std::function<void(const TensorData<T>&)> backward);

private:
    std::shared_ptr<TensorData<T>> impl_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_recording_enabled();

// Fills the gradient of every reachable leaf that requires gradients with
// d(loss)/d(leaf), accumulating into any existing leaf gradient. Intermediate
// gradients are released afterwards.
template <typename T>
void backward(const Tensor<T>& loss);

// Topologically ordered view over the nodes reachable from a root.
template <typename T>
class Graph {
public:
    struct Entry {
        std::string_view op;
        std::vector<long> inputs;  // entry indices, -1 for leaves
        const TensorData<T>* output = nullptr;
    };

    static Graph trace(const Tensor<T>& root);
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<Entry> entries_;
};

// Records, while active, the smallest distance of any evaluated operation input
// to a point where that operation is not differentiable (a leaky-ReLU at zero,
// a max-pool tie, a log clamp boundary, a zero-norm projection). Finite
// difference checks consult it to stay away from kinks.
class SmoothnessProbe {
public:
    SmoothnessProbe();
    ~SmoothnessProbe();
    SmoothnessProbe(const SmoothnessProbe&) = delete;
    SmoothnessProbe& operator=(const SmoothnessProbe&) = delete;

    double min_margin() const { return margin_; }
    void reset();

    static void report(double margin);

private:
    double margin_;
    SmoothnessProbe* previous_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Graph<float>;
extern template class Graph<double>;
extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

}  // namespace faae
