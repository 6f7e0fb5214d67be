#include "faae/tensor.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "faae/error.hpp"

namespace faae {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

thread_local bool g_recording = true;
thread_local SmoothnessProbe* g_probe = nullptr;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

bool grad_recording_enabled() { return g_recording; }

SmoothnessProbe::SmoothnessProbe()
    : margin_(std::numeric_limits<double>::infinity()), previous_(g_probe) {
    g_probe = this;
}

SmoothnessProbe::~SmoothnessProbe() { g_probe = previous_; }

void SmoothnessProbe::reset() { margin_ = std::numeric_limits<double>::infinity(); }

void SmoothnessProbe::report(double margin) {
    if (g_probe && margin < g_probe->margin_) g_probe->margin_ = margin;
}

template <typename T>
Tensor<T>::Tensor() : impl_(std::make_shared<TensorData<T>>()) {
    impl_->value.assign(1, T(0));
}

template <typename T>
Tensor<T>::Tensor(Shape shape) : impl_(std::make_shared<TensorData<T>>()) {
    impl_->value.assign(shape_numel(shape), T(0));
    impl_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : impl_(std::make_shared<TensorData<T>>()) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->value = std::move(values);
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
    return Tensor(std::move(shape));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.impl_->value.begin(), t.impl_->value.end(), value);
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
    return Tensor(Shape{}, std::vector<T>{value});
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
    if (axis >= impl_->shape.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_string(impl_->shape));
    }
    return impl_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
    if (impl_->value.size() != 1) {
        throw ContractError("item() on tensor of shape " + shape_string(impl_->shape));
    }
    return impl_->value[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() {
    if (impl_->grad.size() != impl_->value.size()) impl_->grad.assign(impl_->value.size(), T(0));
    return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
    if (!is_leaf()) throw ContractError("set_requires_grad on a non-leaf tensor");
    impl_->requires_grad = on;
    return *this;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return Tensor(impl_->shape, impl_->value);
}

template <typename T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> values, std::string_view op,
                                 std::vector<Tensor> inputs,
                                 std::function<void(const TensorData<T>&)> backward_fn) {
    Tensor out(std::move(shape), std::move(values));
    if (!g_recording) return out;
    bool any = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
    if (!any) return out;
    auto node = std::make_shared<Node<T>>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_fn);
    out.impl_->node = std::move(node);
    out.impl_->requires_grad = true;
    return out;
}

namespace {

// Post-order over producing nodes; leaves are not included.
template <typename T>
std::vector<TensorData<T>*> topological_order(TensorData<T>* root) {
    std::vector<TensorData<T>*> order;
    if (!root->node) return order;
    std::unordered_map<const TensorData<T>*, bool> visited;
    struct Frame {
        TensorData<T>* data;
        std::size_t next;
    };
    std::vector<Frame> stack{{root, 0}};
    visited[root] = true;
    while (!stack.empty()) {
        Frame& top = stack.back();
        auto& inputs = top.data->node->inputs;
        if (top.next < inputs.size()) {
            TensorData<T>* child = &inputs[top.next++].impl();
            if (child->node && !visited[child]) {
                visited[child] = true;
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(top.data);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " +
                            shape_string(loss.shape()));
    }
    auto& root = const_cast<TensorData<T>&>(loss.impl());
    if (!root.node) {
        // A leaf loss still has a gradient with respect to itself.
        if (root.requires_grad) {
            if (root.grad.empty()) root.grad.assign(1, T(0));
            root.grad[0] += T(1);
        }
        return;
    }
    std::vector<TensorData<T>*> order = topological_order(&root);
    root.grad.assign(1, T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorData<T>* out = *it;
        if (out->grad.empty()) continue;
        for (auto& input : out->node->inputs) {
            if (input.requires_grad()) input.grad();
        }
        out->node->backward(*out);
    }
    for (TensorData<T>* out : order) {
        out->grad.clear();
        out->grad.shrink_to_fit();
    }
}

template <typename T>
Graph<T> Graph<T>::trace(const Tensor<T>& root) {
    Graph g;
    auto order = topological_order(const_cast<TensorData<T>*>(&root.impl()));
    std::unordered_map<const TensorData<T>*, long> index;
    for (TensorData<T>* data : order) {
        Entry e;
        e.op = data->node->op;
        e.output = data;
        for (const auto& in : data->node->inputs) {
            auto found = index.find(&in.impl());
            e.inputs.push_back(found == index.end() ? -1 : found->second);
        }
        index[data] = static_cast<long>(g.entries_.size());
        g.entries_.push_back(std::move(e));
    }
    return g;
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace faae
