#include "mfuse/nn/tensor.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <stdexcept>
#include <unordered_set>

namespace mfuse::nn {
namespace {

thread_local bool recording = true;

} // namespace

std::string Shape::str() const
{
    return fmt::format("({}, {}, {}, {})", n, c, h, w);
}

bool grad_enabled()
{
    return recording;
}

NoGradGuard::NoGradGuard() : previous_(recording)
{
    recording = false;
}

NoGradGuard::~NoGradGuard()
{
    recording = previous_;
}

Tensor::Tensor(Shape shape, std::span<const double> values, bool requires_grad)
    : Tensor(shape, Buffer(values.begin(), values.end()), requires_grad)
{
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values, bool requires_grad)
    : Tensor(shape, Buffer(values), requires_grad)
{
}

Tensor::Tensor(Shape shape, Buffer values, bool requires_grad)
    : node_(std::make_shared<Node>())
{
    if (values.size() != shape.numel())
        throw std::invalid_argument(
            fmt::format("tensor {} needs {} values, got {}", shape.str(), shape.numel(), values.size()));
    node_->shape = shape;
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
    if (requires_grad)
        node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad)
{
    return Tensor(shape, Buffer(shape.numel(), 0.0), requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad)
{
    return Tensor(shape, Buffer(shape.numel(), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad)
{
    return Tensor(Shape{}, {value}, requires_grad);
}

double Tensor::item() const
{
    if (numel() != 1)
        throw std::invalid_argument(fmt::format("item() on tensor of shape {}", shape().str()));
    return node_->value[0];
}

void Tensor::zero_grad()
{
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detached() const
{
    return Tensor(node_->shape, node_->value, false);
}

Tensor Tensor::make_result(Shape shape, Buffer values, std::vector<Tensor> parents,
                           std::function<void(Node&)> backward)
{
    Tensor out(shape, std::move(values), false);
    if (!recording)
        return out;
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.defined() && p.requires_grad(); });
    if (!any)
        return out;
    Node& node = *out.node_;
    node.requires_grad = true;
    node.grad.assign(node.value.size(), 0.0);
    node.parents.reserve(parents.size());
    for (auto& p : parents)
        node.parents.push_back(p.node_);
    node.backward = std::move(backward);
    return out;
}

void Tensor::backward() const
{
    if (numel() != 1)
        throw std::invalid_argument(fmt::format("backward() needs a scalar, got shape {}", shape().str()));
    if (!requires_grad())
        throw std::logic_error("backward() on a tensor that does not require gradients");

    // Iterative post-order DFS over the grad-carrying subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent != nullptr && parent->requires_grad && seen.insert(parent).second)
                stack.push_back({parent, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior gradients are recomputed from scratch; leaves accumulate.
    for (Node* n : order)
        if (n->backward)
            std::fill(n->grad.begin(), n->grad.end(), 0.0);
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward)
            (*it)->backward(**it);
}

} // namespace mfuse::nn
