#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace mfuse::nn {

/// Allocates on 64-byte boundaries. Eigen's vectorized kernels peel
/// differently depending on pointer alignment, so a fixed alignment keeps
/// results bit-identical regardless of where the heap puts a buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&)
    {
        return true;
    }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

/// Batch x channels x height x width.
struct Shape {
    std::size_t n = 1;
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    std::size_t numel() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Value grid plus gradient accumulator, recorded on a dynamic tape.
///
/// Tensors are shared handles: copies alias the same storage. Operations on
/// tensors that require gradients record a backward closure; `backward()` on
/// a scalar result walks the tape in reverse topological order. Leaf
/// gradients accumulate across calls until `zero_grad()`.
class Tensor {
public:
    struct Node {
        Shape shape;
        Buffer value;
        Buffer grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        /// Reads this node's grad and adds into the parents' grads.
        std::function<void(Node&)> backward;
    };

    Tensor() = default;
    Tensor(Shape shape, Buffer values, bool requires_grad = false);
    Tensor(Shape shape, std::span<const double> values, bool requires_grad = false);
    Tensor(Shape shape, std::initializer_list<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<double> values() { return node_->value; }
    std::span<const double> values() const { return node_->value; }
    /// Empty for tensors that do not require gradients.
    std::span<double> grad() { return node_->grad; }
    std::span<const double> grad() const { return node_->grad; }

    double item() const;
    void zero_grad();
    /// Seeds d(this)/d(this) = 1 and propagates. Requires a single element.
    void backward() const;
    /// Copy of the values with no tape history.
    Tensor detached() const;

    Node& node() const { return *node_; }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

    /// Builds an op result. Parents and the closure are dropped when no
    /// parent requires gradients or recording is disabled.
    static Tensor make_result(Shape shape, Buffer values, std::vector<Tensor> parents,
                              std::function<void(Node&)> backward);

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;
};

/// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

} // namespace mfuse::nn
