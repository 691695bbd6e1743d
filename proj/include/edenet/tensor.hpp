#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace edenet {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major tensor of doubles. A tensor produced by an operation
/// also acts as a node in the backward graph: it keeps shared ownership of
/// its inputs and a closure that routes the incoming gradient to them.
/// Leaf tensors with requires_grad set accumulate gradients in `grad`.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until backward() touches this node
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    Tensor() = default;
    Tensor(std::vector<int> shape_in, std::vector<double> data_in, bool rg = false);

    static TensorPtr make(std::vector<int> shape, std::vector<double> data, bool rg = false);
    static TensorPtr zeros(std::vector<int> shape, bool rg = false);
    static TensorPtr full(std::vector<int> shape, double value, bool rg = false);
    static TensorPtr scalar(double value, bool rg = false);

    int numel() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    // value of a single-element tensor
    double item() const;
    bool all_finite() const;

    // true if backward() will reach this node
    bool tracked() const { return requires_grad || !parents.empty(); }

    void ensure_grad();
    void zero_grad();

    /// Reverse-mode sweep from a scalar root. Seeds d(root)/d(root) = 1,
    /// then runs every recorded closure in reverse topological order.
    void backward();
};

/// Gradient recording is on by default; disable it around forward passes
/// whose outputs are never differentiated (mining, evaluation).
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// Builds an op result node. Parents and the closure are dropped when
/// recording is off or no parent is tracked, so untracked forwards carry
/// no graph overhead. Custom ops in other modules go through this.
TensorPtr make_op(std::vector<int> shape, std::vector<double> data,
                  std::vector<TensorPtr> parents, std::function<void()> backward_fn);

// ---------------------------------------------------------------------------
// Layer primitives
// ---------------------------------------------------------------------------

/// 2-D cross-correlation (no kernel flip), zero padding.
/// input [C_in,H,W], kernels [C_out,C_in,K,K], optional bias [C_out].
/// Output [C_out,H',W'] with H' = floor((H + 2*padding - K)/stride) + 1.
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding,
                 const TensorPtr& bias = nullptr);

/// Per-window maximum over each channel of [C,H,W]. Gradient routes to the
/// argmax element; ties go to the first index in row-major order.
TensorPtr maxpool2d(const TensorPtr& input, int window, int stride);

/// [n,H,W] -> [n], spatial mean per channel.
TensorPtr global_avg_pool(const TensorPtr& input);

/// W [m,n] times x [n], plus optional bias [m].
TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b = nullptr);

TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr softplus(const TensorPtr& x);

enum class L2NormMode {
    Strict,  // throws DegenerateInputError when the norm is <= 1e-12
    Train,   // adds 1e-8 to the norm so the graph stays differentiable
};

TensorPtr l2_normalize(const TensorPtr& x, L2NormMode mode = L2NormMode::Strict);

/// Flattens every input and joins them into one 1-D tensor.
TensorPtr concat(const std::vector<TensorPtr>& xs);

/// Same data, new shape (numel must match).
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);

// elementwise / reductions
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& x, double c);
TensorPtr add_scalar(const TensorPtr& x, double c);
TensorPtr sum_all(const TensorPtr& x);
TensorPtr sqrt_op(const TensorPtr& x);

}  // namespace edenet
