#include "edenet/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "edenet/errors.hpp"
#include "fft_conv.hpp"

namespace edenet {

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

long long shape_numel(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) {
        if (d <= 0) throw DimensionError("tensor extent must be positive, got shape " + shape_str(s));
        n *= d;
    }
    return n;
}

bool any_tracked(const std::vector<TensorPtr>& ts) {
    for (const auto& t : ts)
        if (t && t->tracked()) return true;
    return false;
}

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape)
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                             shape_str(b->shape));
}

// Unpacks [C,H,W] spatial input plus [C_out,C_in,K,K] kernels and validates
// the conv contract. Shared by forward and the scalar helpers.
struct ConvDims {
    int c_in, h, w, c_out, k, h_out, w_out;
};

ConvDims conv_dims(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding) {
    if (input->rank() != 3)
        throw DimensionError("conv2d: input must be [C,H,W], got " + shape_str(input->shape));
    if (kernels->rank() != 4)
        throw DimensionError("conv2d: kernels must be [C_out,C_in,K,K], got " + shape_str(kernels->shape));
    if (kernels->dim(2) != kernels->dim(3))
        throw DimensionError("conv2d: kernels must be square, got " + shape_str(kernels->shape));
    if (stride < 1) throw UsageError("conv2d: stride must be >= 1");
    if (padding < 0) throw UsageError("conv2d: padding must be >= 0");

    ConvDims d;
    d.c_in = input->dim(0);
    d.h = input->dim(1);
    d.w = input->dim(2);
    d.c_out = kernels->dim(0);
    d.k = kernels->dim(2);
    if (kernels->dim(1) != d.c_in)
        throw DimensionError("conv2d: kernel C_in " + std::to_string(kernels->dim(1)) +
                             " does not match input channels " + std::to_string(d.c_in));
    if (d.k > d.h + 2 * padding || d.k > d.w + 2 * padding)
        throw DimensionError("conv2d: kernel extent " + std::to_string(d.k) +
                             " exceeds padded input " + std::to_string(d.h + 2 * padding) + "x" +
                             std::to_string(d.w + 2 * padding));
    d.h_out = (d.h + 2 * padding - d.k) / stride + 1;
    d.w_out = (d.w + 2 * padding - d.k) / stride + 1;
    return d;
}

// input [C,H,W] -> cols [C*K*K, H_out*W_out], zero outside the padded frame
void im2col(const double* in, const ConvDims& d, int stride, int padding, double* cols) {
    const int spatial = d.h_out * d.w_out;
    for (int c = 0; c < d.c_in; ++c) {
        for (int ki = 0; ki < d.k; ++ki) {
            for (int kj = 0; kj < d.k; ++kj) {
                double* row = cols + (std::size_t)((c * d.k + ki) * d.k + kj) * spatial;
                for (int y = 0; y < d.h_out; ++y) {
                    const int iy = y * stride - padding + ki;
                    double* out_row = row + (std::size_t)y * d.w_out;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(out_row, out_row + d.w_out, 0.0);
                        continue;
                    }
                    const double* in_row = in + ((std::size_t)c * d.h + iy) * d.w;
                    for (int x = 0; x < d.w_out; ++x) {
                        const int ix = x * stride - padding + kj;
                        out_row[x] = (ix >= 0 && ix < d.w) ? in_row[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// transpose of im2col: accumulates cols-shaped gradients back into [C,H,W]
void col2im_accum(const double* cols, const ConvDims& d, int stride, int padding, double* in_grad) {
    const int spatial = d.h_out * d.w_out;
    for (int c = 0; c < d.c_in; ++c) {
        for (int ki = 0; ki < d.k; ++ki) {
            for (int kj = 0; kj < d.k; ++kj) {
                const double* row = cols + (std::size_t)((c * d.k + ki) * d.k + kj) * spatial;
                for (int y = 0; y < d.h_out; ++y) {
                    const int iy = y * stride - padding + ki;
                    if (iy < 0 || iy >= d.h) continue;
                    double* g_row = in_grad + ((std::size_t)c * d.h + iy) * d.w;
                    const double* c_row = row + (std::size_t)y * d.w_out;
                    for (int x = 0; x < d.w_out; ++x) {
                        const int ix = x * stride - padding + kj;
                        if (ix >= 0 && ix < d.w) g_row[ix] += c_row[x];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_in, std::vector<double> data_in, bool rg)
    : shape(std::move(shape_in)), data(std::move(data_in)), requires_grad(rg) {
    const long long n = shape_numel(shape);
    if (n != static_cast<long long>(data.size()))
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
}

TensorPtr Tensor::make(std::vector<int> shape, std::vector<double> data, bool rg) {
    return std::make_shared<Tensor>(std::move(shape), std::move(data), rg);
}

TensorPtr Tensor::zeros(std::vector<int> shape, bool rg) {
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    return make(std::move(shape), std::vector<double>(n, 0.0), rg);
}

TensorPtr Tensor::full(std::vector<int> shape, double value, bool rg) {
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    return make(std::move(shape), std::vector<double>(n, value), rg);
}

TensorPtr Tensor::scalar(double value, bool rg) { return make({1}, {value}, rg); }

double Tensor::item() const {
    if (numel() != 1) throw UsageError("item(): tensor has " + std::to_string(numel()) + " elements");
    return data[0];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::backward() {
    if (numel() != 1) throw UsageError("backward(): root must be a scalar");

    // post-order DFS over parent edges = topological order, leaves first
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(this, 0);
    visited.insert(this);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Tensor* t : order) t->ensure_grad();
    grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

TensorPtr make_op(std::vector<int> shape, std::vector<double> data, std::vector<TensorPtr> parents,
                  std::function<void()> backward_fn) {
    auto out = Tensor::make(std::move(shape), std::move(data));
    if (g_grad_enabled && any_tracked(parents)) {
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward_fn);
    }
    return out;
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding,
                 const TensorPtr& bias) {
    const ConvDims d = conv_dims(input, kernels, stride, padding);
    if (bias) {
        if (bias->rank() != 1 || bias->dim(0) != d.c_out)
            throw DimensionError("conv2d: bias must be [C_out], got " + shape_str(bias->shape));
    }

    const int spatial = d.h_out * d.w_out;
    const int ckk = d.c_in * d.k * d.k;
    std::vector<double> out((std::size_t)d.c_out * spatial);
    if (fftconv::prefer_small_direct(d.c_out, d.c_in, d.k, padding, d.h_out, d.w_out, stride)) {
        fftconv::correlate_small(input->data.data(), d.c_in, d.h, d.w, kernels->data.data(),
                                 d.c_out, d.k, padding, out.data());
    } else if (fftconv::prefer_fft(d.c_out, d.c_in, d.k, d.h + 2 * padding, d.w + 2 * padding,
                                   d.h_out, d.w_out, stride)) {
        fftconv::correlate(input->data.data(), d.c_in, d.h, d.w, kernels->data.data(), d.c_out,
                           d.k, padding, out.data());
    } else {
        std::vector<double> cols((std::size_t)ckk * spatial);
        im2col(input->data.data(), d, stride, padding, cols.data());
        ConstMatMap ker_m(kernels->data.data(), d.c_out, ckk);
        ConstMatMap col_m(cols.data(), ckk, spatial);
        MatMap out_m(out.data(), d.c_out, spatial);
        out_m.noalias() = ker_m * col_m;
    }
    if (bias) {
        for (int o = 0; o < d.c_out; ++o) {
            const double b = bias->data[(std::size_t)o];
            double* row = out.data() + (std::size_t)o * spatial;
            for (int s = 0; s < spatial; ++s) row[s] += b;
        }
    }

    auto result = Tensor::make({d.c_out, d.h_out, d.w_out}, std::move(out));
    std::vector<TensorPtr> parents{input, kernels};
    if (bias) parents.push_back(bias);
    if (grad_enabled() && any_tracked(parents)) {
        Tensor* self = result.get();
        result->parents = parents;
        result->backward_fn = [self, input, kernels, bias, d, stride, padding]() {
            const int spatial = d.h_out * d.w_out;
            const int ckk = d.c_in * d.k * d.k;
            ConstMatMap g_m(self->grad.data(), d.c_out, spatial);

            if (kernels->tracked()) {
                // d.kernels = g * cols^T; the cols buffer is rebuilt here
                // rather than held alive in the closure (it can be large)
                std::vector<double> cols((std::size_t)ckk * spatial);
                im2col(input->data.data(), d, stride, padding, cols.data());
                ConstMatMap col_m(cols.data(), ckk, spatial);
                MatMap kg_m(kernels->grad.data(), d.c_out, ckk);
                kg_m.noalias() += g_m * col_m.transpose();
            }
            if (input->tracked()) {
                std::vector<double> dcols((std::size_t)ckk * spatial);
                ConstMatMap ker_m(kernels->data.data(), d.c_out, ckk);
                MatMap dcol_m(dcols.data(), ckk, spatial);
                dcol_m.noalias() = ker_m.transpose() * g_m;
                col2im_accum(dcols.data(), d, stride, padding, input->grad.data());
            }
            if (bias && bias->tracked()) {
                for (int o = 0; o < d.c_out; ++o) {
                    double s = 0.0;
                    const double* row = self->grad.data() + (std::size_t)o * spatial;
                    for (int x = 0; x < spatial; ++x) s += row[x];
                    bias->grad[(std::size_t)o] += s;
                }
            }
        };
    }
    return result;
}

// ---------------------------------------------------------------------------
// maxpool2d
// ---------------------------------------------------------------------------

TensorPtr maxpool2d(const TensorPtr& input, int window, int stride) {
    if (input->rank() != 3)
        throw DimensionError("maxpool2d: input must be [C,H,W], got " + shape_str(input->shape));
    if (window < 1 || stride < 1) throw UsageError("maxpool2d: window and stride must be >= 1");
    const int c = input->dim(0), h = input->dim(1), w = input->dim(2);
    if (window > h || window > w)
        throw DimensionError("maxpool2d: window " + std::to_string(window) + " exceeds input " +
                             std::to_string(h) + "x" + std::to_string(w));
    const int ho = (h - window) / stride + 1;
    const int wo = (w - window) / stride + 1;

    std::vector<double> out((std::size_t)c * ho * wo);
    std::vector<int> argmax((std::size_t)c * ho * wo);
    for (int ch = 0; ch < c; ++ch) {
        const double* in_ch = input->data.data() + (std::size_t)ch * h * w;
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = 0;
                for (int i = 0; i < window; ++i) {
                    for (int j = 0; j < window; ++j) {
                        const int idx = (y * stride + i) * w + (x * stride + j);
                        if (in_ch[idx] > best) {  // strict: first index wins ties
                            best = in_ch[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = ((std::size_t)ch * ho + y) * wo + x;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }

    auto result = Tensor::make({c, ho, wo}, std::move(out));
    if (grad_enabled() && input->tracked()) {
        Tensor* self = result.get();
        result->parents = {input};
        auto am = std::make_shared<std::vector<int>>(std::move(argmax));
        result->backward_fn = [self, input, am, c, h, w, ho, wo]() {
            for (int ch = 0; ch < c; ++ch) {
                double* ig = input->grad.data() + (std::size_t)ch * h * w;
                for (int y = 0; y < ho; ++y)
                    for (int x = 0; x < wo; ++x) {
                        const std::size_t o = ((std::size_t)ch * ho + y) * wo + x;
                        ig[(*am)[o]] += self->grad[o];
                    }
            }
        };
    }
    return result;
}

// ---------------------------------------------------------------------------
// pooling / linear / activations
// ---------------------------------------------------------------------------

TensorPtr global_avg_pool(const TensorPtr& input) {
    if (input->rank() != 3)
        throw DimensionError("global_avg_pool: input must be [n,H,W], got " + shape_str(input->shape));
    const int n = input->dim(0), h = input->dim(1), w = input->dim(2);
    const double inv = 1.0 / (h * w);
    std::vector<double> out((std::size_t)n);
    for (int ch = 0; ch < n; ++ch) {
        const double* p = input->data.data() + (std::size_t)ch * h * w;
        double s = 0.0;
        for (int i = 0; i < h * w; ++i) s += p[i];
        out[(std::size_t)ch] = s * inv;
    }
    auto result = Tensor::make({n}, std::move(out));
    if (grad_enabled() && input->tracked()) {
        Tensor* self = result.get();
        result->parents = {input};
        result->backward_fn = [self, input, n, h, w, inv]() {
            for (int ch = 0; ch < n; ++ch) {
                const double g = self->grad[(std::size_t)ch] * inv;
                double* ig = input->grad.data() + (std::size_t)ch * h * w;
                for (int i = 0; i < h * w; ++i) ig[i] += g;
            }
        };
    }
    return result;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b) {
    if (x->rank() != 1) throw DimensionError("linear: x must be rank 1, got " + shape_str(x->shape));
    if (W->rank() != 2) throw DimensionError("linear: W must be rank 2, got " + shape_str(W->shape));
    const int m = W->dim(0), n = W->dim(1);
    if (x->dim(0) != n)
        throw DimensionError("linear: W is " + shape_str(W->shape) + " but x is " + shape_str(x->shape));
    if (b && (b->rank() != 1 || b->dim(0) != m))
        throw DimensionError("linear: bias must be [" + std::to_string(m) + "], got " + shape_str(b->shape));

    std::vector<double> out((std::size_t)m);
    {
        ConstMatMap w_m(W->data.data(), m, n);
        ConstVecMap x_v(x->data.data(), n);
        VecMap out_v(out.data(), m);
        out_v.noalias() = w_m * x_v;
    }
    if (b)
        for (int i = 0; i < m; ++i) out[(std::size_t)i] += b->data[(std::size_t)i];

    auto result = Tensor::make({m}, std::move(out));
    std::vector<TensorPtr> parents{x, W};
    if (b) parents.push_back(b);
    if (grad_enabled() && any_tracked(parents)) {
        Tensor* self = result.get();
        result->parents = parents;
        result->backward_fn = [self, x, W, b, m, n]() {
            ConstVecMap g_v(self->grad.data(), m);
            ConstMatMap w_m(W->data.data(), m, n);
            if (x->tracked()) {
                VecMap xg(x->grad.data(), n);
                xg.noalias() += w_m.transpose() * g_v;
            }
            if (W->tracked()) {
                ConstVecMap x_v(x->data.data(), n);
                MatMap wg(W->grad.data(), m, n);
                wg.noalias() += g_v * x_v.transpose();
            }
            if (b && b->tracked())
                for (int i = 0; i < m; ++i) b->grad[(std::size_t)i] += self->grad[(std::size_t)i];
        };
    }
    return result;
}

TensorPtr relu(const TensorPtr& x) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i)
                if (x->data[i] > 0.0) x->grad[i] += self->grad[i];
        };
    }
    return result;
}

TensorPtr sigmoid(const TensorPtr& x) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x->data[i]));
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i) {
                const double y = self->data[i];
                x->grad[i] += self->grad[i] * y * (1.0 - y);
            }
        };
    }
    return result;
}

TensorPtr softplus(const TensorPtr& x) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x->data[i];
        out[i] = v > 30.0 ? v : std::log1p(std::exp(v));
    }
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i) {
                const double v = x->data[i];
                const double s = v > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-v));
                x->grad[i] += self->grad[i] * s;
            }
        };
    }
    return result;
}

TensorPtr l2_normalize(const TensorPtr& x, L2NormMode mode) {
    double sq = 0.0;
    for (double v : x->data) sq += v * v;
    const double norm = std::sqrt(sq);
    if (mode == L2NormMode::Strict && norm <= 1e-12)
        throw DegenerateInputError("l2_normalize: input norm " + std::to_string(norm) +
                                   " is at or below 1e-12");
    const double denom = mode == L2NormMode::Strict ? norm : norm + 1e-8;

    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] / denom;
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x, norm, denom]() {
            double dot = 0.0;
            for (std::size_t i = 0; i < x->data.size(); ++i) dot += x->data[i] * self->grad[i];
            if (norm < 1e-300) {
                for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += self->grad[i] / denom;
                return;
            }
            const double coef = dot / (norm * denom * denom);
            for (std::size_t i = 0; i < x->data.size(); ++i)
                x->grad[i] += self->grad[i] / denom - x->data[i] * coef;
        };
    }
    return result;
}

TensorPtr concat(const std::vector<TensorPtr>& xs) {
    if (xs.empty()) throw UsageError("concat: needs at least one input");
    std::size_t total = 0;
    for (const auto& x : xs) total += x->data.size();
    std::vector<double> out;
    out.reserve(total);
    for (const auto& x : xs) out.insert(out.end(), x->data.begin(), x->data.end());

    auto result = make_op({static_cast<int>(total)}, std::move(out), xs, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        auto inputs = xs;
        result->backward_fn = [self, inputs]() {
            std::size_t off = 0;
            for (const auto& x : inputs) {
                if (x->tracked())
                    for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += self->grad[off + i];
                off += x->data.size();
            }
        };
    }
    return result;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
    const long long n = shape_numel(shape);
    if (n != x->numel())
        throw DimensionError("reshape: cannot view " + std::to_string(x->numel()) + " elements as " +
                             shape_str(shape));
    auto result = make_op(std::move(shape), x->data, {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += self->grad[i];
        };
    }
    return result;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    auto result = make_op(a->shape, std::move(out), {a, b}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, a, b]() {
            if (a->tracked())
                for (std::size_t i = 0; i < a->data.size(); ++i) a->grad[i] += self->grad[i];
            if (b->tracked())
                for (std::size_t i = 0; i < b->data.size(); ++i) b->grad[i] += self->grad[i];
        };
    }
    return result;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    auto result = make_op(a->shape, std::move(out), {a, b}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, a, b]() {
            if (a->tracked())
                for (std::size_t i = 0; i < a->data.size(); ++i) a->grad[i] += self->grad[i];
            if (b->tracked())
                for (std::size_t i = 0; i < b->data.size(); ++i) b->grad[i] -= self->grad[i];
        };
    }
    return result;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    auto result = make_op(a->shape, std::move(out), {a, b}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, a, b]() {
            if (a->tracked())
                for (std::size_t i = 0; i < a->data.size(); ++i) a->grad[i] += self->grad[i] * b->data[i];
            if (b->tracked())
                for (std::size_t i = 0; i < b->data.size(); ++i) b->grad[i] += self->grad[i] * a->data[i];
        };
    }
    return result;
}

TensorPtr scale(const TensorPtr& x, double c) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] * c;
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x, c]() {
            for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += self->grad[i] * c;
        };
    }
    return result;
}

TensorPtr add_scalar(const TensorPtr& x, double c) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] + c;
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += self->grad[i];
        };
    }
    return result;
}

TensorPtr sum_all(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->data) s += v;
    auto result = make_op({1}, {s}, {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            const double g = self->grad[0];
            for (std::size_t i = 0; i < x->data.size(); ++i) x->grad[i] += g;
        };
    }
    return result;
}

TensorPtr sqrt_op(const TensorPtr& x) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(std::max(x->data[i], 0.0));
    auto result = make_op(x->shape, std::move(out), {x}, nullptr);
    if (!result->parents.empty()) {
        Tensor* self = result.get();
        result->backward_fn = [self, x]() {
            for (std::size_t i = 0; i < x->data.size(); ++i)
                x->grad[i] += self->grad[i] / (2.0 * std::max(self->data[i], 1e-12));
        };
    }
    return result;
}

}  // namespace edenet
