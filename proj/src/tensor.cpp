// SPDX-License-Identifier: Apache-2.0

#include "kdc/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace kdc {

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_next_id{1};

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
    throw dimension_error(std::string(op) + ": incompatible shapes " + shape_str(a) +
                          " and " + shape_str(b));
}

// ---- dense kernels ------------------------------------------------------
//
// Plain blocked loops; the k-blocking keeps the streamed panel of b resident
// in L2 so the 4-wide unroll stays FMA bound instead of store bound.

void mm_nn(const double* __restrict a, const double* __restrict b,
           double* __restrict c, std::size_t m, std::size_t k, std::size_t n) {
    constexpr std::size_t PB = 64;
    for (std::size_t pb = 0; pb < k; pb += PB) {
        const std::size_t pe = std::min(pb + PB, k);
        for (std::size_t i = 0; i < m; ++i) {
            double* __restrict ci = c + i * n;
            const double* __restrict ai = a + i * k;
            std::size_t p = pb;
            for (; p + 4 <= pe; p += 4) {
                const double* b0 = b + p * n;
                const double a0 = ai[p], a1 = ai[p + 1], a2 = ai[p + 2], a3 = ai[p + 3];
                for (std::size_t j = 0; j < n; ++j) {
                    ci[j] += a0 * b0[j] + a1 * b0[j + n] + a2 * b0[j + 2 * n] +
                             a3 * b0[j + 3 * n];
                }
            }
            for (; p < pe; ++p) {
                const double av = ai[p];
                const double* bp = b + p * n;
                for (std::size_t j = 0; j < n; ++j) {
                    ci[j] += av * bp[j];
                }
            }
        }
    }
}

// c[m×n] += a[m×k] · b[n×k]ᵀ. Row-major dot products; j outer so each row of
// b is read once while a stays cache resident.
void mm_nt(const double* __restrict a, const double* __restrict b,
           double* __restrict c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        const double* __restrict bj = b + j * k;
        for (std::size_t i = 0; i < m; ++i) {
            const double* __restrict ai = a + i * k;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                s0 += ai[p] * bj[p];
                s1 += ai[p + 1] * bj[p + 1];
                s2 += ai[p + 2] * bj[p + 2];
                s3 += ai[p + 3] * bj[p + 3];
            }
            double s = (s0 + s1) + (s2 + s3);
            for (; p < k; ++p) {
                s += ai[p] * bj[p];
            }
            c[i * n + j] += s;
        }
    }
}

// c[m×n] += a[k×m]ᵀ · b[k×n]. The reduction dimension k indexes rows of both
// inputs; a's column i is gathered per output row, b rows stream contiguously.
void mm_tn(const double* __restrict a, const double* __restrict b,
           double* __restrict c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict ci = c + i * n;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const double a0 = a[p * m + i], a1 = a[(p + 1) * m + i];
            const double a2 = a[(p + 2) * m + i], a3 = a[(p + 3) * m + i];
            const double* b0 = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += a0 * b0[j] + a1 * b0[j + n] + a2 * b0[j + 2 * n] +
                         a3 * b0[j + 3 * n];
            }
        }
        for (; p < k; ++p) {
            const double av = a[p * m + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

double dot_plain(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(const double* a, std::size_t n) {
    return std::sqrt(dot_plain(a, a, n));
}

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr result_node(Shape shape, std::vector<double> values,
                    std::vector<NodePtr> parents,
                    std::function<void(detail::Node&)> backprop) {
    auto node = detail::make_node(std::move(shape), std::move(values));
    bool needs_grad = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            needs_grad = needs_grad || (p && p->requires_grad);
        }
    }
    if (needs_grad) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backprop = std::move(backprop);
    }
    return node;
}

const detail::Node& node_of(const Tensor& t, const char* op) {
    if (!t.defined()) {
        throw contract_error(std::string(op) + ": undefined tensor");
    }
    return *t.node();
}

void check_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (node_of(t, op).shape.size() != rank) {
        throw dimension_error(std::string(op) + ": expected rank " +
                              std::to_string(rank) + ", got shape " +
                              shape_str(t.shape()));
    }
}

} // namespace

namespace detail {

NodePtr make_node(Shape shape, std::vector<double> values) {
    if (shape_product(shape) != values.size()) {
        throw dimension_error("tensor: shape " + shape_str(shape) + " does not match " +
                              std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<Node>();
    node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    node->shape = std::move(shape);
    node->values = std::move(values);
    return node;
}

std::vector<double>& grad_buf(Node& n) {
    if (n.grad.empty()) {
        n.grad.assign(n.values.size(), 0.0);
    }
    return n.grad;
}

} // namespace detail

GradGuard::GradGuard(bool enable) : previous_(g_grad_enabled) {
    g_grad_enabled = enable;
}

GradGuard::~GradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) {
    std::size_t n = shape_product(shape);
    return Tensor(detail::make_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(Shape shape, double value) {
    std::size_t n = shape_product(shape);
    return Tensor(detail::make_node(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    return Tensor(detail::make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) {
    return Tensor(detail::make_node({1}, {value}));
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
    auto node = detail::make_node(std::move(shape), std::move(values));
    node->requires_grad = true;
    return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_of(*this, "shape").shape; }
std::size_t Tensor::size() const { return node_of(*this, "size").values.size(); }
std::size_t Tensor::rank() const { return node_of(*this, "rank").shape.size(); }

std::size_t Tensor::rows() const {
    check_rank(*this, 2, "rows");
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    check_rank(*this, 2, "cols");
    return node_->shape[1];
}

std::uint64_t Tensor::id() const { return node_of(*this, "id").id; }

std::span<const double> Tensor::values() const {
    return node_of(*this, "values").values;
}

double Tensor::value() const {
    const auto& n = node_of(*this, "value");
    if (n.values.size() != 1) {
        throw contract_error("value: tensor is not scalar, shape " + shape_str(n.shape));
    }
    return n.values[0];
}

double Tensor::at(std::size_t i) const {
    check_rank(*this, 1, "at");
    return node_->values.at(i);
}

double Tensor::at(std::size_t i, std::size_t j) const {
    check_rank(*this, 2, "at");
    return node_->values.at(i * node_->shape[1] + j);
}

bool Tensor::requires_grad() const { return node_of(*this, "requires_grad").requires_grad; }
bool Tensor::has_grad() const { return !node_of(*this, "has_grad").grad.empty(); }

std::span<const double> Tensor::grad() const {
    const auto& n = node_of(*this, "grad");
    if (n.grad.empty()) {
        throw contract_error("grad: no gradient present; run backward first");
    }
    return n.grad;
}

void Tensor::zero_grad() {
    auto& n = node_of(*this, "zero_grad");
    auto& g = const_cast<detail::Node&>(n).grad;
    std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::apply_gradient_step(double learning_rate) {
    auto& n = *node_;
    if (n.backprop) {
        throw contract_error("apply_gradient_step: only leaf tensors can be updated");
    }
    if (learning_rate == 0.0 || n.grad.empty()) {
        return;
    }
    for (std::size_t i = 0; i < n.values.size(); ++i) {
        n.values[i] -= learning_rate * n.grad[i];
    }
}

void Tensor::load_values(std::span<const double> values) {
    auto& n = *node_;
    if (n.backprop) {
        throw contract_error("load_values: only leaf tensors can be overwritten");
    }
    if (values.size() != n.values.size()) {
        throw dimension_error("load_values: expected " + std::to_string(n.values.size()) +
                              " values, got " + std::to_string(values.size()));
    }
    std::copy(values.begin(), values.end(), n.values.begin());
}

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    const auto& an = node_of(a, "add");
    const auto& bn = node_of(b, "add");
    if (an.shape != bn.shape) {
        shape_mismatch("add", an.shape, bn.shape);
    }
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = an.values[i] + bn.values[i];
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node(), b.node()},
                              [](detail::Node& self) {
        for (int side = 0; side < 2; ++side) {
            auto& p = *self.parents[side];
            if (!p.requires_grad) continue;
            auto& g = detail::grad_buf(p);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i];
            }
        }
    }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const auto& an = node_of(a, "sub");
    const auto& bn = node_of(b, "sub");
    if (an.shape != bn.shape) {
        shape_mismatch("sub", an.shape, bn.shape);
    }
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = an.values[i] - bn.values[i];
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node(), b.node()},
                              [](detail::Node& self) {
        if (self.parents[0]->requires_grad) {
            auto& g = detail::grad_buf(*self.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.parents[1]->requires_grad) {
            auto& g = detail::grad_buf(*self.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    }));
}

Tensor scale(const Tensor& a, double c) {
    const auto& an = node_of(a, "scale");
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c * an.values[i];
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node()},
                              [c](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
    }));
}

Tensor add_const(const Tensor& a, double c) {
    const auto& an = node_of(a, "add_const");
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = an.values[i] + c;
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node()},
                              [](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }));
}

Tensor scalar_mul(const Tensor& a, const Tensor& s) {
    const auto& an = node_of(a, "scalar_mul");
    const auto& sn = node_of(s, "scalar_mul");
    if (sn.values.size() != 1) {
        throw dimension_error("scalar_mul: multiplier must be scalar, got " +
                              shape_str(sn.shape));
    }
    const double sv = sn.values[0];
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = sv * an.values[i];
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node(), s.node()},
                              [sv](detail::Node& self) {
        auto& a = *self.parents[0];
        auto& s = *self.parents[1];
        if (a.requires_grad) {
            auto& g = detail::grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sv * self.grad[i];
        }
        if (s.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                acc += self.grad[i] * a.values[i];
            }
            detail::grad_buf(s)[0] += acc;
        }
    }));
}

Tensor relu(const Tensor& a) {
    const auto& an = node_of(a, "relu");
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = an.values[i] > 0.0 ? an.values[i] : 0.0;
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node()},
                              [](detail::Node& self) {
        auto& p = *self.parents[0];
        auto& g = detail::grad_buf(p);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (p.values[i] > 0.0) g[i] += self.grad[i];
        }
    }));
}

Tensor gelu(const Tensor& a) {
    const auto& an = node_of(a, "gelu");
    std::vector<double> out(an.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = an.values[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
    }
    return Tensor(result_node(an.shape, std::move(out), {a.node()},
                              [](detail::Node& self) {
        constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
        auto& p = *self.parents[0];
        auto& g = detail::grad_buf(p);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = p.values[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            g[i] += self.grad[i] * (cdf + x * pdf);
        }
    }));
}

// ---- linear algebra ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank(a, 2, "matmul");
    check_rank(b, 2, "matmul");
    const auto& an = *a.node();
    const auto& bn = *b.node();
    const std::size_t m = an.shape[0], k = an.shape[1];
    if (bn.shape[0] != k) {
        shape_mismatch("matmul", an.shape, bn.shape);
    }
    const std::size_t n = bn.shape[1];
    std::vector<double> out(m * n, 0.0);
    mm_nn(an.values.data(), bn.values.data(), out.data(), m, k, n);
    return Tensor(result_node({m, n}, std::move(out), {a.node(), b.node()},
                              [m, k, n](detail::Node& self) {
        auto& a = *self.parents[0];
        auto& b = *self.parents[1];
        if (a.requires_grad) {
            mm_nt(self.grad.data(), b.values.data(), detail::grad_buf(a).data(), m, n, k);
        }
        if (b.requires_grad) {
            mm_tn(a.values.data(), self.grad.data(), detail::grad_buf(b).data(), k, m, n);
        }
    }));
}

Tensor transpose(const Tensor& a) {
    check_rank(a, 2, "transpose");
    const auto& an = *a.node();
    const std::size_t m = an.shape[0], n = an.shape[1];
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = an.values[i * n + j];
        }
    }
    return Tensor(result_node({n, m}, std::move(out), {a.node()},
                              [m, n](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] += self.grad[j * m + i];
            }
        }
    }));
}

Tensor matvec(const Tensor& a, const Tensor& v) {
    check_rank(a, 2, "matvec");
    check_rank(v, 1, "matvec");
    const auto& an = *a.node();
    const auto& vn = *v.node();
    const std::size_t m = an.shape[0], n = an.shape[1];
    if (vn.shape[0] != n) {
        shape_mismatch("matvec", an.shape, vn.shape);
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = dot_plain(an.values.data() + i * n, vn.values.data(), n);
    }
    return Tensor(result_node({m}, std::move(out), {a.node(), v.node()},
                              [m, n](detail::Node& self) {
        auto& a = *self.parents[0];
        auto& v = *self.parents[1];
        if (a.requires_grad) {
            auto& g = detail::grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double gi = self.grad[i];
                for (std::size_t j = 0; j < n; ++j) {
                    g[i * n + j] += gi * v.values[j];
                }
            }
        }
        if (v.requires_grad) {
            auto& g = detail::grad_buf(v);
            for (std::size_t i = 0; i < m; ++i) {
                const double gi = self.grad[i];
                for (std::size_t j = 0; j < n; ++j) {
                    g[j] += gi * a.values[i * n + j];
                }
            }
        }
    }));
}

Tensor tmatvec(const Tensor& a, const Tensor& u) {
    check_rank(a, 2, "tmatvec");
    check_rank(u, 1, "tmatvec");
    const auto& an = *a.node();
    const auto& un = *u.node();
    const std::size_t m = an.shape[0], n = an.shape[1];
    if (un.shape[0] != m) {
        shape_mismatch("tmatvec", an.shape, un.shape);
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double ui = un.values[i];
        for (std::size_t j = 0; j < n; ++j) {
            out[j] += ui * an.values[i * n + j];
        }
    }
    return Tensor(result_node({n}, std::move(out), {a.node(), u.node()},
                              [m, n](detail::Node& self) {
        auto& a = *self.parents[0];
        auto& u = *self.parents[1];
        if (a.requires_grad) {
            auto& g = detail::grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double ui = u.values[i];
                for (std::size_t j = 0; j < n; ++j) {
                    g[i * n + j] += ui * self.grad[j];
                }
            }
        }
        if (u.requires_grad) {
            auto& g = detail::grad_buf(u);
            for (std::size_t i = 0; i < m; ++i) {
                g[i] += dot_plain(a.values.data() + i * n, self.grad.data(), n);
            }
        }
    }));
}

Tensor dot(const Tensor& u, const Tensor& v) {
    check_rank(u, 1, "dot");
    check_rank(v, 1, "dot");
    const auto& un = *u.node();
    const auto& vn = *v.node();
    if (un.shape != vn.shape) {
        shape_mismatch("dot", un.shape, vn.shape);
    }
    double s = dot_plain(un.values.data(), vn.values.data(), un.values.size());
    return Tensor(result_node({1}, {s}, {u.node(), v.node()},
                              [](detail::Node& self) {
        auto& u = *self.parents[0];
        auto& v = *self.parents[1];
        const double g0 = self.grad[0];
        if (u.requires_grad) {
            auto& g = detail::grad_buf(u);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * v.values[i];
        }
        if (v.requires_grad) {
            auto& g = detail::grad_buf(v);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * u.values[i];
        }
    }));
}

// ---- softmax family ------------------------------------------------------

namespace {

struct AxisSplit {
    std::size_t outer, len, inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
    if (axis >= shape.size()) {
        throw dimension_error(std::string(op) + ": axis " + std::to_string(axis) +
                              " out of range for shape " + shape_str(shape));
    }
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

} // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
    const auto& xn = node_of(x, "softmax");
    const AxisSplit s = split_axis(xn.shape, axis, "softmax");
    std::vector<double> out(xn.values.size());
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.len * s.inner + in;
            double mx = xn.values[base];
            for (std::size_t t = 1; t < s.len; ++t) {
                mx = std::max(mx, xn.values[base + t * s.inner]);
            }
            double denom = 0.0;
            for (std::size_t t = 0; t < s.len; ++t) {
                const double e = std::exp(xn.values[base + t * s.inner] - mx);
                out[base + t * s.inner] = e;
                denom += e;
            }
            for (std::size_t t = 0; t < s.len; ++t) {
                out[base + t * s.inner] /= denom;
            }
        }
    }
    return Tensor(result_node(xn.shape, std::move(out), {x.node()},
                              [s](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double acc = 0.0;
                for (std::size_t t = 0; t < s.len; ++t) {
                    const std::size_t ix = base + t * s.inner;
                    acc += self.grad[ix] * self.values[ix];
                }
                for (std::size_t t = 0; t < s.len; ++t) {
                    const std::size_t ix = base + t * s.inner;
                    g[ix] += self.values[ix] * (self.grad[ix] - acc);
                }
            }
        }
    }));
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
    const auto& xn = node_of(x, "log_softmax");
    const AxisSplit s = split_axis(xn.shape, axis, "log_softmax");
    std::vector<double> out(xn.values.size());
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.len * s.inner + in;
            double mx = xn.values[base];
            for (std::size_t t = 1; t < s.len; ++t) {
                mx = std::max(mx, xn.values[base + t * s.inner]);
            }
            double denom = 0.0;
            for (std::size_t t = 0; t < s.len; ++t) {
                denom += std::exp(xn.values[base + t * s.inner] - mx);
            }
            const double lse = mx + std::log(denom);
            for (std::size_t t = 0; t < s.len; ++t) {
                out[base + t * s.inner] = xn.values[base + t * s.inner] - lse;
            }
        }
    }
    return Tensor(result_node(xn.shape, std::move(out), {x.node()},
                              [s](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double gsum = 0.0;
                for (std::size_t t = 0; t < s.len; ++t) {
                    gsum += self.grad[base + t * s.inner];
                }
                for (std::size_t t = 0; t < s.len; ++t) {
                    const std::size_t ix = base + t * s.inner;
                    g[ix] += self.grad[ix] - std::exp(self.values[ix]) * gsum;
                }
            }
        }
    }));
}

// ---- normalization -------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const auto& xn = node_of(x, "layer_norm");
    if (eps <= 0.0) {
        throw domain_error("layer_norm: eps must be positive");
    }
    if (xn.shape.size() != 1 && xn.shape.size() != 2) {
        throw dimension_error("layer_norm: expected rank 1 or 2, got " +
                              shape_str(xn.shape));
    }
    const std::size_t rows = xn.shape.size() == 2 ? xn.shape[0] : 1;
    const std::size_t d = xn.shape.back();
    check_rank(gain, 1, "layer_norm");
    check_rank(bias, 1, "layer_norm");
    if (gain.shape()[0] != d || bias.shape()[0] != d) {
        throw dimension_error("layer_norm: gain/bias length does not match feature dim " +
                              std::to_string(d));
    }
    const auto& gn = *gain.node();
    const auto& bn = *bias.node();
    std::vector<double> out(xn.values.size());
    // normalized rows and reciprocal stddevs are reused by the backward pass
    auto xhat = std::make_shared<std::vector<double>>(xn.values.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xn.values.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mean) * is;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = gn.values[j] * h + bn.values[j];
        }
    }
    return Tensor(result_node(xn.shape, std::move(out), {x.node(), gain.node(), bias.node()},
                              [rows, d, xhat, inv_std](detail::Node& self) {
        auto& x = *self.parents[0];
        auto& gain = *self.parents[1];
        auto& bias = *self.parents[2];
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gy = self.grad.data() + r * d;
            const double* h = xhat->data() + r * d;
            if (x.requires_grad) {
                double m1 = 0.0, m2 = 0.0; // means of gain·gy and gain·gy·xhat
                for (std::size_t j = 0; j < d; ++j) {
                    const double t = gain.values[j] * gy[j];
                    m1 += t;
                    m2 += t * h[j];
                }
                m1 /= static_cast<double>(d);
                m2 /= static_cast<double>(d);
                auto& g = detail::grad_buf(x);
                const double is = (*inv_std)[r];
                for (std::size_t j = 0; j < d; ++j) {
                    g[r * d + j] += (gain.values[j] * gy[j] - m1 - h[j] * m2) * is;
                }
            }
            if (gain.requires_grad) {
                auto& g = detail::grad_buf(gain);
                for (std::size_t j = 0; j < d; ++j) g[j] += gy[j] * h[j];
            }
            if (bias.requires_grad) {
                auto& g = detail::grad_buf(bias);
                for (std::size_t j = 0; j < d; ++j) g[j] += gy[j];
            }
        }
    }));
}

Tensor l2_normalize_rows(const Tensor& x) {
    check_rank(x, 2, "l2_normalize_rows");
    const auto& xn = *x.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    std::vector<double> out(xn.values.size(), 0.0);
    auto norms = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double nr = norm2(xn.values.data() + r * d, d);
        (*norms)[r] = nr;
        if (nr >= 1e-12) {
            for (std::size_t j = 0; j < d; ++j) {
                out[r * d + j] = xn.values[r * d + j] / nr;
            }
        }
    }
    return Tensor(result_node(xn.shape, std::move(out), {x.node()},
                              [rows, d, norms](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t r = 0; r < rows; ++r) {
            const double nr = (*norms)[r];
            if (nr < 1e-12) continue; // degenerate rows stay at zero
            const double* y = self.values.data() + r * d;
            const double* gy = self.grad.data() + r * d;
            const double gdoty = dot_plain(gy, y, d);
            for (std::size_t j = 0; j < d; ++j) {
                g[r * d + j] += (gy[j] - gdoty * y[j]) / nr;
            }
        }
    }));
}

Tensor add_row_broadcast(const Tensor& x, const Tensor& b) {
    check_rank(x, 2, "add_row_broadcast");
    check_rank(b, 1, "add_row_broadcast");
    const auto& xn = *x.node();
    const auto& bn = *b.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    if (bn.shape[0] != d) {
        shape_mismatch("add_row_broadcast", xn.shape, bn.shape);
    }
    std::vector<double> out(xn.values.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            out[r * d + j] = xn.values[r * d + j] + bn.values[j];
        }
    }
    return Tensor(result_node(xn.shape, std::move(out), {x.node(), b.node()},
                              [rows, d](detail::Node& self) {
        auto& x = *self.parents[0];
        auto& b = *self.parents[1];
        if (x.requires_grad) {
            auto& g = detail::grad_buf(x);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (b.requires_grad) {
            auto& g = detail::grad_buf(b);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j];
            }
        }
    }));
}

// ---- shape surgery -------------------------------------------------------

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    check_rank(x, 2, "slice_rows");
    const auto& xn = *x.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    if (r0 >= r1 || r1 > rows) {
        throw dimension_error("slice_rows: range [" + std::to_string(r0) + ", " +
                              std::to_string(r1) + ") invalid for " + std::to_string(rows) +
                              " rows");
    }
    std::vector<double> out(xn.values.begin() + r0 * d, xn.values.begin() + r1 * d);
    return Tensor(result_node({r1 - r0, d}, std::move(out), {x.node()},
                              [r0, d](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[r0 * d + i] += self.grad[i];
        }
    }));
}

Tensor row_of(const Tensor& x, std::size_t i) {
    check_rank(x, 2, "row_of");
    const auto& xn = *x.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    if (i >= rows) {
        throw dimension_error("row_of: index " + std::to_string(i) + " out of range");
    }
    std::vector<double> out(xn.values.begin() + i * d, xn.values.begin() + (i + 1) * d);
    return Tensor(result_node({d}, std::move(out), {x.node()},
                              [i, d](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[j];
    }));
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    check_rank(x, 2, "slice_cols");
    const auto& xn = *x.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    if (c0 >= c1 || c1 > d) {
        throw dimension_error("slice_cols: range [" + std::to_string(c0) + ", " +
                              std::to_string(c1) + ") invalid for " + std::to_string(d) +
                              " cols");
    }
    const std::size_t w = c1 - c0;
    std::vector<double> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < w; ++j) {
            out[r * w + j] = xn.values[r * d + c0 + j];
        }
    }
    return Tensor(result_node({rows, w}, std::move(out), {x.node()},
                              [rows, d, c0, w](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < w; ++j) {
                g[r * d + c0 + j] += self.grad[r * w + j];
            }
        }
    }));
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw dimension_error("concat_cols: no inputs");
    }
    const std::size_t rows = parts[0].rows();
    std::size_t total = 0;
    std::vector<NodePtr> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) {
        check_rank(p, 2, "concat_cols");
        if (p.rows() != rows) {
            shape_mismatch("concat_cols", parts[0].shape(), p.shape());
        }
        total += p.cols();
        parents.push_back(p.node());
    }
    std::vector<double> out(rows * total);
    std::vector<std::size_t> offsets(parts.size());
    std::size_t off = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        offsets[pi] = off;
        const auto& pn = *parts[pi].node();
        const std::size_t w = pn.shape[1];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < w; ++j) {
                out[r * total + off + j] = pn.values[r * w + j];
            }
        }
        off += w;
    }
    return Tensor(result_node({rows, total}, std::move(out), std::move(parents),
                              [rows, total, offsets](detail::Node& self) {
        for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
            auto& p = *self.parents[pi];
            if (!p.requires_grad) continue;
            const std::size_t w = p.shape[1];
            auto& g = detail::grad_buf(p);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < w; ++j) {
                    g[r * w + j] += self.grad[r * total + offsets[pi] + j];
                }
            }
        }
    }));
}

Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) {
        throw dimension_error("stack_rows: no inputs");
    }
    const std::size_t d = rows[0].size();
    std::vector<NodePtr> parents;
    parents.reserve(rows.size());
    std::vector<double> out;
    out.reserve(rows.size() * d);
    for (const auto& r : rows) {
        check_rank(r, 1, "stack_rows");
        if (r.size() != d) {
            shape_mismatch("stack_rows", rows[0].shape(), r.shape());
        }
        out.insert(out.end(), r.values().begin(), r.values().end());
        parents.push_back(r.node());
    }
    return Tensor(result_node({rows.size(), d}, std::move(out), std::move(parents),
                              [d](detail::Node& self) {
        for (std::size_t r = 0; r < self.parents.size(); ++r) {
            auto& p = *self.parents[r];
            if (!p.requires_grad) continue;
            auto& g = detail::grad_buf(p);
            for (std::size_t j = 0; j < d; ++j) {
                g[j] += self.grad[r * d + j];
            }
        }
    }));
}

Tensor mean_rows(const Tensor& x) {
    check_rank(x, 2, "mean_rows");
    const auto& xn = *x.node();
    const std::size_t rows = xn.shape[0], d = xn.shape[1];
    std::vector<double> out(d, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            out[j] += xn.values[r * d + j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows);
    for (double& v : out) v *= inv;
    return Tensor(result_node({d}, std::move(out), {x.node()},
                              [rows, d, inv](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
                g[r * d + j] += inv * self.grad[j];
            }
        }
    }));
}

Tensor mean_all(const Tensor& x) {
    const auto& xn = node_of(x, "mean_all");
    double s = 0.0;
    for (double v : xn.values) s += v;
    const double inv = 1.0 / static_cast<double>(xn.values.size());
    return Tensor(result_node({1}, {s * inv}, {x.node()},
                              [inv](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        const double gv = self.grad[0] * inv;
        for (double& v : g) v += gv;
    }));
}

Tensor sum_all(const Tensor& x) {
    const auto& xn = node_of(x, "sum_all");
    double s = 0.0;
    for (double v : xn.values) s += v;
    return Tensor(result_node({1}, {s}, {x.node()},
                              [](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        const double gv = self.grad[0];
        for (double& v : g) v += gv;
    }));
}

Tensor diagonal(const Tensor& x) {
    check_rank(x, 2, "diagonal");
    const auto& xn = *x.node();
    const std::size_t n = xn.shape[0];
    if (xn.shape[1] != n) {
        throw dimension_error("diagonal: matrix is not square, " + shape_str(xn.shape));
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xn.values[i * n + i];
    return Tensor(result_node({n}, std::move(out), {x.node()},
                              [n](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < n; ++i) g[i * n + i] += self.grad[i];
    }));
}

Tensor row_max_excluding_diagonal(const Tensor& x) {
    check_rank(x, 2, "row_max_excluding_diagonal");
    const auto& xn = *x.node();
    const std::size_t n = xn.shape[0];
    if (xn.shape[1] != n) {
        throw dimension_error("row_max_excluding_diagonal: matrix is not square");
    }
    if (n < 2) {
        throw dimension_error("row_max_excluding_diagonal: needs at least 2 rows");
    }
    std::vector<double> out(n);
    auto argmax = std::make_shared<std::vector<std::size_t>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = (i == 0) ? 1 : 0;
        double bv = xn.values[i * n + best];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double v = xn.values[i * n + j];
            if (v > bv) { // first maximum wins on ties
                bv = v;
                best = j;
            }
        }
        out[i] = bv;
        (*argmax)[i] = best;
    }
    return Tensor(result_node({n}, std::move(out), {x.node()},
                              [n, argmax](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < n; ++i) {
            g[i * n + (*argmax)[i]] += self.grad[i];
        }
    }));
}

Tensor reshape(const Tensor& x, Shape shape) {
    const auto& xn = node_of(x, "reshape");
    if (shape_product(shape) != xn.values.size()) {
        throw dimension_error("reshape: new shape " + shape_str(shape) +
                              " does not match size " + std::to_string(xn.values.size()));
    }
    std::vector<double> out(xn.values);
    return Tensor(result_node(std::move(shape), std::move(out), {x.node()},
                              [](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }));
}

Tensor gather(const Tensor& x, std::vector<std::size_t> indices) {
    check_rank(x, 1, "gather");
    const auto& xn = *x.node();
    std::vector<double> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= xn.values.size()) {
            throw dimension_error("gather: index " + std::to_string(indices[i]) +
                                  " out of range");
        }
        out[i] = xn.values[indices[i]];
    }
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(indices));
    return Tensor(result_node({idx->size()}, std::move(out), {x.node()},
                              [idx](detail::Node& self) {
        auto& g = detail::grad_buf(*self.parents[0]);
        for (std::size_t i = 0; i < idx->size(); ++i) {
            g[(*idx)[i]] += self.grad[i];
        }
    }));
}

// ---- similarity / divergence ---------------------------------------------

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw dimension_error("cosine_similarity: lengths " + std::to_string(u.size()) +
                              " and " + std::to_string(v.size()) + " differ");
    }
    const double nu = norm2(u.data(), u.size());
    const double nv = norm2(v.data(), v.size());
    if (nu < 1e-12 || nv < 1e-12) {
        return 0.0;
    }
    return dot_plain(u.data(), v.data(), u.size()) / (nu * nv);
}

Tensor cosine_similarity(const Tensor& u, const Tensor& v) {
    check_rank(u, 1, "cosine_similarity");
    check_rank(v, 1, "cosine_similarity");
    const auto& un = *u.node();
    const auto& vn = *v.node();
    if (un.shape != vn.shape) {
        shape_mismatch("cosine_similarity", un.shape, vn.shape);
    }
    const std::size_t d = un.values.size();
    const double nu = norm2(un.values.data(), d);
    const double nv = norm2(vn.values.data(), d);
    const bool degenerate = nu < 1e-12 || nv < 1e-12;
    const double c = degenerate ? 0.0 : dot_plain(un.values.data(), vn.values.data(), d) / (nu * nv);
    return Tensor(result_node({1}, {c}, {u.node(), v.node()},
                              [d, nu, nv, c, degenerate](detail::Node& self) {
        if (degenerate) return;
        auto& u = *self.parents[0];
        auto& v = *self.parents[1];
        const double g0 = self.grad[0];
        if (u.requires_grad) {
            auto& g = detail::grad_buf(u);
            for (std::size_t i = 0; i < d; ++i) {
                g[i] += g0 * (v.values[i] / (nu * nv) - c * u.values[i] / (nu * nu));
            }
        }
        if (v.requires_grad) {
            auto& g = detail::grad_buf(v);
            for (std::size_t i = 0; i < d; ++i) {
                g[i] += g0 * (u.values[i] / (nu * nv) - c * v.values[i] / (nv * nv));
            }
        }
    }));
}

Tensor row_cosine(const Tensor& m, const Tensor& v) {
    check_rank(m, 2, "row_cosine");
    check_rank(v, 1, "row_cosine");
    const auto& mn = *m.node();
    const auto& vn = *v.node();
    const std::size_t rows = mn.shape[0], d = mn.shape[1];
    if (vn.shape[0] != d) {
        shape_mismatch("row_cosine", mn.shape, vn.shape);
    }
    const double nv = norm2(vn.values.data(), d);
    std::vector<double> out(rows, 0.0);
    auto row_norms = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double nr = norm2(mn.values.data() + r * d, d);
        (*row_norms)[r] = nr;
        if (nr >= 1e-12 && nv >= 1e-12) {
            out[r] = dot_plain(mn.values.data() + r * d, vn.values.data(), d) / (nr * nv);
        }
    }
    auto cached = std::make_shared<std::vector<double>>(out);
    return Tensor(result_node({rows}, std::move(out), {m.node(), v.node()},
                              [rows, d, nv, row_norms, cached](detail::Node& self) {
        if (nv < 1e-12) return;
        auto& m = *self.parents[0];
        auto& v = *self.parents[1];
        for (std::size_t r = 0; r < rows; ++r) {
            const double nr = (*row_norms)[r];
            if (nr < 1e-12) continue;
            const double g0 = self.grad[r];
            if (g0 == 0.0) continue;
            const double c = (*cached)[r];
            const double* mr = m.values.data() + r * d;
            if (m.requires_grad) {
                auto& g = detail::grad_buf(m);
                for (std::size_t i = 0; i < d; ++i) {
                    g[r * d + i] += g0 * (v.values[i] / (nr * nv) - c * mr[i] / (nr * nr));
                }
            }
            if (v.requires_grad) {
                auto& g = detail::grad_buf(v);
                for (std::size_t i = 0; i < d; ++i) {
                    g[i] += g0 * (mr[i] / (nr * nv) - c * v.values[i] / (nv * nv));
                }
            }
        }
    }));
}

double kl_divergence(std::span<const double> log_p, std::span<const double> q) {
    if (log_p.size() != q.size()) {
        throw dimension_error("kl_divergence: lengths " + std::to_string(log_p.size()) +
                              " and " + std::to_string(q.size()) + " differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] > 0.0) {
            s += q[i] * (std::log(q[i]) - log_p[i]);
        }
    }
    return s;
}

Tensor kl_divergence(const Tensor& log_p, const Tensor& q) {
    check_rank(log_p, 1, "kl_divergence");
    check_rank(q, 1, "kl_divergence");
    const auto& pn = *log_p.node();
    const auto& qn = *q.node();
    if (pn.shape != qn.shape) {
        shape_mismatch("kl_divergence", pn.shape, qn.shape);
    }
    const double v = kl_divergence(std::span<const double>(pn.values),
                                   std::span<const double>(qn.values));
    // q is the (constant) target distribution; only log_p receives gradient
    return Tensor(result_node({1}, {v}, {log_p.node(), q.node()},
                              [](detail::Node& self) {
        auto& p = *self.parents[0];
        auto& q = *self.parents[1];
        if (!p.requires_grad) return;
        auto& g = detail::grad_buf(p);
        const double g0 = self.grad[0];
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] -= g0 * q.values[i];
        }
    }));
}

std::pair<double, double> mean_std(std::span<const double> xs) {
    if (xs.empty()) {
        throw domain_error("mean_std: empty input");
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        const double c = x - mean;
        var += c * c;
    }
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

// ---- backward ------------------------------------------------------------

void backward(const Tensor& loss) {
    const auto& ln = node_of(loss, "backward");
    if (ln.values.size() != 1) {
        throw contract_error("backward: loss must be scalar, shape " + shape_str(ln.shape));
    }
    auto root = loss.node();
    detail::grad_buf(*root)[0] += 1.0;
    if (!root->requires_grad) {
        return;
    }

    // Gather the reachable subgraph; creation ids are a topological order
    // (inputs always precede outputs), so visiting in descending id order
    // replays the tape exactly once per node.
    std::vector<detail::Node*> order;
    std::vector<detail::Node*> stack{root.get()};
    std::vector<const detail::Node*> seen;
    auto mark = [&seen](detail::Node* n) {
        // membership test on a sorted vector keyed by pointer
        auto it = std::lower_bound(seen.begin(), seen.end(), n);
        if (it != seen.end() && *it == n) {
            return false;
        }
        seen.insert(it, n);
        return true;
    };
    mark(root.get());
    while (!stack.empty()) {
        detail::Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p && p->requires_grad && mark(p.get())) {
                stack.push_back(p.get());
            }
        }
    }
    std::sort(order.begin(), order.end(),
              [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });
    for (detail::Node* n : order) {
        if (n->backprop && !n->grad.empty()) {
            n->backprop(*n);
        }
    }
}

bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace kdc
