// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense tensor kernel with reverse-mode automatic differentiation.
//
// Tensors are immutable after the forward pass that creates them (except for
// gradient accumulation and explicit leaf updates during optimization). Each
// non-leaf tensor records its parents and a backward closure; node creation
// ids give a topological order, and backward() replays reachable nodes once,
// in reverse creation order, accumulating gradients additively across fan-out.
// Everything is double precision and single-threaded.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdc/errors.hpp"

namespace kdc {

using Shape = std::vector<std::size_t>;

namespace detail {

struct Node {
    std::uint64_t id = 0;
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad; // sized lazily, same length as values
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop; // pulls from this->grad into parents

    std::size_t size() const { return values.size(); }
};

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> values);

// Returns the gradient buffer of n, allocating zeros on first use.
std::vector<double>& grad_buf(Node& n);

} // namespace detail

// Scoped switch that disables graph recording (inference paths). Values are
// computed identically; only parents/backward closures are skipped.
class GradGuard {
public:
    explicit GradGuard(bool enable);
    ~GradGuard();
    GradGuard(const GradGuard&) = delete;
    GradGuard& operator=(const GradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);
    // Leaf with requires_grad set; the usual constructor for parameters.
    static Tensor param(Shape shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::size_t rank() const;
    std::size_t rows() const; // rank-2 helpers
    std::size_t cols() const;
    std::uint64_t id() const;

    std::span<const double> values() const;
    double value() const;                    // scalar tensors only
    double at(std::size_t i) const;          // rank-1
    double at(std::size_t i, std::size_t j) const; // rank-2

    bool requires_grad() const;
    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    // Leaf mutation used by the optimizer and checkpoint loading. Touching a
    // non-leaf is a contract violation: interior values are owned by the graph.
    void apply_gradient_step(double learning_rate);
    void load_values(std::span<const double> values);

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// ---- forward operations (all differentiable unless noted) ----

Tensor add(const Tensor& a, const Tensor& b);            // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor scalar_mul(const Tensor& a, const Tensor& s);     // s is a scalar tensor
Tensor matmul(const Tensor& a, const Tensor& b);         // [m×k]·[k×n]
Tensor transpose(const Tensor& a);                       // rank-2
Tensor matvec(const Tensor& a, const Tensor& v);         // [m×n]·[n] -> [m]
Tensor tmatvec(const Tensor& a, const Tensor& u);        // [m×n]ᵀ·[m] -> [n]
Tensor dot(const Tensor& u, const Tensor& v);            // -> scalar
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);                    // x: [n×d] or [d]
Tensor l2_normalize_rows(const Tensor& x);
Tensor add_row_broadcast(const Tensor& x, const Tensor& b); // x: [n×d], b: [d]
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor row_of(const Tensor& x, std::size_t i);           // -> [d]
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor stack_rows(std::span<const Tensor> rows);         // [d] items -> [n×d]
Tensor mean_rows(const Tensor& x);                       // [n×d] -> [d]
Tensor mean_all(const Tensor& x);                        // -> scalar
Tensor sum_all(const Tensor& x);                         // -> scalar
Tensor diagonal(const Tensor& x);                        // [n×n] -> [n]
Tensor row_max_excluding_diagonal(const Tensor& x);      // [n×n] -> [n], n >= 2
Tensor reshape(const Tensor& x, Shape shape);
Tensor gather(const Tensor& x, std::vector<std::size_t> indices); // rank-1 x

// Cosine similarity with a degenerate-norm guard: if either argument has
// L2 norm below 1e-12 the result is 0 and no gradient flows.
Tensor cosine_similarity(const Tensor& u, const Tensor& v);
Tensor row_cosine(const Tensor& m, const Tensor& v);     // [k×d],[d] -> [k]
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// KL(q ‖ p) evaluated as Σ q·(ln q − log_p) with 0·ln 0 := 0. q is the
// distillation target and is treated as a constant: gradient flows to log_p
// only.
Tensor kl_divergence(const Tensor& log_p, const Tensor& q);
double kl_divergence(std::span<const double> log_p, std::span<const double> q);

// Population statistics (divisor n). Throws domain_error on empty input.
std::pair<double, double> mean_std(std::span<const double> xs);

// Reverse-mode pass from a scalar loss. Gradients accumulate additively into
// every reachable tensor with requires_grad set.
void backward(const Tensor& loss);

bool all_finite(std::span<const double> xs);

} // namespace kdc
