#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "survtraj/tensor.hpp"

namespace survtraj {

// Reverse-mode differentiation over Tensor. Graphs are built define-by-run:
// every primitive records a node holding its forward value; backward() walks
// the nodes in reverse creation order. A graph is single-owner — build and
// differentiate it on one thread; independent graphs may live on different
// threads (the creation counter is thread-local).

enum class Op {
    leaf,
    add,
    sub,
    mul,
    matmul,
    transpose,
    exp,
    log,
    neg,
    recip,
    sqnorm,
    sum,
    mean,
    concat,
    sigmoid,
    softplus,
    softmax,
    softmin,
    cumsum,
    cumprod,
    broadcast,
    slice,
    clamp,
};

const char* op_name(Op op);

// Per-op attributes; only the fields an op reads are meaningful.
struct OpAttrs {
    int axis = 0;                   // concat / slice
    int begin = 0;                  // slice
    int end = 0;                    // slice
    double lo = 0.0;                // clamp
    double hi = 0.0;                // clamp
    std::vector<int> target_shape;  // broadcast
};

struct Node {
    Op op = Op::leaf;
    Tensor value;
    Tensor grad;  // same shape as value, zero-initialized at each backward()
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    OpAttrs attrs;
    uint64_t seq = 0;  // creation order, used for the deterministic reverse sweep
};

// Shared handle to a graph node.
class Value {
public:
    Value() = default;

    static Value leaf(Tensor v, bool requires_grad = false);
    static Value constant(Tensor v) { return leaf(std::move(v), false); }
    static Value constant(double v) { return leaf(Tensor::scalar(v), false); }

    const Tensor& val() const { return n_->value; }
    const Tensor& grad() const { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    bool empty() const { return !n_; }
    std::shared_ptr<Node> node() const { return n_; }

    // Overwrite a leaf's payload in place (parameter updates between steps).
    void set_value(Tensor v);

private:
    explicit Value(std::shared_ptr<Node> n) : n_(std::move(n)) {}
    std::shared_ptr<Node> n_;
    friend Value apply_primitive(Op, const std::vector<Value>&, const OpAttrs&);
};

// Registry entry point: computes the forward value, checks it is finite, and
// wires the node so backward() can replay the registered rule.
Value apply_primitive(Op op, const std::vector<Value>& inputs, const OpAttrs& attrs = {});

// Primitive wrappers.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);
Value vexp(const Value& a);
Value vlog(const Value& a);
Value neg(const Value& a);
Value recip(const Value& a);
Value sqnorm(const Value& a);  // sum of squares over the last axis: [r,c] -> [r,1], [n] -> [1]
Value sum(const Value& a);     // all elements -> [1]
Value mean(const Value& a);
Value concat(const std::vector<Value>& xs, int axis);
Value sigmoid(const Value& a);
Value softplus(const Value& a);
Value softmax(const Value& a);  // along the last axis, max-subtracted
Value softmin(const Value& a);  // softmax(-x)
Value cumsum(const Value& a);   // along the last axis
Value cumprod(const Value& a);  // along the last axis
Value broadcast_to(const Value& a, std::vector<int> shape);
Value slice(const Value& a, int axis, int begin, int end);
Value clamp(const Value& a, double lo, double hi);

// Composite helpers (no new primitives).
Value add_scalar(const Value& a, double s);
Value mul_scalar(const Value& a, double s);
Value tanh_act(const Value& a);                       // 2*sigmoid(2x) - 1
Value rowsum(const Value& a);                         // [r,c] -> [r,1] via matmul with ones
Value affine(const Value& x, const Value& w, const Value& b);  // x*W + b, b broadcast over rows

// Seeds d(root)/d(root) = 1, zero-initializes every reachable gradient
// accumulator, then propagates in reverse creation order. Leaves with
// requires_grad end up holding dL/dtheta. Root must be scalar-valued.
void backward(const Value& root);

// Max over coordinates of |analytic - central difference| / (|a| + |c| + 1e-12)
// for a scalar-valued f built from primitives. Reports, never throws on a
// large discrepancy.
double grad_check(const std::function<Value(const Value&)>& f, const Tensor& theta, double h = 1e-5);

}  // namespace survtraj
