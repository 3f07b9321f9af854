#include "survtraj/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace survtraj {

namespace {

thread_local uint64_t g_seq = 0;

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const EMat>;
using Map = Eigen::Map<EMat>;

MapC emap(const Tensor& t) { return MapC(t.data(), t.rows(), t.cols()); }
Map emap(Tensor& t) { return Map(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const std::string& detail) {
    throw ShapeError(std::string(op_name(op)) + ": shape " + a.shape_str() + " " + detail);
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// softmax along the last axis with max subtraction; sign=-1 gives softmin.
Tensor rowwise_softmax(const Tensor& a, double sign) {
    Tensor out(a.shape());
    const int r = a.rows(), c = a.cols();
    for (int i = 0; i < r; ++i) {
        const double* src = a.data() + static_cast<size_t>(i) * c;
        double* dst = out.data() + static_cast<size_t>(i) * c;
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j) m = std::max(m, sign * src[j]);
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            dst[j] = std::exp(sign * src[j] - m);
            s += dst[j];
        }
        const double inv = 1.0 / s;
        for (int j = 0; j < c; ++j) dst[j] *= inv;
    }
    return out;
}

bool broadcastable(const std::vector<int>& src, const std::vector<int>& dst) {
    if (src == dst) return true;
    if (src.size() == 1) {
        if (src[0] == 1) return true;                           // [1] -> anything
        return dst.size() == 2 && dst[1] == src[0];             // [n] -> [r,n]
    }
    if (src.size() == 2 && dst.size() == 2) {
        const bool rows_ok = src[0] == dst[0] || src[0] == 1;
        const bool cols_ok = src[1] == dst[1] || src[1] == 1;
        return rows_ok && cols_ok;
    }
    return false;
}

Tensor broadcast_forward(const Tensor& a, const std::vector<int>& shape) {
    Tensor out(shape);
    const int r = out.rows(), c = out.cols();
    const int sr = a.rank() == 2 ? a.shape()[0] : 1;
    const int sc = a.rank() == 2 ? a.shape()[1] : (a.shape()[0] == 1 ? 1 : a.shape()[0]);
    for (int i = 0; i < r; ++i) {
        const double* src = a.data() + static_cast<size_t>(sr == 1 ? 0 : i) * sc;
        double* dst = out.data() + static_cast<size_t>(i) * c;
        if (sc == c) {
            std::copy(src, src + c, dst);
        } else {  // sc == 1
            std::fill(dst, dst + c, src[0]);
        }
    }
    return out;
}

// Reduce a gradient of `shape` back onto the source shape of a broadcast.
void broadcast_backward(const Tensor& g, Tensor& acc) {
    const int r = g.rows(), c = g.cols();
    const int sr = acc.rank() == 2 ? acc.shape()[0] : 1;
    const int sc = acc.rank() == 2 ? acc.shape()[1] : (acc.shape()[0] == 1 ? 1 : acc.shape()[0]);
    for (int i = 0; i < r; ++i) {
        const double* src = g.data() + static_cast<size_t>(i) * c;
        double* dst = acc.data() + static_cast<size_t>(sr == 1 ? 0 : i) * sc;
        if (sc == c) {
            for (int j = 0; j < c; ++j) dst[j] += src[j];
        } else {
            double s = 0.0;
            for (int j = 0; j < c; ++j) s += src[j];
            dst[0] += s;
        }
    }
}

Tensor forward_value(Op op, const std::vector<Value>& inputs, const OpAttrs& attrs) {
    auto val = [&](size_t i) -> const Tensor& { return inputs[i].val(); };
    switch (op) {
        case Op::leaf:
            throw ContractError("apply_primitive: leaf is not an applicable primitive");
        case Op::add:
        case Op::sub:
        case Op::mul: {
            const Tensor& a = val(0);
            const Tensor& b = val(1);
            if (!same_shape(a, b)) shape_fail(op, a, b);
            Tensor out(a.shape());
            const size_t n = a.size();
            for (size_t i = 0; i < n; ++i) {
                out[i] = op == Op::add ? a[i] + b[i] : op == Op::sub ? a[i] - b[i] : a[i] * b[i];
            }
            return out;
        }
        case Op::matmul: {
            const Tensor& a = val(0);
            const Tensor& b = val(1);
            if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) shape_fail(op, a, b);
            Tensor out({a.shape()[0], b.shape()[1]});
            emap(out).noalias() = emap(a) * emap(b);
            return out;
        }
        case Op::transpose: {
            const Tensor& a = val(0);
            if (a.rank() != 2) shape_fail(op, a, "must be rank 2");
            Tensor out({a.shape()[1], a.shape()[0]});
            emap(out) = emap(a).transpose();
            return out;
        }
        case Op::exp:
        case Op::log:
        case Op::neg:
        case Op::recip:
        case Op::sigmoid:
        case Op::softplus: {
            const Tensor& a = val(0);
            Tensor out(a.shape());
            const size_t n = a.size();
            for (size_t i = 0; i < n; ++i) {
                switch (op) {
                    case Op::exp: out[i] = std::exp(a[i]); break;
                    case Op::log: out[i] = std::log(a[i]); break;
                    case Op::neg: out[i] = -a[i]; break;
                    case Op::recip: out[i] = 1.0 / a[i]; break;
                    case Op::sigmoid: out[i] = stable_sigmoid(a[i]); break;
                    default: out[i] = stable_softplus(a[i]); break;
                }
            }
            return out;
        }
        case Op::sqnorm: {
            const Tensor& a = val(0);
            const int r = a.rank() == 2 ? a.shape()[0] : 1;
            const int c = a.cols();
            Tensor out(a.rank() == 2 ? std::vector<int>{r, 1} : std::vector<int>{1});
            for (int i = 0; i < r; ++i) {
                const double* src = a.data() + static_cast<size_t>(i) * c;
                double s = 0.0;
                for (int j = 0; j < c; ++j) s += src[j] * src[j];
                out[static_cast<size_t>(i)] = s;
            }
            return out;
        }
        case Op::sum:
        case Op::mean: {
            const Tensor& a = val(0);
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += a[i];
            if (op == Op::mean) s /= static_cast<double>(a.size());
            return Tensor::scalar(s);
        }
        case Op::concat: {
            if (inputs.empty()) throw ContractError("concat: no inputs");
            const int rank = val(0).rank();
            const int axis = attrs.axis;
            if (axis < 0 || axis >= rank) shape_fail(op, val(0), "axis out of range");
            int total = 0;
            for (const auto& in : inputs) {
                const Tensor& t = in.val();
                if (t.rank() != rank) shape_fail(op, val(0), t);
                for (int d = 0; d < rank; ++d) {
                    if (d != axis && t.shape()[d] != val(0).shape()[d]) shape_fail(op, val(0), t);
                }
                total += t.shape()[axis];
            }
            std::vector<int> shape = val(0).shape();
            shape[axis] = total;
            Tensor out(shape);
            if (rank == 1 || axis == 0) {
                size_t off = 0;
                for (const auto& in : inputs) {
                    const Tensor& t = in.val();
                    std::copy(t.data(), t.data() + t.size(), out.data() + off);
                    off += t.size();
                }
            } else {  // rank 2, axis 1
                const int r = shape[0];
                int coff = 0;
                for (const auto& in : inputs) {
                    const Tensor& t = in.val();
                    const int tc = t.shape()[1];
                    for (int i = 0; i < r; ++i) {
                        std::copy(t.data() + static_cast<size_t>(i) * tc,
                                  t.data() + static_cast<size_t>(i) * tc + tc,
                                  out.data() + static_cast<size_t>(i) * out.cols() + coff);
                    }
                    coff += tc;
                }
            }
            return out;
        }
        case Op::softmax:
            return rowwise_softmax(val(0), 1.0);
        case Op::softmin:
            return rowwise_softmax(val(0), -1.0);
        case Op::cumsum:
        case Op::cumprod: {
            const Tensor& a = val(0);
            Tensor out(a.shape());
            const int r = a.rows(), c = a.cols();
            for (int i = 0; i < r; ++i) {
                const double* src = a.data() + static_cast<size_t>(i) * c;
                double* dst = out.data() + static_cast<size_t>(i) * c;
                double acc = op == Op::cumsum ? 0.0 : 1.0;
                for (int j = 0; j < c; ++j) {
                    acc = op == Op::cumsum ? acc + src[j] : acc * src[j];
                    dst[j] = acc;
                }
            }
            return out;
        }
        case Op::broadcast: {
            const Tensor& a = val(0);
            if (!broadcastable(a.shape(), attrs.target_shape)) {
                shape_fail(op, a, "cannot broadcast to " + Tensor::shape_str(attrs.target_shape));
            }
            if (a.shape() == attrs.target_shape) return a;
            return broadcast_forward(a, attrs.target_shape);
        }
        case Op::slice: {
            const Tensor& a = val(0);
            const int axis = attrs.axis;
            if (axis < 0 || axis >= a.rank()) shape_fail(op, a, "axis out of range");
            const int dim = a.shape()[axis];
            if (attrs.begin < 0 || attrs.end > dim || attrs.begin >= attrs.end) {
                shape_fail(op, a, "bad slice [" + std::to_string(attrs.begin) + ", " +
                                      std::to_string(attrs.end) + ") on axis " + std::to_string(axis));
            }
            std::vector<int> shape = a.shape();
            shape[axis] = attrs.end - attrs.begin;
            Tensor out(shape);
            if (a.rank() == 1 || axis == 0) {
                const size_t w = static_cast<size_t>(a.rank() == 2 ? a.shape()[1] : 1);
                std::copy(a.data() + attrs.begin * w, a.data() + attrs.end * w, out.data());
            } else {
                const int r = a.shape()[0];
                const int c = a.shape()[1];
                const int oc = shape[1];
                for (int i = 0; i < r; ++i) {
                    std::copy(a.data() + static_cast<size_t>(i) * c + attrs.begin,
                              a.data() + static_cast<size_t>(i) * c + attrs.end,
                              out.data() + static_cast<size_t>(i) * oc);
                }
            }
            return out;
        }
        case Op::clamp: {
            const Tensor& a = val(0);
            Tensor out(a.shape());
            for (size_t i = 0; i < a.size(); ++i) out[i] = std::min(std::max(a[i], attrs.lo), attrs.hi);
            return out;
        }
    }
    throw ContractError("apply_primitive: unknown op");
}

void ensure_grad(Node& n) {
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
}

void backward_step(Node& n) {
    const Tensor& g = n.grad;
    auto parent = [&](size_t i) -> Node& { return *n.parents[i]; };
    auto wants = [&](size_t i) { return n.parents[i]->requires_grad; };
    switch (n.op) {
        case Op::leaf:
            return;
        case Op::add:
            for (size_t p = 0; p < 2; ++p) {
                if (!wants(p)) continue;
                Tensor& acc = parent(p).grad;
                for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
            }
            return;
        case Op::sub:
            for (size_t p = 0; p < 2; ++p) {
                if (!wants(p)) continue;
                Tensor& acc = parent(p).grad;
                const double s = p == 0 ? 1.0 : -1.0;
                for (size_t i = 0; i < g.size(); ++i) acc[i] += s * g[i];
            }
            return;
        case Op::mul: {
            const Tensor& a = parent(0).value;
            const Tensor& b = parent(1).value;
            if (wants(0)) {
                Tensor& acc = parent(0).grad;
                for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * b[i];
            }
            if (wants(1)) {
                Tensor& acc = parent(1).grad;
                for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * a[i];
            }
            return;
        }
        case Op::matmul: {
            const Tensor& a = parent(0).value;
            const Tensor& b = parent(1).value;
            if (wants(0)) emap(parent(0).grad).noalias() += emap(g) * emap(b).transpose();
            if (wants(1)) emap(parent(1).grad).noalias() += emap(a).transpose() * emap(g);
            return;
        }
        case Op::transpose:
            if (wants(0)) emap(parent(0).grad) += emap(g).transpose();
            return;
        case Op::exp: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * n.value[i];
            return;
        }
        case Op::log: {
            if (!wants(0)) return;
            const Tensor& a = parent(0).value;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i] / a[i];
            return;
        }
        case Op::neg: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) acc[i] -= g[i];
            return;
        }
        case Op::recip: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) acc[i] -= g[i] * n.value[i] * n.value[i];
            return;
        }
        case Op::sqnorm: {
            if (!wants(0)) return;
            const Tensor& a = parent(0).value;
            Tensor& acc = parent(0).grad;
            const int r = a.rank() == 2 ? a.shape()[0] : 1;
            const int c = a.cols();
            for (int i = 0; i < r; ++i) {
                const double gi = g[static_cast<size_t>(i)];
                const double* src = a.data() + static_cast<size_t>(i) * c;
                double* dst = acc.data() + static_cast<size_t>(i) * c;
                for (int j = 0; j < c; ++j) dst[j] += 2.0 * gi * src[j];
            }
            return;
        }
        case Op::sum:
        case Op::mean: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            const double gi =
                n.op == Op::sum ? g[0] : g[0] / static_cast<double>(parent(0).value.size());
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += gi;
            return;
        }
        case Op::concat: {
            const int rank = n.value.rank();
            if (rank == 1 || n.attrs.axis == 0) {
                size_t off = 0;
                for (size_t p = 0; p < n.parents.size(); ++p) {
                    const size_t sz = parent(p).value.size();
                    if (wants(p)) {
                        Tensor& acc = parent(p).grad;
                        for (size_t i = 0; i < sz; ++i) acc[i] += g[off + i];
                    }
                    off += sz;
                }
            } else {
                const int r = n.value.shape()[0];
                int coff = 0;
                for (size_t p = 0; p < n.parents.size(); ++p) {
                    const int tc = parent(p).value.shape()[1];
                    if (wants(p)) {
                        Tensor& acc = parent(p).grad;
                        for (int i = 0; i < r; ++i) {
                            for (int j = 0; j < tc; ++j) {
                                acc[static_cast<size_t>(i) * tc + j] +=
                                    g[static_cast<size_t>(i) * n.value.cols() + coff + j];
                            }
                        }
                    }
                    coff += tc;
                }
            }
            return;
        }
        case Op::sigmoid: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) {
                acc[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
            }
            return;
        }
        case Op::softplus: {
            if (!wants(0)) return;
            const Tensor& a = parent(0).value;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * stable_sigmoid(a[i]);
            return;
        }
        case Op::softmax:
        case Op::softmin: {
            if (!wants(0)) return;
            const double sign = n.op == Op::softmax ? 1.0 : -1.0;
            Tensor& acc = parent(0).grad;
            const int r = n.value.rows(), c = n.value.cols();
            for (int i = 0; i < r; ++i) {
                const double* y = n.value.data() + static_cast<size_t>(i) * c;
                const double* gr = g.data() + static_cast<size_t>(i) * c;
                double* dst = acc.data() + static_cast<size_t>(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += gr[j] * y[j];
                for (int j = 0; j < c; ++j) dst[j] += sign * y[j] * (gr[j] - dot);
            }
            return;
        }
        case Op::cumsum: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            const int r = n.value.rows(), c = n.value.cols();
            for (int i = 0; i < r; ++i) {
                const double* gr = g.data() + static_cast<size_t>(i) * c;
                double* dst = acc.data() + static_cast<size_t>(i) * c;
                double run = 0.0;
                for (int j = c - 1; j >= 0; --j) {
                    run += gr[j];
                    dst[j] += run;
                }
            }
            return;
        }
        case Op::cumprod: {
            // Division-free: dL/da_i = (prod_{k<i} a_k) * R_i with
            // R_i = g_i + a_{i+1} * R_{i+1}. Safe when factors are exactly 0.
            if (!wants(0)) return;
            const Tensor& a = parent(0).value;
            Tensor& acc = parent(0).grad;
            const int r = a.rows(), c = a.cols();
            std::vector<double> rbuf(static_cast<size_t>(c));
            for (int i = 0; i < r; ++i) {
                const double* av = a.data() + static_cast<size_t>(i) * c;
                const double* gr = g.data() + static_cast<size_t>(i) * c;
                double* dst = acc.data() + static_cast<size_t>(i) * c;
                double run = 0.0;
                for (int j = c - 1; j >= 0; --j) {
                    run = gr[j] + (j + 1 < c ? av[j + 1] * run : 0.0);
                    rbuf[static_cast<size_t>(j)] = run;
                }
                double prefix = 1.0;
                for (int j = 0; j < c; ++j) {
                    dst[j] += prefix * rbuf[static_cast<size_t>(j)];
                    prefix *= av[j];
                }
            }
            return;
        }
        case Op::broadcast: {
            if (!wants(0)) return;
            if (parent(0).value.shape() == n.value.shape()) {
                Tensor& acc = parent(0).grad;
                for (size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
            } else {
                broadcast_backward(g, parent(0).grad);
            }
            return;
        }
        case Op::slice: {
            if (!wants(0)) return;
            Tensor& acc = parent(0).grad;
            const Tensor& a = parent(0).value;
            if (a.rank() == 1 || n.attrs.axis == 0) {
                const size_t w = static_cast<size_t>(a.rank() == 2 ? a.shape()[1] : 1);
                const size_t off = static_cast<size_t>(n.attrs.begin) * w;
                for (size_t i = 0; i < g.size(); ++i) acc[off + i] += g[i];
            } else {
                const int c = a.shape()[1];
                const int oc = n.value.shape()[1];
                for (int i = 0; i < n.value.shape()[0]; ++i) {
                    for (int j = 0; j < oc; ++j) {
                        acc[static_cast<size_t>(i) * c + n.attrs.begin + j] +=
                            g[static_cast<size_t>(i) * oc + j];
                    }
                }
            }
            return;
        }
        case Op::clamp: {
            if (!wants(0)) return;
            const Tensor& a = parent(0).value;
            Tensor& acc = parent(0).grad;
            for (size_t i = 0; i < g.size(); ++i) {
                if (a[i] >= n.attrs.lo && a[i] <= n.attrs.hi) acc[i] += g[i];
            }
            return;
        }
    }
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::matmul: return "matmul";
        case Op::transpose: return "transpose";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::neg: return "neg";
        case Op::recip: return "recip";
        case Op::sqnorm: return "sqnorm";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::concat: return "concat";
        case Op::sigmoid: return "sigmoid";
        case Op::softplus: return "softplus";
        case Op::softmax: return "softmax";
        case Op::softmin: return "softmin";
        case Op::cumsum: return "cumsum";
        case Op::cumprod: return "cumprod";
        case Op::broadcast: return "broadcast";
        case Op::slice: return "slice";
        case Op::clamp: return "clamp";
    }
    return "?";
}

Value Value::leaf(Tensor v, bool requires_grad) {
    if (!v.all_finite()) throw NumericError("leaf: non-finite tensor");
    auto n = std::make_shared<Node>();
    n->op = Op::leaf;
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    n->seq = ++g_seq;
    return Value(std::move(n));
}

void Value::set_value(Tensor v) {
    if (n_->op != Op::leaf) throw ContractError("set_value: not a leaf");
    if (!same_shape(v, n_->value)) {
        throw ShapeError("set_value: shape " + v.shape_str() + " != " + n_->value.shape_str());
    }
    n_->value = std::move(v);
}

Value apply_primitive(Op op, const std::vector<Value>& inputs, const OpAttrs& attrs) {
    Tensor out = forward_value(op, inputs, attrs);
    if (!out.all_finite()) {
        throw NumericError(std::string(op_name(op)) + ": non-finite forward value");
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(out);
    n->attrs = attrs;
    n->parents.reserve(inputs.size());
    for (const auto& in : inputs) {
        n->parents.push_back(in.node());
        n->requires_grad = n->requires_grad || in.requires_grad();
    }
    n->seq = ++g_seq;
    return Value(std::move(n));
}

Value add(const Value& a, const Value& b) { return apply_primitive(Op::add, {a, b}); }
Value sub(const Value& a, const Value& b) { return apply_primitive(Op::sub, {a, b}); }
Value mul(const Value& a, const Value& b) { return apply_primitive(Op::mul, {a, b}); }
Value matmul(const Value& a, const Value& b) { return apply_primitive(Op::matmul, {a, b}); }
Value transpose(const Value& a) { return apply_primitive(Op::transpose, {a}); }
Value vexp(const Value& a) { return apply_primitive(Op::exp, {a}); }
Value vlog(const Value& a) { return apply_primitive(Op::log, {a}); }
Value neg(const Value& a) { return apply_primitive(Op::neg, {a}); }
Value recip(const Value& a) { return apply_primitive(Op::recip, {a}); }
Value sqnorm(const Value& a) { return apply_primitive(Op::sqnorm, {a}); }
Value sum(const Value& a) { return apply_primitive(Op::sum, {a}); }
Value mean(const Value& a) { return apply_primitive(Op::mean, {a}); }

Value concat(const std::vector<Value>& xs, int axis) {
    OpAttrs at;
    at.axis = axis;
    return apply_primitive(Op::concat, xs, at);
}

Value sigmoid(const Value& a) { return apply_primitive(Op::sigmoid, {a}); }
Value softplus(const Value& a) { return apply_primitive(Op::softplus, {a}); }
Value softmax(const Value& a) { return apply_primitive(Op::softmax, {a}); }
Value softmin(const Value& a) { return apply_primitive(Op::softmin, {a}); }
Value cumsum(const Value& a) { return apply_primitive(Op::cumsum, {a}); }
Value cumprod(const Value& a) { return apply_primitive(Op::cumprod, {a}); }

Value broadcast_to(const Value& a, std::vector<int> shape) {
    OpAttrs at;
    at.target_shape = std::move(shape);
    return apply_primitive(Op::broadcast, {a}, at);
}

Value slice(const Value& a, int axis, int begin, int end) {
    OpAttrs at;
    at.axis = axis;
    at.begin = begin;
    at.end = end;
    return apply_primitive(Op::slice, {a}, at);
}

Value clamp(const Value& a, double lo, double hi) {
    OpAttrs at;
    at.lo = lo;
    at.hi = hi;
    return apply_primitive(Op::clamp, {a}, at);
}

Value add_scalar(const Value& a, double s) {
    return add(a, broadcast_to(Value::constant(s), a.val().shape()));
}

Value mul_scalar(const Value& a, double s) {
    return mul(a, broadcast_to(Value::constant(s), a.val().shape()));
}

Value tanh_act(const Value& a) { return add_scalar(mul_scalar(sigmoid(mul_scalar(a, 2.0)), 2.0), -1.0); }

Value rowsum(const Value& a) {
    if (a.val().rank() != 2) throw ShapeError("rowsum: need rank 2, got " + a.val().shape_str());
    return matmul(a, Value::constant(Tensor::full({a.val().shape()[1], 1}, 1.0)));
}

Value affine(const Value& x, const Value& w, const Value& b) {
    Value y = matmul(x, w);
    return add(y, broadcast_to(b, y.val().shape()));
}

void backward(const Value& root) {
    if (root.empty()) throw ContractError("backward: empty root");
    if (root.val().size() != 1) {
        throw ContractError("backward: root must be scalar, got shape " + root.val().shape_str());
    }
    // Collect the reachable subgraph (iterative DFS), then sweep by descending
    // creation order. Creation order is a topological order for define-by-run
    // graphs, so every node's grad is final before it is processed.
    std::vector<Node*> nodes;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.node().get()};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        nodes.push_back(n);
        for (const auto& p : n->parents) {
            if (seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->seq > b->seq; });
    for (Node* n : nodes) {
        ensure_grad(*n);
        std::fill(n->grad.data(), n->grad.data() + n->grad.size(), 0.0);
    }
    root.node()->grad[0] = 1.0;
    for (Node* n : nodes) {
        if (n->op == Op::leaf || !n->requires_grad) continue;
        for (const auto& p : n->parents) {
            if (p->requires_grad) ensure_grad(*p);
        }
        backward_step(*n);
    }
}

double grad_check(const std::function<Value(const Value&)>& f, const Tensor& theta, double h) {
    Value leaf = Value::leaf(theta, true);
    Value out = f(leaf);
    if (out.val().size() != 1) throw ContractError("grad_check: f must be scalar-valued");
    backward(out);
    const Tensor analytic = leaf.grad();

    double worst = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
        Tensor tp = theta;
        tp[i] += h;
        const double fp = f(Value::constant(tp)).val()[0];
        Tensor tm = theta;
        tm[i] -= h;
        const double fm = f(Value::constant(tm)).val()[0];
        const double central = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        const double rel = std::abs(a - central) / (std::abs(a) + std::abs(central) + 1e-12);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace survtraj
