#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "survtraj/autodiff.hpp"
#include "survtraj/errors.hpp"
#include "survtraj/rng.hpp"

using namespace survtraj;

namespace {

// Independent central-difference oracle; deliberately avoids backward() and
// grad_check() so it can vouch for them.
double fd_max_rel_error(const std::function<Value(const Value&)>& f, const Tensor& theta,
                        const Tensor& analytic, double h = 1e-5) {
    double worst = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
        Tensor tp = theta;
        tp[i] += h;
        Tensor tm = theta;
        tm[i] -= h;
        const double fp = f(Value::constant(tp)).val()[0];
        const double fm = f(Value::constant(tm)).val()[0];
        const double c = (fp - fm) / (2.0 * h);
        const double rel = std::abs(analytic[i] - c) / (std::abs(analytic[i]) + std::abs(c) + 1e-12);
        worst = std::max(worst, rel);
    }
    return worst;
}

double check_op(const std::function<Value(const Value&)>& f, const Tensor& theta) {
    Value leaf = Value::leaf(theta, true);
    Value out = sum(f(leaf));
    backward(out);
    return fd_max_rel_error([&](const Value& t) { return sum(f(t)); }, theta, leaf.grad());
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.5, double hi = 1.5) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
    Value out = softmax(Value::constant(Tensor::row({0.0, 0.0})));
    CHECK(out.val()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.val()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmin equals softmax of negated input") {
    const Tensor x = Tensor::row({1.0, 2.0, 3.0});
    Value a = softmin(Value::constant(x));
    Value b = softmax(neg(Value::constant(x)));
    for (size_t i = 0; i < 3; ++i) CHECK(a.val()[i] == doctest::Approx(b.val()[i]).epsilon(1e-15));
}

TEST_CASE("cumprod runs left to right") {
    Value out = cumprod(Value::constant(Tensor::row({1.0, 0.5, 0.5})));
    CHECK(out.val()[0] == 1.0);
    CHECK(out.val()[1] == 0.5);
    CHECK(out.val()[2] == 0.25);
}

TEST_CASE("backward: sum of squares") {
    Value w = Value::leaf(Tensor::row({1.0, 2.0}), true);
    backward(sum(mul(w, w)));
    CHECK(w.grad()[0] == doctest::Approx(2.0));
    CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward: sigmoid at zero has slope 1/4") {
    Value x = Value::leaf(Tensor::scalar(0.0), true);
    backward(sum(sigmoid(x)));
    CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward matches finite differences on a two-layer net") {
    Rng rng(7);
    const int d_in = 4, d_h = 5;
    const Tensor x = random_tensor({3, d_in}, rng);
    const Tensor w2 = random_tensor({d_h, 1}, rng);

    // Parameters packed into one leaf: rows [0, d_in) form W1, the last row
    // is the bias.
    Tensor theta = random_tensor({d_in + 1, d_h}, rng, -0.7, 0.7);
    auto net = [&](const Value& t) {
        Value w1 = slice(t, 0, 0, d_in);
        Value b1 = slice(t, 0, d_in, d_in + 1);
        Value h = tanh_act(add(matmul(Value::constant(x), w1), broadcast_to(b1, {3, d_h})));
        Value out = matmul(h, Value::constant(w2));
        return mean(mul(out, out));
    };
    Value leaf = Value::leaf(theta, true);
    backward(net(leaf));
    CHECK(fd_max_rel_error(net, theta, leaf.grad()) < 1e-4);
}

TEST_CASE("grad_check on theta^2 is nearly exact") {
    const double err = grad_check([](const Value& t) { return sum(mul(t, t)); }, Tensor::scalar(3.0), 1e-5);
    CHECK(err < 1e-8);
}

TEST_CASE("every primitive passes a finite-difference sweep") {
    Rng rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const int r = 1 + rng.uniform_int(4);
        const int c = 1 + rng.uniform_int(5);
        const Tensor a = random_tensor({r, c}, rng);
        const Tensor pos = random_tensor({r, c}, rng, 0.4, 2.0);
        const Tensor other = random_tensor({r, c}, rng);
        const Tensor mm = random_tensor({c, 3}, rng);
        const Tensor weights = random_tensor({r, c}, rng, -0.9, 0.9);

        auto scale = [&](Value v) { return mul(v, Value::constant(weights)); };

        CHECK(check_op([&](const Value& t) { return add(t, Value::constant(other)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return sub(Value::constant(other), t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(mul(t, Value::constant(other))); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return matmul(t, Value::constant(mm)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(transpose(transpose(t))); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return vexp(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return vlog(t); }, pos) < 1e-4);
        CHECK(check_op([&](const Value& t) { return neg(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return recip(t); }, pos) < 1e-4);
        CHECK(check_op([&](const Value& t) { return sqnorm(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return sum(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return mean(t); }, a) < 1e-4);
        CHECK(check_op(
                  [&](const Value& t) {
                      Value cc = concat({slice(t, 1, 0, c), t}, 1);
                      return mul(cc, broadcast_to(Value::constant(0.37), cc.val().shape()));
                  },
                  a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return sigmoid(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return softplus(t); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(softmax(t)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(softmin(t)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(cumsum(t)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(cumprod(t)); }, a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return scale(broadcast_to(slice(t, 0, 0, 1), {r, c})); },
                       a) < 1e-4);
        CHECK(check_op([&](const Value& t) { return slice(t, 1, c - 1, c); }, a) < 1e-4);
        // Bounds far from the data keep clamp differentiable at the samples.
        CHECK(check_op([&](const Value& t) { return clamp(t, -50.0, 50.0); }, a) < 1e-4);
    }
}

TEST_CASE("backward is deterministic and clean across reruns") {
    Rng rng(11);
    const Tensor theta = random_tensor({4, 4}, rng);
    Value leaf = Value::leaf(theta, true);
    Value out = sum(mul(softmax(leaf), cumsum(leaf)));
    backward(out);
    const Tensor g1 = leaf.grad();
    backward(out);  // accumulators are zero-initialized on every pass
    const Tensor g2 = leaf.grad();
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("shape mismatch names the primitive and both shapes") {
    Value a = Value::constant(Tensor::row({1.0, 2.0}));
    Value b = Value::constant(Tensor::row({1.0, 2.0, 3.0}));
    try {
        add(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("add") != std::string::npos);
        CHECK(msg.find("[2]") != std::string::npos);
        CHECK(msg.find("[3]") != std::string::npos);
    }
}

TEST_CASE("non-finite forward values raise NumericError") {
    CHECK_THROWS_AS((void)vlog(Value::constant(Tensor::row({-1.0}))), NumericError);
    CHECK_THROWS_AS((void)recip(Value::constant(Tensor::row({0.0}))), NumericError);
}

TEST_CASE("backward requires a scalar root") {
    Value a = Value::leaf(Tensor::row({1.0, 2.0}), true);
    CHECK_THROWS_AS(backward(a), ContractError);
}
