#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "survtraj/errors.hpp"

namespace survtraj {

// Dense row-major tensor of 64-bit reals, rank 1 or 2. All model state and
// every intermediate of the differentiation engine lives in these.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        v_.assign(count(shape_), 0.0);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, double value) {
        Tensor t(std::move(shape));
        for (auto& x : t.v_) x = value;
        return t;
    }

    static Tensor scalar(double value) {
        Tensor t({1});
        t.v_[0] = value;
        return t;
    }

    static Tensor from(std::vector<double> values, std::vector<int> shape) {
        Tensor t;
        t.shape_ = std::move(shape);
        if (values.size() != count(t.shape_)) {
            throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(t.shape_));
        }
        t.v_ = std::move(values);
        return t;
    }

    static Tensor row(std::vector<double> values) {
        const int n = static_cast<int>(values.size());
        return from(std::move(values), {n});
    }

    static Tensor matrix(int rows, int cols, std::vector<double> values) {
        return from(std::move(values), {rows, cols});
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    size_t size() const { return v_.size(); }

    // Row/column view: rank-1 tensors behave as a single row.
    int rows() const { return rank() == 2 ? shape_[0] : 1; }
    int cols() const { return rank() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_[0]); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    double& at(int r, int c) { return v_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }
    double at(int r, int c) const { return v_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }

    bool all_finite() const {
        for (double x : v_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    std::string shape_str() const { return shape_str(shape_); }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(s[i]);
        }
        out += "]";
        return out;
    }

    static size_t count(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
            n *= static_cast<size_t>(d);
        }
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::vector<double> v_;
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

}  // namespace survtraj
