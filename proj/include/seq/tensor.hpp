#pragma once
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "seq/errors.hpp"

namespace seq {

// Dense n-dimensional array of doubles, row-major.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        check_dims(shape);
        data.assign(count(shape), 0.0);
    }
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        check_dims(shape);
        if (count(shape) != data.size())
            throw PreconditionError("tensor: shape/data size mismatch");
    }

    static void check_dims(const std::vector<std::size_t>& s) {
        for (auto d : s)
            if (d == 0) throw PreconditionError("tensor: zero-sized dimension");
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t ndim() const { return shape.size(); }
    bool empty() const { return data.empty(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // 2-D accessors (rows = shape[0], cols = shape[1]).
    std::size_t rows() const { return shape[0]; }
    std::size_t cols() const { return shape[1]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double* row_ptr(std::size_t i) { return data.data() + i * shape[1]; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * shape[1]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // Reinterpret with a new shape of equal element count.
    Tensor reshaped(std::vector<std::size_t> s) const {
        if (count(s) != numel())
            throw PreconditionError("tensor: reshape element count mismatch");
        return Tensor(std::move(s), data);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

} // namespace seq
