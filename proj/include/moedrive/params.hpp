#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>

#include "moedrive/rng.hpp"
#include "moedrive/tensor.hpp"

namespace moedrive {

/// One named trainable parameter: a value tensor and a gradient tensor of
/// identical shape. Vectors are stored with cols == 1.
struct Param {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 1;
    Tensor1 value;
    Tensor1 grad;

    std::size_t size() const { return rows * cols; }
    Tensor2 as_matrix() const {
        Tensor2 m(rows, cols);
        m.d = value;
        return m;
    }
};

/// Registry of all trainable parameters of a model, in registration order.
/// Uses a deque so Param references stay valid as parameters are added;
/// the tape's backward closures hold such references.
class ParamSet {
public:
    explicit ParamSet(uint64_t rng_seed = 0) : rng_(rng_seed), rng_seed_(rng_seed) {}

    /// Weight matrix, init uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    /// with fan_in = cols.
    Param& add_matrix(const std::string& name, std::size_t rows, std::size_t cols) {
        return add(name, rows, cols, cols);
    }

    /// Bias (or other vector) with an explicit fan_in for the init range.
    Param& add_vector(const std::string& name, std::size_t n, std::size_t fan_in) {
        return add(name, n, 1, fan_in);
    }

    void zero_grads() {
        for (auto& p : params_)
            std::fill(p.grad.begin(), p.grad.end(), 0.0);
    }

    void scale_grads(double s) {
        for (auto& p : params_)
            for (double& g : p.grad) g *= s;
    }

    Param* find(const std::string& name) {
        for (auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.size();
        return n;
    }

    uint64_t rng_seed() const { return rng_seed_; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t count() const { return params_.size(); }
    Param& at(std::size_t i) { return params_[i]; }

private:
    Param& add(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
        if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
        Param p;
        p.name = name;
        p.rows = rows;
        p.cols = cols;
        p.value.resize(rows * cols);
        p.grad.assign(rows * cols, 0.0);
        double bound = 1.0 / std::sqrt(double(fan_in > 0 ? fan_in : 1));
        for (double& v : p.value) v = rng_.uniform(-bound, bound);
        params_.push_back(std::move(p));
        return params_.back();
    }

    std::deque<Param> params_;
    Rng rng_;
    uint64_t rng_seed_;
};

} // namespace moedrive
