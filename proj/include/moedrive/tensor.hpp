#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace moedrive {

/// Dense 1-D tensor. All math in the project runs in 64-bit floats.
using Tensor1 = std::vector<double>;

/// Dense row-major 2-D tensor.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> d;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return d[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return d[r * cols + c]; }
};

inline void require_len(const Tensor1& v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw std::invalid_argument(std::string(what) + ": expected length " +
                                    std::to_string(n) + ", got " + std::to_string(v.size()));
}

inline bool all_finite(const Tensor1& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// y = W x + b
inline Tensor1 matvec(const Tensor2& W, const Tensor1& x, const Tensor1& b) {
    require_len(x, W.cols, "matvec x");
    require_len(b, W.rows, "matvec b");
    Tensor1 y(W.rows);
    for (std::size_t i = 0; i < W.rows; ++i) {
        const double* row = W.d.data() + i * W.cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < W.cols; ++j) acc += row[j] * x[j];
        y[i] = acc + b[i];
    }
    return y;
}

/// y = W^T g, accumulated row-wise so W is read sequentially.
inline Tensor1 matvec_t(const Tensor2& W, const Tensor1& g) {
    require_len(g, W.rows, "matvec_t g");
    Tensor1 y(W.cols, 0.0);
    for (std::size_t i = 0; i < W.rows; ++i) {
        const double* row = W.d.data() + i * W.cols;
        double gi = g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < W.cols; ++j) y[j] += row[j] * gi;
    }
    return y;
}

/// dW += g x^T
inline void accum_outer(Tensor2& dW, const Tensor1& g, const Tensor1& x) {
    for (std::size_t i = 0; i < dW.rows; ++i) {
        double* row = dW.d.data() + i * dW.cols;
        double gi = g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < dW.cols; ++j) row[j] += gi * x[j];
    }
}

inline double dot(const Tensor1& a, const Tensor1& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// C (m x n) += A (m x k) * B (k x n), all row-major flat buffers.
// Tiled with an axpy-style inner loop so the compiler can vectorize
// without reassociating reductions; accumulation order is fixed, so
// results are bit-reproducible run to run.
inline void gemm_acc(std::size_t m, std::size_t k, std::size_t n,
                     const double* A, const double* B, double* C) {
    constexpr std::size_t KT = 128, NT = 512;
    for (std::size_t p0 = 0; p0 < k; p0 += KT) {
        std::size_t p1 = std::min(k, p0 + KT);
        for (std::size_t j0 = 0; j0 < n; j0 += NT) {
            std::size_t j1 = std::min(n, j0 + NT);
            for (std::size_t i = 0; i < m; ++i) {
                const double* a = A + i * k;
                double* c = C + i * n;
                for (std::size_t p = p0; p < p1; ++p) {
                    double av = a[p];
                    if (av == 0.0) continue;
                    const double* b = B + p * n;
                    for (std::size_t j = j0; j < j1; ++j) c[j] += av * b[j];
                }
            }
        }
    }
}

// scratch = transpose of A (m x n) -> (n x m)
inline void transpose_into(std::size_t m, std::size_t n, const double* A,
                           std::vector<double>& scratch) {
    scratch.assign(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) scratch[j * m + i] = A[i * n + j];
}

} // namespace moedrive
