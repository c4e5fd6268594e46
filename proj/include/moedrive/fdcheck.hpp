#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moedrive/params.hpp"

namespace moedrive {

/// Central-difference gradient oracle: (f(p+eps) - f(p-eps)) / (2 eps)
/// per coordinate. f must be a deterministic scalar function of the
/// parameter values.
using ScalarFn = std::function<double(ParamSet&)>;

inline std::vector<Tensor1> finite_diff_grad(const ScalarFn& f, ParamSet& ps, double eps) {
    if (!(eps >= 1e-6 && eps <= 1e-4))
        throw std::invalid_argument("finite_diff_grad: eps out of [1e-6, 1e-4]");
    std::vector<Tensor1> out;
    out.reserve(ps.count());
    for (std::size_t i = 0; i < ps.count(); ++i) {
        Param& p = ps.at(i);
        Tensor1 g(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
            double saved = p.value[k];
            p.value[k] = saved + eps;
            double fp = f(ps);
            p.value[k] = saved - eps;
            double fm = f(ps);
            p.value[k] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("finite_diff_grad: non-finite f at " + p.name);
            g[k] = (fp - fm) / (2.0 * eps);
        }
        out.push_back(std::move(g));
    }
    return out;
}

/// Central difference for a single (param index, coordinate) pair.
inline double finite_diff_coord(const ScalarFn& f, ParamSet& ps, std::size_t pi,
                                std::size_t k, double eps) {
    Param& p = ps.at(pi);
    double saved = p.value[k];
    p.value[k] = saved + eps;
    double fp = f(ps);
    p.value[k] = saved - eps;
    double fm = f(ps);
    p.value[k] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff_coord: non-finite f at " + p.name);
    return (fp - fm) / (2.0 * eps);
}

/// Relative error used by the gradient-fidelity checks. Coordinates where
/// both sides are below `floor` in magnitude are treated as matching.
inline double grad_rel_err(double analytic, double numeric, double floor = 1e-8) {
    double aa = std::abs(analytic), an = std::abs(numeric);
    if (aa < floor && an < floor) return 0.0;
    return std::abs(analytic - numeric) / std::max(aa, an);
}

} // namespace moedrive
