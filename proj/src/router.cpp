#include "moedrive/router.hpp"

#include <cmath>
#include <stdexcept>

namespace moedrive {

double normalized_entropy(const Tensor1& probs) {
    if (probs.empty()) throw std::invalid_argument("normalized_entropy: empty");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p))
            throw std::invalid_argument("normalized_entropy: invalid probability entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("normalized_entropy: probabilities must sum to 1");
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    double u = h / std::log(double(probs.size()));
    return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
}

RouterDistribution make_distribution(const Tensor1& probs) {
    return {probs, normalized_entropy(probs)};
}

RoutingDecision select(const RouterDistribution& dist, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("select: tau outside [0,1]");
    RoutingDecision d;
    d.distribution = dist;
    d.tau = tau;
    if (dist.uncertainty >= tau) {
        d.global = true;
        return d;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.probs.size(); ++i)
        if (dist.probs[i] > dist.probs[best]) best = i; // ties keep the lowest index
    d.global = false;
    d.kind = ScenarioKind(int(best));
    return d;
}

double scenario_loss(const Tensor1& probs, ScenarioKind true_kind) {
    std::size_t idx = std::size_t(int(true_kind));
    if (idx >= probs.size()) throw std::invalid_argument("scenario_loss: kind out of range");
    double p = probs[idx];
    return -std::log(p > 1e-12 ? p : 1e-12);
}

} // namespace moedrive
