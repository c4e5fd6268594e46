#include "moedrive/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moedrive {

GruParams make_gru(ParamSet& ps, const std::string& prefix,
                   std::size_t input_size, std::size_t hidden_size) {
    GruParams g;
    g.input_size = input_size;
    g.hidden_size = hidden_size;
    g.Wz = &ps.add_matrix(prefix + ".Wz", hidden_size, input_size);
    g.Uz = &ps.add_matrix(prefix + ".Uz", hidden_size, hidden_size);
    g.bz = &ps.add_vector(prefix + ".bz", hidden_size, hidden_size);
    g.Wr = &ps.add_matrix(prefix + ".Wr", hidden_size, input_size);
    g.Ur = &ps.add_matrix(prefix + ".Ur", hidden_size, hidden_size);
    g.br = &ps.add_vector(prefix + ".br", hidden_size, hidden_size);
    g.Wn = &ps.add_matrix(prefix + ".Wn", hidden_size, input_size);
    g.Un = &ps.add_matrix(prefix + ".Un", hidden_size, hidden_size);
    g.bn = &ps.add_vector(prefix + ".bn", hidden_size, hidden_size);
    return g;
}

Tape::NodeId Tape::push(Tensor1 v, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(v), {}, std::move(back)});
    Node& n = nodes_.back();
    n.adj.assign(n.val.size(), 0.0);
    return NodeId(nodes_.size() - 1);
}

Tape::NodeId Tape::input(Tensor1 v) { return push(std::move(v), nullptr); }

Tape::NodeId Tape::input_grad(Tensor1 v) { return push(std::move(v), nullptr); }

namespace {

inline void matvec_into(const Param& W, const Tensor1& x, Tensor1& y) {
    const std::size_t n = W.cols;
    const double* xp = x.data();
    for (std::size_t i = 0; i < W.rows; ++i) {
        const double* row = W.value.data() + i * n;
        // four independent accumulators keep the reduction vectorizable
        double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            a0 += row[j] * xp[j];
            a1 += row[j + 1] * xp[j + 1];
            a2 += row[j + 2] * xp[j + 2];
            a3 += row[j + 3] * xp[j + 3];
        }
        double acc = (a0 + a1) + (a2 + a3);
        for (; j < n; ++j) acc += row[j] * xp[j];
        y[i] += acc;
    }
}

// dx += W^T g and dW += g x^T, dB += g
inline void linear_back(Param& W, Param& b, const Tensor1& x, const Tensor1& g,
                        Tensor1& dx) {
    for (std::size_t i = 0; i < W.rows; ++i) {
        double gi = g[i];
        b.grad[i] += gi;
        const double* wrow = W.value.data() + i * W.cols;
        double* grow = W.grad.data() + i * W.cols;
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < W.cols; ++j) {
            grow[j] += gi * x[j];
            dx[j] += wrow[j] * gi;
        }
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Tape::NodeId Tape::linear(Param& W, Param& b, NodeId x) {
    const Tensor1& xv = nodes_[x].val;
    if (xv.size() != W.cols)
        throw std::invalid_argument("linear: input length " + std::to_string(xv.size()) +
                                    " != declared input size " + std::to_string(W.cols));
    if (b.size() != W.rows) throw std::invalid_argument("linear: bias/output size mismatch");
    Tensor1 y(W.rows);
    for (std::size_t i = 0; i < W.rows; ++i) y[i] = b.value[i];
    matvec_into(W, xv, y);
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [&W, &b, x, out](Tape& t) {
        linear_back(W, b, t.nodes_[x].val, t.nodes_[out].adj, t.nodes_[x].adj);
    };
    return out;
}

Tape::NodeId Tape::tanh_op(NodeId x) {
    Tensor1 y = nodes_[x].val;
    for (double& v : y) v = std::tanh(v);
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [x, out](Tape& t) {
        const Tensor1& yv = t.nodes_[out].val;
        const Tensor1& g = t.nodes_[out].adj;
        Tensor1& dx = t.nodes_[x].adj;
        for (std::size_t i = 0; i < yv.size(); ++i) dx[i] += g[i] * (1.0 - yv[i] * yv[i]);
    };
    return out;
}

Tape::NodeId Tape::softmax_op(NodeId x) {
    const Tensor1& xv = nodes_[x].val;
    if (xv.empty()) throw std::invalid_argument("softmax: empty input");
    if (!all_finite(xv)) throw std::invalid_argument("softmax: non-finite logits");
    double mx = *std::max_element(xv.begin(), xv.end());
    Tensor1 y(xv.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        y[i] = std::exp(xv[i] - mx);
        sum += y[i];
    }
    for (double& v : y) v /= sum;
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [x, out](Tape& t) {
        const Tensor1& yv = t.nodes_[out].val;
        const Tensor1& g = t.nodes_[out].adj;
        Tensor1& dx = t.nodes_[x].adj;
        double gy = dot(g, yv);
        for (std::size_t i = 0; i < yv.size(); ++i) dx[i] += yv[i] * (g[i] - gy);
    };
    return out;
}

Tape::NodeId Tape::concat(NodeId a, NodeId b) {
    Tensor1 y = nodes_[a].val;
    y.insert(y.end(), nodes_[b].val.begin(), nodes_[b].val.end());
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Tensor1& g = t.nodes_[out].adj;
        Tensor1& da = t.nodes_[a].adj;
        Tensor1& db = t.nodes_[b].adj;
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[da.size() + i];
    };
    return out;
}

Tape::NodeId Tape::slice(NodeId x, std::size_t lo, std::size_t n) {
    const Tensor1& xv = nodes_[x].val;
    if (lo + n > xv.size()) throw std::invalid_argument("slice: out of range");
    Tensor1 y(xv.begin() + lo, xv.begin() + lo + n);
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [x, lo, n, out](Tape& t) {
        const Tensor1& g = t.nodes_[out].adj;
        Tensor1& dx = t.nodes_[x].adj;
        for (std::size_t i = 0; i < n; ++i) dx[lo + i] += g[i];
    };
    return out;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor1& av = nodes_[a].val;
    const Tensor1& bv = nodes_[b].val;
    require_len(bv, av.size(), "add");
    Tensor1 y(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] + bv[i];
    NodeId out = push(std::move(y), nullptr);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Tensor1& g = t.nodes_[out].adj;
        Tensor1& da = t.nodes_[a].adj;
        Tensor1& db = t.nodes_[b].adj;
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i];
            db[i] += g[i];
        }
    };
    return out;
}

Tape::NodeId Tape::gru_cell(const GruParams& gp, NodeId h, NodeId x) {
    const Tensor1& hv = nodes_[h].val;
    const Tensor1& xv = nodes_[x].val;
    require_len(hv, gp.hidden_size, "gru_cell h");
    require_len(xv, gp.input_size, "gru_cell x");
    std::size_t H = gp.hidden_size;

    Tensor1 z(H), r(H), n(H), u(H); // u = Un h
    for (std::size_t i = 0; i < H; ++i) {
        z[i] = gp.bz->value[i];
        r[i] = gp.br->value[i];
        n[i] = gp.bn->value[i];
        u[i] = 0.0;
    }
    matvec_into(*gp.Wz, xv, z);
    matvec_into(*gp.Uz, hv, z);
    matvec_into(*gp.Wr, xv, r);
    matvec_into(*gp.Ur, hv, r);
    matvec_into(*gp.Wn, xv, n);
    matvec_into(*gp.Un, hv, u);
    Tensor1 hn(H);
    for (std::size_t i = 0; i < H; ++i) {
        z[i] = sigmoid(z[i]);
        r[i] = sigmoid(r[i]);
        n[i] = std::tanh(n[i] + r[i] * u[i]);
        hn[i] = (1.0 - z[i]) * n[i] + z[i] * hv[i];
    }
    NodeId out = push(std::move(hn), nullptr);
    nodes_[out].back = [gp, h, x, out, z = std::move(z), r = std::move(r), n = std::move(n),
                        u = std::move(u)](Tape& t) {
        const Tensor1& g = t.nodes_[out].adj;
        const Tensor1& hv = t.nodes_[h].val;
        const Tensor1& xv = t.nodes_[x].val;
        Tensor1& dh = t.nodes_[h].adj;
        Tensor1& dx = t.nodes_[x].adj;
        std::size_t H = gp.hidden_size;
        Tensor1 daz(H), dar(H), dan(H), du(H);
        for (std::size_t i = 0; i < H; ++i) {
            double gi = g[i];
            double dz = gi * (hv[i] - n[i]);
            double dn = gi * (1.0 - z[i]);
            dh[i] += gi * z[i];
            daz[i] = dz * z[i] * (1.0 - z[i]);
            dan[i] = dn * (1.0 - n[i] * n[i]);
            du[i] = dan[i] * r[i];
            double dr = dan[i] * u[i];
            dar[i] = dr * r[i] * (1.0 - r[i]);
        }
        linear_back(*gp.Wz, *gp.bz, xv, daz, dx);
        linear_back(*gp.Wr, *gp.br, xv, dar, dx);
        linear_back(*gp.Wn, *gp.bn, xv, dan, dx);
        // hidden-path contributions: Uz, Ur carry daz/dar with bias grads
        // already counted above, so accumulate weights and dh by hand
        auto hidden_back = [&](Param& U, const Tensor1& da) {
            for (std::size_t i = 0; i < H; ++i) {
                double gi = da[i];
                if (gi == 0.0) continue;
                const double* wrow = U.value.data() + i * H;
                double* grow = U.grad.data() + i * H;
                for (std::size_t j = 0; j < H; ++j) {
                    grow[j] += gi * hv[j];
                    dh[j] += wrow[j] * gi;
                }
            }
        };
        hidden_back(*gp.Uz, daz);
        hidden_back(*gp.Ur, dar);
        hidden_back(*gp.Un, du);
    };
    return out;
}

Tape::NodeId Tape::l1_to(NodeId pred, Tensor1 target) {
    const Tensor1& pv = nodes_[pred].val;
    require_len(target, pv.size(), "l1_to");
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) s += std::abs(pv[i] - target[i]);
    NodeId out = push(Tensor1{s}, nullptr);
    nodes_[out].back = [pred, out, target = std::move(target)](Tape& t) {
        double g = t.nodes_[out].adj[0];
        const Tensor1& pv = t.nodes_[pred].val;
        Tensor1& dp = t.nodes_[pred].adj;
        for (std::size_t i = 0; i < pv.size(); ++i) {
            double d = pv[i] - target[i];
            dp[i] += g * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
        }
    };
    return out;
}

Tape::NodeId Tape::l2norm_to(NodeId pred, Tensor1 target) {
    const Tensor1& pv = nodes_[pred].val;
    require_len(target, pv.size(), "l2norm_to");
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        double d = pv[i] - target[i];
        s += d * d;
    }
    double norm = std::sqrt(s);
    NodeId out = push(Tensor1{norm}, nullptr);
    nodes_[out].back = [pred, out, norm, target = std::move(target)](Tape& t) {
        if (norm < 1e-12) return; // kink at exact equality
        double g = t.nodes_[out].adj[0] / norm;
        const Tensor1& pv = t.nodes_[pred].val;
        Tensor1& dp = t.nodes_[pred].adj;
        for (std::size_t i = 0; i < pv.size(); ++i) dp[i] += g * (pv[i] - target[i]);
    };
    return out;
}

Tape::NodeId Tape::sqdiff_to(NodeId pred, double target) {
    double p = nodes_[pred].val.at(0);
    double d = p - target;
    NodeId out = push(Tensor1{d * d}, nullptr);
    nodes_[out].back = [pred, out, d](Tape& t) {
        t.nodes_[pred].adj[0] += t.nodes_[out].adj[0] * 2.0 * d;
    };
    return out;
}

Tape::NodeId Tape::absdiff_to(NodeId pred, double target) {
    double p = nodes_[pred].val.at(0);
    double d = p - target;
    NodeId out = push(Tensor1{std::abs(d)}, nullptr);
    nodes_[out].back = [pred, out, d](Tape& t) {
        double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        t.nodes_[pred].adj[0] += t.nodes_[out].adj[0] * s;
    };
    return out;
}

Tape::NodeId Tape::neg_log_pick(NodeId probs, std::size_t idx) {
    const Tensor1& pv = nodes_[probs].val;
    if (idx >= pv.size()) throw std::invalid_argument("neg_log_pick: index out of range");
    double p = std::max(pv[idx], 1e-12);
    NodeId out = push(Tensor1{-std::log(p)}, nullptr);
    nodes_[out].back = [probs, out, idx](Tape& t) {
        const Tensor1& pv = t.nodes_[probs].val;
        if (pv[idx] < 1e-12) return; // in the clamped flat region
        t.nodes_[probs].adj[idx] += t.nodes_[out].adj[0] * (-1.0 / pv[idx]);
    };
    return out;
}

Tape::NodeId Tape::weighted_sum(std::span<const NodeId> ids, std::span<const double> ws) {
    if (ids.size() != ws.size()) throw std::invalid_argument("weighted_sum: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) s += ws[i] * nodes_[ids[i]].val.at(0);
    NodeId out = push(Tensor1{s}, nullptr);
    std::vector<NodeId> idv(ids.begin(), ids.end());
    std::vector<double> wv(ws.begin(), ws.end());
    nodes_[out].back = [out, idv = std::move(idv), wv = std::move(wv)](Tape& t) {
        double g = t.nodes_[out].adj[0];
        for (std::size_t i = 0; i < idv.size(); ++i) t.nodes_[idv[i]].adj[0] += g * wv[i];
    };
    return out;
}

void Tape::seed_adjoint(NodeId id, const Tensor1& g) {
    Tensor1& adj = nodes_[id].adj;
    require_len(g, adj.size(), "seed_adjoint");
    for (std::size_t i = 0; i < g.size(); ++i) adj[i] += g[i];
}

void Tape::backward(NodeId root) {
    if (nodes_[root].val.size() != 1)
        throw std::invalid_argument("backward: root must be scalar");
    nodes_[root].adj[0] = 1.0;
    for (int i = root; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
}

} // namespace moedrive
