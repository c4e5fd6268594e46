#pragma once

#include <functional>
#include <span>
#include <vector>

#include "moedrive/params.hpp"
#include "moedrive/tensor.hpp"

namespace moedrive {

/// GRU cell parameters. Convention fixed project-wide:
///   z  = sigmoid(Wz x + Uz h + bz)
///   r  = sigmoid(Wr x + Ur h + br)
///   n  = tanh(Wn x + r .* (Un h) + bn)
///   h' = (1 - z) .* n + z .* h
struct GruParams {
    Param* Wz;
    Param* Uz;
    Param* bz;
    Param* Wr;
    Param* Ur;
    Param* br;
    Param* Wn;
    Param* Un;
    Param* bn;
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
};

GruParams make_gru(ParamSet& ps, const std::string& prefix,
                   std::size_t input_size, std::size_t hidden_size);

/// Reverse-mode tape over a small fixed op set. One tape is built per
/// sample (or per scalar function evaluation), backward() accumulates
/// into Param::grad.
class Tape {
public:
    using NodeId = int;

    /// Leaf holding a constant (observation, target, ...). No gradient.
    NodeId input(Tensor1 v);

    /// Leaf whose adjoint is wanted after backward (e.g. a feature
    /// produced outside the tape by the batched encoder).
    NodeId input_grad(Tensor1 v);

    /// y = W x + b
    NodeId linear(Param& W, Param& b, NodeId x);
    NodeId tanh_op(NodeId x);
    /// Max-subtracted softmax; entries positive, sum 1.
    NodeId softmax_op(NodeId x);
    NodeId concat(NodeId a, NodeId b);
    NodeId slice(NodeId x, std::size_t lo, std::size_t n);
    NodeId add(NodeId a, NodeId b);
    /// One recurrence step of the convention documented on GruParams.
    NodeId gru_cell(const GruParams& g, NodeId h, NodeId x);

    // scalar-valued loss ops (result is a length-1 node)
    /// sum_i |pred_i - target_i|
    NodeId l1_to(NodeId pred, Tensor1 target);
    /// ||pred - target||_2 (unsquared)
    NodeId l2norm_to(NodeId pred, Tensor1 target);
    /// (pred_0 - target)^2
    NodeId sqdiff_to(NodeId pred, double target);
    /// |pred_0 - target|
    NodeId absdiff_to(NodeId pred, double target);
    /// -ln(max(probs_idx, 1e-12))
    NodeId neg_log_pick(NodeId probs, std::size_t idx);
    /// sum_i w_i * scalar_node_i
    NodeId weighted_sum(std::span<const NodeId> nodes, std::span<const double> weights);

    const Tensor1& value(NodeId id) const { return nodes_[id].val; }
    double scalar(NodeId id) const { return nodes_[id].val[0]; }
    const Tensor1& adjoint(NodeId id) const { return nodes_[id].adj; }

    /// Adds an external adjoint contribution to a node before backward()
    /// (used for batch-level objectives like the load-balance auxiliary).
    void seed_adjoint(NodeId id, const Tensor1& g);

    /// Seeds the (scalar) root with 1 and runs the recorded ops in
    /// reverse. Param gradients are accumulated (+=), not overwritten.
    void backward(NodeId root);

private:
    struct Node {
        Tensor1 val;
        Tensor1 adj;
        std::function<void(Tape&)> back; // null for leaves
    };

    NodeId push(Tensor1 v, std::function<void(Tape&)> back);

    std::vector<Node> nodes_;
};

} // namespace moedrive
