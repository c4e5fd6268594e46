#pragma once

#include "moedrive/tape.hpp"

namespace moedrive {

// Convenience forward-only wrappers over the tape ops, used by tests and
// call sites that do not need gradients.

inline Tensor1 linear_forward(const Param& W, const Param& b, const Tensor1& x) {
    Tape t;
    return t.value(t.linear(const_cast<Param&>(W), const_cast<Param&>(b), t.input(x)));
}

inline Tensor1 gru_cell_step(const GruParams& g, const Tensor1& h, const Tensor1& x) {
    Tape t;
    return t.value(t.gru_cell(g, t.input(h), t.input(x)));
}

inline Tensor1 softmax(const Tensor1& logits) {
    Tape t;
    return t.value(t.softmax_op(t.input(logits)));
}

} // namespace moedrive
