#pragma once

#include "mgbr/config.hpp"
#include "mgbr/params.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr {

/// Gate outputs carried between multi-task layers. At layer 0 all three
/// states equal the triple concatenation e_u || e_i || e_p; afterwards each
/// is [n, d]. Without shared experts, `s` stays unused.
struct MtlState {
  nc::Tensor a, b, s;
};

struct MtlOut {
  nc::Tensor gate_a;  // [n, d]
  nc::Tensor gate_b;  // [n, d]
};

/// Register expert/gate/adjusted-gate weights under `mtl.l<layer>.*`.
/// Layer-1 inputs are the wide gate-0 states, so weight shapes differ per
/// layer and sharing across layers is not possible.
void init_mtl_params(nc::ParameterStore& ps, const MgbrConfig& cfg, Rng& rng);

/// One expert+gate layer (1-based index). The pair tensors (e_u||e_i etc.)
/// are only read when adjusted gates are enabled.
MtlState mtl_layer(nc::Tape* tape, int layer, const MtlState& prev, const nc::Tensor& pair_ui,
                   const nc::Tensor& pair_ip, const nc::Tensor& pair_up,
                   const nc::ParameterStore& ps, const MgbrConfig& cfg);

/// Full module over a batch of rows: builds gate 0 from the embeddings,
/// iterates the layers, returns the final task gates.
MtlOut mtl_forward(nc::Tape* tape, const nc::Tensor& e_u, const nc::Tensor& e_i,
                   const nc::Tensor& e_p, const nc::ParameterStore& ps, const MgbrConfig& cfg);

/// Same, but the gate-0 state and the raw embeddings driving the adjusted
/// gates are supplied separately (they coincide in normal operation).
MtlOut mtl_forward_parts(nc::Tape* tape, const nc::Tensor& g0, const nc::Tensor& e_u,
                         const nc::Tensor& e_i, const nc::Tensor& e_p,
                         const nc::ParameterStore& ps, const MgbrConfig& cfg);

}  // namespace mgbr
