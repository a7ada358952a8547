#pragma once

#include <vector>

#include "mgbr/config.hpp"
#include "mgbr/graph.hpp"
#include "mgbr/params.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr {

/// Final-layer node matrices of the three view GCNs.
struct GcnOutputs {
  nc::Tensor ui;  // [n_users + n_items, d]
  nc::Tensor pi;  // [n_users + n_items, d]
  nc::Tensor up;  // [n_users, d]
};

/// Register layer-0 embeddings (standard Gaussian) and per-layer weights for
/// every view under `gcn.<view>.{x0,w<l>}`.
void init_gcn_params(nc::ParameterStore& ps, const ViewSet& views, const MgbrConfig& cfg,
                     Rng& rng);

/// X^l = sigmoid(A_hat X^{l-1} W^{l-1}) for l = 1..H; returns X^H.
nc::Tensor gcn_forward(nc::Tape* tape, const ViewGraph& view, const nc::Tensor& x0,
                       const std::vector<nc::Tensor>& weights);

GcnOutputs gcn_forward_all(nc::Tape* tape, const ViewSet& views, nc::ParameterStore& ps,
                           const MgbrConfig& cfg);

// Multi-view embedding rows, one per requested id. Concatenation order is
// fixed: initiators UI||UP, items UI||PI, participants PI||UP.
nc::Tensor initiator_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& users,
                          int n_users);
nc::Tensor item_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& items,
                     int n_users, int n_items);
nc::Tensor participant_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& users,
                            int n_users);

/// All users' participant-role embeddings, [n_users, 2d]; feeds the mean
/// participant embedding.
nc::Tensor participant_table(nc::Tape* tape, const GcnOutputs& out, int n_users);

}  // namespace mgbr
