#include "mgbr/gcn.hpp"

#include <cmath>

#include "mgbr/errors.hpp"
#include "mgbr/sparse.hpp"

namespace mgbr {

using nc::Tensor;

void init_gcn_params(nc::ParameterStore& ps, const ViewSet& views, const MgbrConfig& cfg,
                     Rng& rng) {
  const int d = cfg.embed_dim;
  // unit-scale weights keep the sigmoid inputs spread after the degree
  // normalization shrinks aggregated features; smaller scales push every
  // activation into the flat region around 0.5 and wash out node identity
  const float w_std = 1.0f;
  for (const ViewGraph* v : {&views.ui, &views.pi, &views.up}) {
    const std::string base = std::string("gcn.") + v->name();
    ps.add_gaussian(base + ".x0", {v->node_count, d}, 1.0f, rng);
    for (int l = 0; l < cfg.gcn_layers; ++l) {
      ps.add_gaussian(base + ".w" + std::to_string(l), {d, d}, w_std, rng);
    }
  }
}

Tensor gcn_forward(nc::Tape* tape, const ViewGraph& view, const Tensor& x0,
                   const std::vector<nc::Tensor>& weights) {
  if (x0.rank() != 2 || x0.shape()[0] != view.node_count) {
    throw DimensionError("gcn_forward: layer-0 rows " + x0.shape_str() + " != node count " +
                         std::to_string(view.node_count));
  }
  if (weights.empty()) throw ContractError("gcn_forward: at least one layer required");
  Tensor x = x0;
  for (const auto& w : weights) {
    x = nc::sigmoid(tape, nc::matmul(tape, nc::spmm(tape, view.normalized, x), w));
  }
  return x;
}

GcnOutputs gcn_forward_all(nc::Tape* tape, const ViewSet& views, nc::ParameterStore& ps,
                           const MgbrConfig& cfg) {
  auto run = [&](const ViewGraph& v) {
    const std::string base = std::string("gcn.") + v.name();
    std::vector<Tensor> weights;
    weights.reserve(static_cast<std::size_t>(cfg.gcn_layers));
    for (int l = 0; l < cfg.gcn_layers; ++l) {
      weights.push_back(ps.at(base + ".w" + std::to_string(l)));
    }
    return gcn_forward(tape, v, ps.at(base + ".x0"), weights);
  };
  return GcnOutputs{run(views.ui), run(views.pi), run(views.up)};
}

namespace {

void check_ids(const std::vector<int>& ids, int bound, const char* what) {
  for (int id : ids) {
    if (id < 0 || id >= bound) {
      throw LookupError(std::string(what) + " id " + std::to_string(id) + " out of range [0," +
                        std::to_string(bound) + ")");
    }
  }
}

}  // namespace

Tensor initiator_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& users,
                      int n_users) {
  check_ids(users, n_users, "user");
  return nc::concat(tape, {nc::gather_rows(tape, out.ui, users), nc::gather_rows(tape, out.up, users)},
                    1);
}

Tensor item_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& items, int n_users,
                 int n_items) {
  check_ids(items, n_items, "item");
  std::vector<int> shifted(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) shifted[i] = n_users + items[i];
  return nc::concat(
      tape, {nc::gather_rows(tape, out.ui, shifted), nc::gather_rows(tape, out.pi, shifted)}, 1);
}

Tensor participant_rows(nc::Tape* tape, const GcnOutputs& out, const std::vector<int>& users,
                        int n_users) {
  check_ids(users, n_users, "user");
  return nc::concat(tape, {nc::gather_rows(tape, out.pi, users), nc::gather_rows(tape, out.up, users)},
                    1);
}

Tensor participant_table(nc::Tape* tape, const GcnOutputs& out, int n_users) {
  std::vector<int> all(static_cast<std::size_t>(n_users));
  for (int i = 0; i < n_users; ++i) all[static_cast<std::size_t>(i)] = i;
  return participant_rows(tape, out, all, n_users);
}

}  // namespace mgbr
