#include "mgbr/mtl.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mgbr/errors.hpp"

namespace mgbr {

using nc::Tensor;

namespace {

std::string layer_name(int layer, const std::string& tail) {
  return "mtl.l" + std::to_string(layer) + "." + tail;
}

}  // namespace

void init_mtl_params(nc::ParameterStore& ps, const MgbrConfig& cfg, Rng& rng) {
  const int d = cfg.embed_dim;
  const int obj = 2 * d;     // one object embedding
  const int g0_width = 3 * obj;
  const int pair = 2 * obj;  // adjusted-gate input (two objects)
  const int k = cfg.experts;

  auto gaussian = [&](const std::string& name, int in_w, int out_w) {
    ps.add_gaussian(name, {in_w, out_w}, 1.0f / std::sqrt(static_cast<float>(in_w)), rng);
  };

  for (int l = 1; l <= cfg.mtl_layers; ++l) {
    const int prev = l == 1 ? g0_width : d;
    const int in_task = cfg.shared_experts ? 2 * prev : prev;
    const int in_shared = 3 * prev;

    for (int e = 0; e < k; ++e) {
      gaussian(layer_name(l, "expert_a." + std::to_string(e)), in_task, d);
      gaussian(layer_name(l, "expert_b." + std::to_string(e)), in_task, d);
      if (cfg.shared_experts) {
        gaussian(layer_name(l, "expert_s." + std::to_string(e)), in_shared, d);
      }
    }
    const int mix_task = cfg.shared_experts ? 2 * k : k;
    gaussian(layer_name(l, "gate_a"), in_task, mix_task);
    gaussian(layer_name(l, "gate_b"), in_task, mix_task);
    if (cfg.shared_experts) {
      gaussian(layer_name(l, "gate_s"), in_shared, 3 * k);
    }
    if (cfg.adjusted_gates) {
      gaussian(layer_name(l, "adj_a_ui"), pair, k);
      gaussian(layer_name(l, "adj_b_ip"), pair, k);
      gaussian(layer_name(l, "adj_b_up"), pair, k);
      if (cfg.shared_experts) {
        // these three route pair information through the shared experts
        gaussian(layer_name(l, "adj_a_ip"), pair, k);
        gaussian(layer_name(l, "adj_a_up"), pair, k);
        gaussian(layer_name(l, "adj_b_ui"), pair, k);
      }
    }
  }
}

MtlState mtl_layer(nc::Tape* tape, int layer, const MtlState& prev, const Tensor& pair_ui,
                   const Tensor& pair_ip, const Tensor& pair_up, const nc::ParameterStore& ps,
                   const MgbrConfig& cfg) {
  const int k = cfg.experts;
  auto w = [&](const std::string& tail) -> const Tensor& { return ps.at(layer_name(layer, tail)); };

  const Tensor in_a =
      cfg.shared_experts ? nc::concat(tape, {prev.a, prev.s}, 1) : prev.a;
  const Tensor in_b =
      cfg.shared_experts ? nc::concat(tape, {prev.b, prev.s}, 1) : prev.b;

  std::vector<Tensor> experts_a, experts_b, experts_s;
  experts_a.reserve(static_cast<std::size_t>(k));
  experts_b.reserve(static_cast<std::size_t>(k));
  for (int e = 0; e < k; ++e) {
    experts_a.push_back(nc::matmul(tape, in_a, w("expert_a." + std::to_string(e))));
    experts_b.push_back(nc::matmul(tape, in_b, w("expert_b." + std::to_string(e))));
  }
  Tensor in_s;
  if (cfg.shared_experts) {
    in_s = nc::concat(tape, {prev.a, prev.s, prev.b}, 1);
    experts_s.reserve(static_cast<std::size_t>(k));
    for (int e = 0; e < k; ++e) {
      experts_s.push_back(nc::matmul(tape, in_s, w("expert_s." + std::to_string(e))));
    }
  }

  auto stacked = [&](const std::vector<Tensor>& first, const std::vector<Tensor>& second) {
    std::vector<Tensor> all = first;
    all.insert(all.end(), second.begin(), second.end());
    return all;
  };

  MtlState next;

  // task A: generic section mixes its own and the shared experts; the
  // adjusted section weighs (u,i) against its own experts while (i,p) and
  // (u,p) information arrives through the shared ones
  {
    Tensor g = nc::mix_rows(tape, nc::matmul(tape, in_a, w("gate_a")),
                            cfg.shared_experts ? stacked(experts_a, experts_s) : experts_a);
    if (cfg.adjusted_gates) {
      Tensor adj =
          nc::mix_rows(tape, nc::matmul(tape, pair_ui, w("adj_a_ui")), experts_a);
      if (cfg.shared_experts) {
        adj = nc::add(tape, adj,
                      nc::mix_rows(tape, nc::matmul(tape, pair_ip, w("adj_a_ip")), experts_s));
        adj = nc::add(tape, adj,
                      nc::mix_rows(tape, nc::matmul(tape, pair_up, w("adj_a_up")), experts_s));
      }
      g = nc::add(tape, g, nc::scale(tape, adj, cfg.gate_alpha_a));
    }
    next.a = g;
  }

  // task B mirrors A with the expert roles swapped: (u,i) goes through the
  // shared experts, (i,p) and (u,p) through its own
  {
    Tensor g = nc::mix_rows(tape, nc::matmul(tape, in_b, w("gate_b")),
                            cfg.shared_experts ? stacked(experts_b, experts_s) : experts_b);
    if (cfg.adjusted_gates) {
      Tensor adj = nc::mix_rows(tape, nc::matmul(tape, pair_ip, w("adj_b_ip")), experts_b);
      adj = nc::add(tape, adj,
                    nc::mix_rows(tape, nc::matmul(tape, pair_up, w("adj_b_up")), experts_b));
      if (cfg.shared_experts) {
        adj = nc::add(tape, adj,
                      nc::mix_rows(tape, nc::matmul(tape, pair_ui, w("adj_b_ui")), experts_s));
      }
      g = nc::add(tape, g, nc::scale(tape, adj, cfg.gate_alpha_b));
    }
    next.b = g;
  }

  if (cfg.shared_experts) {
    next.s = nc::mix_rows(tape, nc::matmul(tape, in_s, w("gate_s")),
                          stacked(stacked(experts_a, experts_s), experts_b));
  }
  return next;
}

MtlOut mtl_forward_parts(nc::Tape* tape, const Tensor& g0, const Tensor& e_u, const Tensor& e_i,
                         const Tensor& e_p, const nc::ParameterStore& ps, const MgbrConfig& cfg) {
  if (cfg.mtl_layers < 1) throw ContractError("mtl_forward: at least one layer required");
  if (g0.rank() != 2 || g0.shape()[1] != 6 * cfg.embed_dim) {
    throw DimensionError("mtl_forward: gate-0 state must be [n," +
                         std::to_string(6 * cfg.embed_dim) + "], got " + g0.shape_str());
  }
  Tensor pair_ui, pair_ip, pair_up;
  if (cfg.adjusted_gates) {
    pair_ui = nc::concat(tape, {e_u, e_i}, 1);
    pair_ip = nc::concat(tape, {e_i, e_p}, 1);
    pair_up = nc::concat(tape, {e_u, e_p}, 1);
  }
  MtlState state{g0, g0, g0};
  for (int l = 1; l <= cfg.mtl_layers; ++l) {
    state = mtl_layer(tape, l, state, pair_ui, pair_ip, pair_up, ps, cfg);
  }
  return {state.a, state.b};
}

MtlOut mtl_forward(nc::Tape* tape, const Tensor& e_u, const Tensor& e_i, const Tensor& e_p,
                   const nc::ParameterStore& ps, const MgbrConfig& cfg) {
  const Tensor g0 = nc::concat(tape, {e_u, e_i, e_p}, 1);
  return mtl_forward_parts(tape, g0, e_u, e_i, e_p, ps, cfg);
}

}  // namespace mgbr
