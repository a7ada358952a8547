#include "mgbr/model.hpp"

#include <cmath>
#include <fstream>

#include "mgbr/errors.hpp"

namespace mgbr {

using nc::Tensor;

namespace {

void init_head_params(nc::ParameterStore& ps, const MgbrConfig& cfg, Rng& rng) {
  const int d = cfg.embed_dim;
  // hidden biases start slightly positive: keeps units live and, for
  // gradient checks, off the ReLU kink
  const float bias0 = 0.01f;
  for (const char* head : {"head_a", "head_b"}) {
    const std::string base = head;
    const float s0 = 1.0f / std::sqrt(static_cast<float>(d));
    ps.add_gaussian(base + ".w0", {d, d}, s0, rng);
    ps.add(base + ".b0", nc::Tensor({d}, bias0));
    ps.add_gaussian(base + ".w1", {d, d / 2}, s0, rng);
    ps.add(base + ".b1", nc::Tensor({d / 2}, bias0));
    ps.add_gaussian(base + ".w2", {d / 2, 1}, 1.0f / std::sqrt(static_cast<float>(d / 2)), rng);
    ps.add_zeros(base + ".b2", {1});
  }
}

/// [d -> d -> d/2 -> 1] with ReLU on the hidden layers; sigmoid is applied
/// by the caller.
Tensor mlp_head(nc::Tape* tape, const Tensor& gate, const nc::ParameterStore& ps,
                const std::string& base) {
  Tensor h = nc::relu(
      tape, nc::add_rowvec(tape, nc::matmul(tape, gate, ps.at(base + ".w0")), ps.at(base + ".b0")));
  h = nc::relu(tape,
               nc::add_rowvec(tape, nc::matmul(tape, h, ps.at(base + ".w1")), ps.at(base + ".b1")));
  return nc::add_rowvec(tape, nc::matmul(tape, h, ps.at(base + ".w2")), ps.at(base + ".b2"));
}

}  // namespace

MgbrModel MgbrModel::build(const Dataset& ds, const MgbrConfig& cfg) {
  cfg.validate();
  MgbrModel m;
  m.cfg = cfg;
  m.n_users = ds.n_users;
  m.n_items = ds.n_items;
  m.views = build_views(ds.train, ds.n_users, ds.n_items);
  Rng rng(cfg.init_seed);
  init_gcn_params(m.params, m.views, cfg, rng);
  init_mtl_params(m.params, cfg, rng);
  init_head_params(m.params, cfg, rng);
  return m;
}

MgbrModel MgbrModel::assemble(const Dataset& ds, const MgbrConfig& cfg, nc::ParameterStore params) {
  MgbrModel fresh = build(ds, cfg);
  if (params.size() != fresh.params.size()) {
    throw CompatibilityError("checkpoint has " + std::to_string(params.size()) +
                             " tensors, dataset/config requires " +
                             std::to_string(fresh.params.size()));
  }
  for (const auto& [name, t] : fresh.params.entries()) {
    if (!params.has(name) || params.at(name).shape() != t.shape()) {
      throw CompatibilityError("checkpoint tensor '" + name +
                               "' missing or shaped differently from the dataset vocabulary");
    }
  }
  MgbrModel m;
  m.cfg = cfg;
  m.n_users = ds.n_users;
  m.n_items = ds.n_items;
  m.views = std::move(fresh.views);
  m.params = std::move(params);
  return m;
}

std::vector<float> MgbrModel::snapshot() const {
  std::vector<float> snap;
  snap.reserve(params.total_elements());
  for (const auto& [name, t] : params.entries()) {
    snap.insert(snap.end(), t.vals().begin(), t.vals().end());
  }
  return snap;
}

void MgbrModel::restore(const std::vector<float>& snap) {
  std::size_t off = 0;
  for (auto& [name, t] : params.entries()) {
    std::copy(snap.begin() + static_cast<std::ptrdiff_t>(off),
              snap.begin() + static_cast<std::ptrdiff_t>(off + t.numel()), t.vals().begin());
    off += t.numel();
  }
  if (off != snap.size()) throw ContractError("snapshot size does not match parameter store");
}

ForwardState model_forward_base(nc::Tape* tape, MgbrModel& model) {
  ForwardState fs;
  fs.gcn = gcn_forward_all(tape, model.views, model.params, model.cfg);
  fs.ep_table = participant_table(tape, fs.gcn, model.n_users);
  fs.mean_ep = nc::mean_rows(tape, fs.ep_table);
  return fs;
}

Tensor score_block(nc::Tape* tape, MgbrModel& model, const ForwardState& fs,
                   const std::vector<int>& users, const std::vector<int>& items,
                   const std::vector<int>& participants, char head) {
  if (users.size() != items.size() || users.size() != participants.size() || users.empty()) {
    throw ContractError("score_block: id lists must be non-empty and equally sized");
  }
  const int n = static_cast<int>(users.size());
  const bool mean_first = participants[0] < 0;
  for (int p : participants) {
    if ((p < 0) != mean_first) {
      throw ContractError("score_block: cannot mix mean-participant and explicit rows");
    }
  }

  Tensor e_u = initiator_rows(tape, fs.gcn, users, model.n_users);
  Tensor e_i = item_rows(tape, fs.gcn, items, model.n_users, model.n_items);
  Tensor e_p;
  if (!mean_first) {
    e_p = participant_rows(tape, fs.gcn, participants, model.n_users);
  } else if (!model.cfg.exclude_self_from_mean || model.n_users == 1) {
    e_p = nc::gather_rows(tape, fs.mean_ep, std::vector<int>(static_cast<std::size_t>(n), 0));
  } else {
    // leave-one-out mean: U/(U-1) * mean - e_p(u)/(U-1)
    const float u_count = static_cast<float>(model.n_users);
    e_p = nc::add_rowvec(tape,
                         nc::scale(tape, nc::gather_rows(tape, fs.ep_table, users),
                                   -1.0f / (u_count - 1.0f)),
                         nc::scale(tape, fs.mean_ep, u_count / (u_count - 1.0f)));
  }

  auto gates = mtl_forward(tape, e_u, e_i, e_p, model.params, model.cfg);
  if (head == 'A') return mlp_head(tape, gates.gate_a, model.params, "head_a");
  if (head == 'B') return mlp_head(tape, gates.gate_b, model.params, "head_b");
  throw ContractError("score_block: head must be 'A' or 'B'");
}

namespace {

float sigmoid_scalar(float z) {
  return z >= 0.0f ? 1.0f / (1.0f + std::exp(-z)) : std::exp(z) / (1.0f + std::exp(z));
}

}  // namespace

float score_item(MgbrModel& model, const ForwardState& fs, int u, int i) {
  return sigmoid_scalar(score_block(nullptr, model, fs, {u}, {i}, {-1}, 'A').item());
}

float score_participant(MgbrModel& model, const ForwardState& fs, int u, int i, int p) {
  return sigmoid_scalar(score_block(nullptr, model, fs, {u}, {i}, {p}, 'B').item());
}

float score_triple_for_aux(MgbrModel& model, const ForwardState& fs, int u, int i, int p) {
  return sigmoid_scalar(score_block(nullptr, model, fs, {u}, {i}, {p}, 'A').item());
}

void export_embeddings(const std::string& path, MgbrModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embeddings file '" + path + "'");
  auto fs = model_forward_base(nullptr, model);
  const int width = 2 * model.cfg.embed_dim;

  out << "object_type,id";
  for (int c = 0; c < width; ++c) out << ",v" << c;
  out << '\n';

  auto dump = [&](const char* role, int id, const Tensor& row) {
    out << role << ',' << id;
    for (int c = 0; c < width; ++c) out << ',' << row.at(0, c);
    out << '\n';
  };
  for (int u = 0; u < model.n_users; ++u) {
    dump("initiator", u, initiator_rows(nullptr, fs.gcn, {u}, model.n_users));
  }
  for (int u = 0; u < model.n_users; ++u) {
    dump("participant", u, participant_rows(nullptr, fs.gcn, {u}, model.n_users));
  }
  for (int i = 0; i < model.n_items; ++i) {
    dump("item", i, item_rows(nullptr, fs.gcn, {i}, model.n_users, model.n_items));
  }
}

}  // namespace mgbr
