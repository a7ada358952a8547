#include "reference_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mgbr/errors.hpp"
#include "mgbr/loss.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr::oracle {

namespace {

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// out[r,c] = sum_k a[r,k] b[k,c]
dvec matmul(const dvec& a, int m, int k, const dvec& b, int n) {
  dvec out(static_cast<std::size_t>(m) * n, 0.0);
  for (int r = 0; r < m; ++r) {
    for (int q = 0; q < k; ++q) {
      const double av = a[static_cast<std::size_t>(r) * k + q];
      if (av == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        out[static_cast<std::size_t>(r) * n + c] += av * b[static_cast<std::size_t>(q) * n + c];
      }
    }
  }
  return out;
}

// vector (1 x k) times matrix (k x n)
dvec vecmat(const dvec& v, const dvec& m, int k, int n) { return matmul(v, 1, k, m, n); }

dvec concat(const dvec& a, const dvec& b) {
  dvec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

dvec concat(const dvec& a, const dvec& b, const dvec& c) { return concat(concat(a, b), c); }

// dense D^{-1/2}(A+I)D^{-1/2} from an undirected edge list
dvec dense_normalized(int n, const std::vector<std::pair<int, int>>& edges) {
  dvec a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;
  for (auto [r, c] : edges) {
    a[static_cast<std::size_t>(r) * n + c] = 1.0;
    a[static_cast<std::size_t>(c) * n + r] = 1.0;
  }
  dvec deg(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) deg[static_cast<std::size_t>(r)] += a[static_cast<std::size_t>(r) * n + c];
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      a[static_cast<std::size_t>(r) * n + c] /=
          std::sqrt(deg[static_cast<std::size_t>(r)] * deg[static_cast<std::size_t>(c)]);
  return a;
}

}  // namespace

RefModel RefModel::from(const MgbrModel& model, const Dataset& ds) {
  RefModel ref;
  ref.cfg = model.cfg;
  ref.n_users = model.n_users;
  ref.n_items = model.n_items;
  for (const auto& [name, t] : model.params.entries()) {
    ref.params[name] = dvec(t.vals().begin(), t.vals().end());
    ref.shapes[name] = {t.rows(), t.cols()};
  }

  // rebuild the three views from scratch, in double
  const int nu = ds.n_users;
  std::set<std::pair<int, int>> ui, pi, up;
  for (const auto& g : ds.train) {
    ui.insert({g.initiator, nu + g.item});
    for (int p : g.participants) {
      pi.insert({p, nu + g.item});
      up.insert({std::min(g.initiator, p), std::max(g.initiator, p)});
    }
  }
  const int bip = ds.n_users + ds.n_items;
  ref.adj_ui = dense_normalized(bip, {ui.begin(), ui.end()});
  ref.adj_pi = dense_normalized(bip, {pi.begin(), pi.end()});
  ref.adj_up = dense_normalized(nu, {up.begin(), up.end()});
  return ref;
}

dvec& RefModel::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw LookupError("oracle: unknown parameter '" + name + "'");
  return it->second;
}

const dvec& RefModel::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw LookupError("oracle: unknown parameter '" + name + "'");
  return it->second;
}

dvec RefModel::gcn_view(const std::string& view, const dvec& adj, int nodes) const {
  const int d = cfg.embed_dim;
  dvec x = at("gcn." + view + ".x0");
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    dvec agg = matmul(adj, nodes, nodes, x, d);
    dvec nxt = matmul(agg, nodes, d, at("gcn." + view + ".w" + std::to_string(l)), d);
    for (auto& v : nxt) v = sigmoid(v);
    x = std::move(nxt);
  }
  return x;
}

RefModel::Tables RefModel::forward_tables() const {
  Tables t;
  const int bip = n_users + n_items;
  t.ui = gcn_view("ui", adj_ui, bip);
  t.pi = gcn_view("pi", adj_pi, bip);
  t.up = gcn_view("up", adj_up, n_users);

  const int d = cfg.embed_dim;
  t.mean_ep.assign(static_cast<std::size_t>(2 * d), 0.0);
  for (int u = 0; u < n_users; ++u) {
    const dvec e = embed_participant(t, u);
    for (int c = 0; c < 2 * d; ++c) t.mean_ep[static_cast<std::size_t>(c)] += e[static_cast<std::size_t>(c)];
  }
  for (auto& v : t.mean_ep) v /= n_users;
  return t;
}

dvec RefModel::embed_initiator(const Tables& t, int u) const {
  const int d = cfg.embed_dim;
  dvec out(static_cast<std::size_t>(2 * d));
  for (int c = 0; c < d; ++c) {
    out[static_cast<std::size_t>(c)] = t.ui[static_cast<std::size_t>(u) * d + c];
    out[static_cast<std::size_t>(d + c)] = t.up[static_cast<std::size_t>(u) * d + c];
  }
  return out;
}

dvec RefModel::embed_item(const Tables& t, int i) const {
  const int d = cfg.embed_dim;
  const int row = n_users + i;
  dvec out(static_cast<std::size_t>(2 * d));
  for (int c = 0; c < d; ++c) {
    out[static_cast<std::size_t>(c)] = t.ui[static_cast<std::size_t>(row) * d + c];
    out[static_cast<std::size_t>(d + c)] = t.pi[static_cast<std::size_t>(row) * d + c];
  }
  return out;
}

dvec RefModel::embed_participant(const Tables& t, int p) const {
  const int d = cfg.embed_dim;
  dvec out(static_cast<std::size_t>(2 * d));
  for (int c = 0; c < d; ++c) {
    out[static_cast<std::size_t>(c)] = t.pi[static_cast<std::size_t>(p) * d + c];
    out[static_cast<std::size_t>(d + c)] = t.up[static_cast<std::size_t>(p) * d + c];
  }
  return out;
}

std::pair<dvec, dvec> RefModel::mtl(const dvec& e_u, const dvec& e_i, const dvec& e_p) const {
  const int d = cfg.embed_dim;
  const int k = cfg.experts;
  const dvec g0 = concat(e_u, e_i, e_p);
  const dvec pair_ui = concat(e_u, e_i);
  const dvec pair_ip = concat(e_i, e_p);
  const dvec pair_up = concat(e_u, e_p);
  const int pair_w = 4 * d;

  dvec ga = g0, gb = g0, gs = g0;
  for (int l = 1; l <= cfg.mtl_layers; ++l) {
    const auto name = [&](const std::string& tail) { return "mtl.l" + std::to_string(l) + "." + tail; };
    const int prev = static_cast<int>(ga.size());
    const dvec in_a = cfg.shared_experts ? concat(ga, gs) : ga;
    const dvec in_b = cfg.shared_experts ? concat(gb, gs) : gb;
    const dvec in_s = concat(ga, gs, gb);
    const int in_tw = static_cast<int>(in_a.size());
    const int in_sw = 3 * prev;

    std::vector<dvec> ea(static_cast<std::size_t>(k)), eb(static_cast<std::size_t>(k)),
        es(static_cast<std::size_t>(k));
    for (int e = 0; e < k; ++e) {
      ea[static_cast<std::size_t>(e)] = vecmat(in_a, at(name("expert_a." + std::to_string(e))), in_tw, d);
      eb[static_cast<std::size_t>(e)] = vecmat(in_b, at(name("expert_b." + std::to_string(e))), in_tw, d);
      if (cfg.shared_experts) {
        es[static_cast<std::size_t>(e)] = vecmat(in_s, at(name("expert_s." + std::to_string(e))), in_sw, d);
      }
    }
    auto mix = [&](const dvec& coeff, const std::vector<const dvec*>& experts) {
      dvec out(static_cast<std::size_t>(d), 0.0);
      for (std::size_t j = 0; j < experts.size(); ++j) {
        for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(c)] += coeff[j] * (*experts[j])[static_cast<std::size_t>(c)];
      }
      return out;
    };
    auto expert_ptrs = [&](const std::vector<dvec>& v) {
      std::vector<const dvec*> ptrs;
      for (const auto& e : v) ptrs.push_back(&e);
      return ptrs;
    };

    // gate A
    dvec next_a;
    {
      std::vector<const dvec*> pool = expert_ptrs(ea);
      if (cfg.shared_experts) {
        for (const auto& e : es) pool.push_back(&e);
      }
      const int mix_w = static_cast<int>(pool.size());
      next_a = mix(vecmat(in_a, at(name("gate_a")), in_tw, mix_w), pool);
      if (cfg.adjusted_gates) {
        dvec adj = mix(vecmat(pair_ui, at(name("adj_a_ui")), pair_w, k), expert_ptrs(ea));
        if (cfg.shared_experts) {
          const dvec t2 = mix(vecmat(pair_ip, at(name("adj_a_ip")), pair_w, k), expert_ptrs(es));
          const dvec t3 = mix(vecmat(pair_up, at(name("adj_a_up")), pair_w, k), expert_ptrs(es));
          for (int c = 0; c < d; ++c) adj[static_cast<std::size_t>(c)] += t2[static_cast<std::size_t>(c)] + t3[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < d; ++c) next_a[static_cast<std::size_t>(c)] += cfg.gate_alpha_a * adj[static_cast<std::size_t>(c)];
      }
    }

    // gate B
    dvec next_b;
    {
      std::vector<const dvec*> pool = expert_ptrs(eb);
      if (cfg.shared_experts) {
        for (const auto& e : es) pool.push_back(&e);
      }
      const int mix_w = static_cast<int>(pool.size());
      next_b = mix(vecmat(in_b, at(name("gate_b")), in_tw, mix_w), pool);
      if (cfg.adjusted_gates) {
        dvec adj = mix(vecmat(pair_ip, at(name("adj_b_ip")), pair_w, k), expert_ptrs(eb));
        const dvec t2 = mix(vecmat(pair_up, at(name("adj_b_up")), pair_w, k), expert_ptrs(eb));
        for (int c = 0; c < d; ++c) adj[static_cast<std::size_t>(c)] += t2[static_cast<std::size_t>(c)];
        if (cfg.shared_experts) {
          const dvec t3 = mix(vecmat(pair_ui, at(name("adj_b_ui")), pair_w, k), expert_ptrs(es));
          for (int c = 0; c < d; ++c) adj[static_cast<std::size_t>(c)] += t3[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < d; ++c) next_b[static_cast<std::size_t>(c)] += cfg.gate_alpha_b * adj[static_cast<std::size_t>(c)];
      }
    }

    // gate S
    dvec next_s;
    if (cfg.shared_experts) {
      std::vector<const dvec*> pool = expert_ptrs(ea);
      for (const auto& e : es) pool.push_back(&e);
      for (const auto& e : eb) pool.push_back(&e);
      next_s = mix(vecmat(in_s, at(name("gate_s")), in_sw, 3 * k), pool);
    }

    ga = std::move(next_a);
    gb = std::move(next_b);
    gs = std::move(next_s);
  }
  return {ga, gb};
}

double RefModel::head_logit(const std::string& base, const dvec& gate) const {
  const int d = cfg.embed_dim;
  dvec h = vecmat(gate, at(base + ".w0"), d, d);
  {
    const dvec& b = at(base + ".b0");
    for (int c = 0; c < d; ++c) h[static_cast<std::size_t>(c)] = std::max(0.0, h[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)]);
  }
  dvec h2 = vecmat(h, at(base + ".w1"), d, d / 2);
  {
    const dvec& b = at(base + ".b1");
    for (int c = 0; c < d / 2; ++c) h2[static_cast<std::size_t>(c)] = std::max(0.0, h2[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)]);
  }
  const dvec z = vecmat(h2, at(base + ".w2"), d / 2, 1);
  return z[0] + at(base + ".b2")[0];
}

namespace {

dvec mean_for_user(const RefModel& ref, const RefModel::Tables& t, int u) {
  if (!ref.cfg.exclude_self_from_mean || ref.n_users == 1) return t.mean_ep;
  dvec out = t.mean_ep;
  const dvec self = ref.embed_participant(t, u);
  const double n = ref.n_users;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (out[c] * n - self[c]) / (n - 1.0);
  return out;
}

}  // namespace

double RefModel::score_item(const Tables& t, int u, int i) const {
  const auto gates = mtl(embed_initiator(t, u), embed_item(t, i), mean_for_user(*this, t, u));
  return sigmoid(head_logit("head_a", gates.first));
}

double RefModel::score_participant(const Tables& t, int u, int i, int p) const {
  const auto gates = mtl(embed_initiator(t, u), embed_item(t, i), embed_participant(t, p));
  return sigmoid(head_logit("head_b", gates.second));
}

double RefModel::score_triple(const Tables& t, int u, int i, int p) const {
  const auto gates = mtl(embed_initiator(t, u), embed_item(t, i), embed_participant(t, p));
  return sigmoid(head_logit("head_a", gates.first));
}

double RefModel::loss_component_a(const Tables& t, const TrainingBatch& batch) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pair : batch.task_a) {
    const double pos = score_item(t, pair.u, pair.i);
    count += 1 + pair.neg_items.size();
    for (int neg : pair.neg_items) sum += softplus(score_item(t, pair.u, neg) - pos);
  }
  return sum / static_cast<double>(count);
}

double RefModel::loss_component_b(const Tables& t, const TrainingBatch& batch) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& trip : batch.task_b) {
    const double pos = score_participant(t, trip.u, trip.i, trip.p);
    count += 1 + trip.neg_users.size();
    for (int neg : trip.neg_users) {
      sum += softplus(score_participant(t, trip.u, trip.i, neg) - pos);
    }
  }
  return sum / static_cast<double>(count);
}

double RefModel::aux_component_a(const Tables& t, const TrainingBatch& batch) const {
  const int size = cfg.aux_negatives;
  double sum = 0.0;
  for (const auto& trip : batch.task_b) {
    std::vector<double> logits;
    logits.reserve(static_cast<std::size_t>(2 * size));
    for (int item : trip.aux_items) {
      const auto gates = mtl(embed_initiator(t, trip.u), embed_item(t, item), embed_participant(t, trip.p));
      logits.push_back(head_logit("head_a", gates.first));
    }
    for (int user : trip.aux_users) {
      const auto gates = mtl(embed_initiator(t, trip.u), embed_item(t, trip.i), embed_participant(t, user));
      logits.push_back(head_logit("head_a", gates.first));
    }
    if (cfg.softmax_listnet) {
      double mx = -1e300;
      for (double z : logits) mx = std::max(mx, z);
      double z = 0.0;
      for (double v : logits) z += std::exp(v - mx);
      for (std::size_t j = static_cast<std::size_t>(size); j < logits.size(); ++j) {
        sum += (logits[j] - mx) - std::log(z);
      }
    } else {
      for (std::size_t j = static_cast<std::size_t>(size); j < logits.size(); ++j) {
        sum += -softplus(-logits[j]);  // log sigmoid
      }
    }
  }
  return -sum / static_cast<double>(batch.task_b.size() * 2 * static_cast<std::size_t>(size));
}

double RefModel::aux_component_b(const Tables& t, const TrainingBatch& batch) const {
  const int size = cfg.aux_negatives;
  double sum = 0.0;
  for (const auto& trip : batch.task_b) {
    const double pos = score_participant(t, trip.u, trip.i, trip.p);
    for (int item : trip.aux_items) {
      sum += softplus(score_participant(t, trip.u, item, trip.p) - pos);
    }
  }
  return sum / static_cast<double>(batch.task_b.size() * static_cast<std::size_t>(size));
}

double RefModel::total_loss(const TrainingBatch& batch) const {
  const Tables t = forward_tables();
  double total = loss_component_a(t, batch) + cfg.loss_b_weight * loss_component_b(t, batch);
  if (cfg.aux_losses) {
    total += cfg.aux_a_weight * aux_component_a(t, batch);
    total += cfg.aux_b_weight * aux_component_b(t, batch);
  }
  return total;
}

GradCheckResult gradcheck_total_loss(MgbrModel& model, const Dataset& ds,
                                     const TrainingBatch& batch, double h, double rel_floor,
                                     std::size_t stride) {
  // production gradients
  nc::Tape tape;
  model.params.watch_all(tape);
  auto fs = model_forward_base(&tape, model);
  auto losses = compute_batch_losses(&tape, model, fs, batch);
  tape.backward(losses.total);

  RefModel ref = RefModel::from(model, ds);

  struct Entry {
    std::string name;
    std::size_t idx;
    double fd, tape_grad;
  };
  std::vector<Entry> entries;
  for (const auto& [name, t] : model.params.entries()) {
    const auto& grads = tape.grad(t);
    dvec& target = ref.at(name);
    for (std::size_t i = 0; i < target.size(); i += stride) {
      const double keep = target[i];
      target[i] = keep + h;
      const double hi = ref.total_loss(batch);
      target[i] = keep - h;
      const double lo = ref.total_loss(batch);
      target[i] = keep;
      entries.push_back({name, i, (hi - lo) / (2.0 * h), static_cast<double>(grads[i])});
    }
  }

  double g_max = 0.0;
  for (const auto& e : entries) g_max = std::max(g_max, std::fabs(e.fd));
  const double floor = rel_floor * std::max(g_max, 1e-12);

  GradCheckResult res;
  res.checked = entries.size();
  for (const auto& e : entries) {
    const double denom = std::max({std::fabs(e.fd), std::fabs(e.tape_grad), floor});
    const double err = std::fabs(e.fd - e.tape_grad) / denom;
    if (err > res.max_rel_err) {
      res.max_rel_err = err;
      res.worst_param = e.name;
      res.worst_index = e.idx;
    }
  }
  return res;
}

}  // namespace mgbr::oracle
