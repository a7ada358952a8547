#include "mgbr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mgbr/errors.hpp"

namespace mgbr {

std::vector<std::pair<int, int>> view_edges(ViewKind kind, const std::vector<DealGroup>& groups,
                                            int n_users) {
  std::vector<std::pair<int, int>> edges;
  auto check_user = [&](int u) {
    if (u < 0 || u >= n_users) {
      throw StructuralError("user id " + std::to_string(u) + " out of range");
    }
  };
  for (const auto& g : groups) {
    check_user(g.initiator);
    switch (kind) {
      case ViewKind::UI:
        edges.emplace_back(g.initiator, n_users + g.item);
        break;
      case ViewKind::PI:
        for (int p : g.participants) {
          check_user(p);
          edges.emplace_back(p, n_users + g.item);
        }
        break;
      case ViewKind::UP:
        for (int p : g.participants) {
          check_user(p);
          edges.emplace_back(g.initiator, p);
        }
        break;
    }
  }
  // undirected canonical form, deduplicated
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

nc::SparseMatrix normalize_adjacency(int node_count,
                                     const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> degree(static_cast<std::size_t>(node_count), 1);  // self-loop
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= node_count || b < 0 || b >= node_count) {
      throw StructuralError("edge endpoint out of range");
    }
    if (a == b) throw StructuralError("self-loop in raw adjacency");
    degree[static_cast<std::size_t>(a)]++;
    degree[static_cast<std::size_t>(b)]++;
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) {
    inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(degree[static_cast<std::size_t>(i)]));
  }
  std::vector<std::tuple<int, int, float>> entries;
  entries.reserve(2 * edges.size() + static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) {
    entries.emplace_back(i, i,
                         static_cast<float>(inv_sqrt[static_cast<std::size_t>(i)] *
                                            inv_sqrt[static_cast<std::size_t>(i)]));
  }
  for (const auto& [a, b] : edges) {
    const float v = static_cast<float>(inv_sqrt[static_cast<std::size_t>(a)] *
                                       inv_sqrt[static_cast<std::size_t>(b)]);
    entries.emplace_back(a, b, v);
    entries.emplace_back(b, a, v);
  }
  return nc::SparseMatrix::from_coo(node_count, node_count, std::move(entries));
}

ViewSet build_views(const std::vector<DealGroup>& train_groups, int n_users, int n_items) {
  for (const auto& g : train_groups) {
    if (g.item < 0 || g.item >= n_items) {
      throw StructuralError("item id " + std::to_string(g.item) + " out of range");
    }
  }
  const int bipartite = n_users + n_items;
  ViewSet vs;
  vs.ui = {ViewKind::UI, bipartite,
           normalize_adjacency(bipartite, view_edges(ViewKind::UI, train_groups, n_users))};
  vs.pi = {ViewKind::PI, bipartite,
           normalize_adjacency(bipartite, view_edges(ViewKind::PI, train_groups, n_users))};
  vs.up = {ViewKind::UP, n_users,
           normalize_adjacency(n_users, view_edges(ViewKind::UP, train_groups, n_users))};
  return vs;
}

void export_edges(const std::string& path, ViewKind kind, const std::vector<DealGroup>& groups,
                  int n_users) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list '" + path + "'");
  for (const auto& [a, b] : view_edges(kind, groups, n_users)) {
    out << a << '\t' << b << '\n';
  }
}

}  // namespace mgbr
