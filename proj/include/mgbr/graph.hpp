#pragma once

#include <string>
#include <vector>

#include "mgbr/data.hpp"
#include "mgbr/sparse.hpp"

namespace mgbr {

enum class ViewKind { UI, PI, UP };

/// One interaction view with its normalized adjacency. UI and PI are
/// bipartite over users+items (item node index = n_users + item id); UP is
/// user-only. Immutable once built.
struct ViewGraph {
  ViewKind kind = ViewKind::UI;
  int node_count = 0;
  nc::SparseMatrix normalized;  // D^{-1/2} (A + I) D^{-1/2}

  const char* name() const {
    switch (kind) {
      case ViewKind::UI: return "ui";
      case ViewKind::PI: return "pi";
      default: return "up";
    }
  }
};

struct ViewSet {
  ViewGraph ui, pi, up;
};

/// Raw 0/1 edges of one view (both directions, no self-loops, deduplicated).
std::vector<std::pair<int, int>> view_edges(ViewKind kind, const std::vector<DealGroup>& groups,
                                            int n_users);

/// Â = D^{-1/2} (A + I) D^{-1/2} over an undirected 0/1 edge list.
nc::SparseMatrix normalize_adjacency(int node_count,
                                     const std::vector<std::pair<int, int>>& edges);

/// The three training-split views: initiator-item, participant-item,
/// initiator-participant (participant-participant edges are never added).
ViewSet build_views(const std::vector<DealGroup>& train_groups, int n_users, int n_items);

/// Debug dump: one `a<TAB>b` line per undirected edge.
void export_edges(const std::string& path, ViewKind kind, const std::vector<DealGroup>& groups,
                  int n_users);

}  // namespace mgbr
