#pragma once

#include <string>
#include <vector>

#include "mgbr/config.hpp"
#include "mgbr/data.hpp"
#include "mgbr/gcn.hpp"
#include "mgbr/graph.hpp"
#include "mgbr/mtl.hpp"
#include "mgbr/params.hpp"

namespace mgbr {

/// The full model: view graphs from the training split plus every trainable
/// tensor (GCN tables/weights, experts, gates, prediction heads).
struct MgbrModel {
  MgbrConfig cfg;
  int n_users = 0;
  int n_items = 0;
  ViewSet views;
  nc::ParameterStore params;

  static MgbrModel build(const Dataset& ds, const MgbrConfig& cfg);

  /// Rebuild graphs for a loaded parameter set; parameter shapes must match
  /// the dataset's vocabulary.
  static MgbrModel assemble(const Dataset& ds, const MgbrConfig& cfg, nc::ParameterStore params);

  std::vector<float> snapshot() const;
  void restore(const std::vector<float>& snap);
};

/// Per-step forward products shared by every scored row: final GCN tables
/// and the mean participant embedding (recomputed each forward).
struct ForwardState {
  GcnOutputs gcn;
  nc::Tensor ep_table;  // [n_users, 2d]
  nc::Tensor mean_ep;   // [1, 2d]
};

ForwardState model_forward_base(nc::Tape* tape, MgbrModel& model);

/// Pre-sigmoid logits [n,1] for one homogeneous block of rows. participant
/// id -1 selects the mean participant embedding (task-A scoring); a block
/// mixes either all mean rows or none.
nc::Tensor score_block(nc::Tape* tape, MgbrModel& model, const ForwardState& fs,
                       const std::vector<int>& users, const std::vector<int>& items,
                       const std::vector<int>& participants, char head);

/// s(i|u): the task-A head over the mean participant embedding.
float score_item(MgbrModel& model, const ForwardState& fs, int u, int i);
/// s(p|u,i): the task-B head over the candidate participant's embedding.
float score_participant(MgbrModel& model, const ForwardState& fs, int u, int i, int p);
/// s(u,i,p): the task-A head with the candidate participant substituted for
/// the mean (drives the auxiliary losses).
float score_triple_for_aux(MgbrModel& model, const ForwardState& fs, int u, int i, int p);

/// CSV export `object_type,id,v0..v_{2d-1}` with one row per (role, id).
void export_embeddings(const std::string& path, MgbrModel& model);

}  // namespace mgbr
