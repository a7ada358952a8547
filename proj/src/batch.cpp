#include "mgbr/batch.hpp"

namespace mgbr {

TrainingBatch sample_batch(const std::vector<const DealGroup*>& groups, const Dataset& ds,
                           const SamplerContext& ctx, const MgbrConfig& cfg, Rng& rng,
                           int neg_per_pos) {
  TrainingBatch batch;
  batch.neg_per_pos = neg_per_pos;
  batch.task_a.reserve(groups.size());
  for (const DealGroup* g : groups) {
    TrainPair pair;
    pair.u = g->initiator;
    pair.i = g->item;
    pair.neg_items = sample_negatives_a(g->initiator, ds, ctx.initiated, neg_per_pos, rng);
    batch.task_a.push_back(std::move(pair));

    for (int p : g->participants) {
      TrainTriple t;
      t.u = g->initiator;
      t.i = g->item;
      t.p = p;
      t.neg_users = sample_negatives_b(g->initiator, g->participants, ds.n_users, neg_per_pos, rng);
      if (cfg.aux_losses) {
        auto aux = sample_aux_negatives(g->initiator, g->item, ds, ctx.pair_participants,
                                        cfg.aux_negatives, rng);
        t.aux_items = std::move(aux.replaced_items);
        t.aux_users = std::move(aux.replaced_users);
      }
      batch.task_b.push_back(std::move(t));
    }
  }
  return batch;
}

}  // namespace mgbr
