// mgbr: group-buying recommendation pipeline driver.
//
// Subcommands cover the whole workflow: synthesize or prepare a corpus,
// train, evaluate, export embeddings, and run the numeric self-check.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "mgbr/checkpoint.hpp"
#include "mgbr/config.hpp"
#include "mgbr/data.hpp"
#include "mgbr/errors.hpp"
#include "mgbr/eval.hpp"
#include "mgbr/model.hpp"
#include "mgbr/train.hpp"
#include "oracle/reference_model.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int cmd_prepare(const std::string& input, int min_interactions, std::uint64_t seed,
                const std::string& out_dir) {
  auto raw = mgbr::parse_groups(input);
  auto core = mgbr::filter_and_reindex(raw, min_interactions);

  mgbr::Dataset ds;
  ds.n_users = core.n_users;
  ds.n_items = core.n_items;
  mgbr::split(core.groups, {}, seed, ds.train, ds.val, ds.test);
  mgbr::save_dataset(out_dir, ds, {core.n_users, core.n_items, seed, min_interactions});

  std::printf("{\"users\": %d, \"items\": %d, \"groups\": %zu, "
              "\"train\": %zu, \"val\": %zu, \"test\": %zu}\n",
              core.n_users, core.n_items, core.groups.size(), ds.train.size(), ds.val.size(),
              ds.test.size());
  return 0;
}

int cmd_synth(int users, int items, int groups, int latent_dim, std::uint64_t seed,
              const std::string& out) {
  auto generated = mgbr::generate_synthetic(users, items, groups, latent_dim, seed);
  mgbr::write_groups(out, generated);
  std::printf("{\"groups\": %zu, \"path\": \"%s\"}\n", generated.size(), out.c_str());
  return 0;
}

mgbr::MgbrConfig load_config(const std::optional<std::string>& path) {
  mgbr::MgbrConfig cfg;
  if (path) cfg.apply_file(*path);
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& data_dir, const std::optional<std::string>& config_path,
              const std::string& out_dir, bool verbose) {
  auto cfg = load_config(config_path);
  auto ds = mgbr::load_dataset(data_dir);
  auto model = mgbr::MgbrModel::build(ds, cfg);

  std::filesystem::create_directories(out_dir);
  mgbr::TrainOptions opts;
  opts.checkpoint_path = out_dir + "/checkpoint.bin";
  opts.log_csv_path = out_dir + "/train_log.csv";
  opts.verbose = verbose;
  auto result = mgbr::train(model, ds, opts);

  std::printf("{\"epochs\": %zu, \"best_epoch\": %d, \"best_val_mrr\": %.6f, "
              "\"stopped_early\": %s}\n",
              result.log.size(), result.best_epoch, result.best_val,
              result.stopped_early ? "true" : "false");
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, int neg_ratio,
             std::uint64_t seed, const std::optional<std::string>& ranks_csv,
             const std::optional<std::string>& report_path) {
  auto ckpt = mgbr::load_checkpoint(ckpt_path);
  auto ds = mgbr::load_dataset(data_dir);
  auto model = mgbr::MgbrModel::assemble(ds, ckpt.cfg, std::move(ckpt.params));

  auto lists = mgbr::build_candidates(ds.test, ds, neg_ratio, seed);
  auto report = mgbr::evaluate_model(model, lists, neg_ratio, seed, ranks_csv);
  const auto json = report.to_json();
  if (report_path) {
    std::ofstream out(*report_path);
    if (!out) throw mgbr::DataError("cannot write report '" + *report_path + "'");
    out << json;
  }
  std::fputs(json.c_str(), stdout);
  return 0;
}

int cmd_export(const std::string& ckpt_path, const std::string& data_dir,
               const std::string& out) {
  auto ckpt = mgbr::load_checkpoint(ckpt_path);
  auto ds = mgbr::load_dataset(data_dir);
  auto model = mgbr::MgbrModel::assemble(ds, ckpt.cfg, std::move(ckpt.params));
  mgbr::export_embeddings(out, model);
  std::printf("{\"rows\": %d, \"path\": \"%s\"}\n", 2 * model.n_users + model.n_items,
              out.c_str());
  return 0;
}

int cmd_gradcheck(const std::optional<std::string>& config_path, int users, int items, int groups,
                  std::uint64_t seed) {
  mgbr::MgbrConfig cfg;
  cfg.embed_dim = 4;
  cfg.gcn_layers = 1;
  cfg.experts = 2;
  cfg.mtl_layers = 2;
  cfg.aux_negatives = 3;
  if (config_path) cfg.apply_file(*config_path);
  cfg.validate();

  mgbr::Dataset ds;
  ds.n_users = users;
  ds.n_items = items;
  auto all = mgbr::generate_synthetic(users, items, groups, 4, seed);
  for (auto& g : all) {
    if (g.participants.size() > 2) g.participants.resize(2);
  }
  ds.train = std::move(all);

  auto model = mgbr::MgbrModel::build(ds, cfg);
  auto ctx = mgbr::SamplerContext::from(ds);
  std::vector<const mgbr::DealGroup*> gptrs;
  for (const auto& g : ds.train) gptrs.push_back(&g);
  mgbr::Rng rng(seed + 1);
  auto batch = mgbr::sample_batch(gptrs, ds, ctx, cfg, rng, 3);

  auto res = mgbr::oracle::gradcheck_total_loss(model, ds, batch);
  std::printf("checked %zu coordinates, max relative error %.3e (worst: %s[%zu])\n", res.checked,
              res.max_rel_err, res.worst_param.c_str(), res.worst_index);
  if (res.max_rel_err >= 1e-3) {
    std::printf("FAIL: gradient mismatch above 1e-3\n");
    return kExitNumeric;
  }
  std::printf("PASS\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MGBR group-buying recommendation pipeline"};
  app.require_subcommand(1);

  // prepare
  std::string p_input, p_out;
  int p_min = 5;
  std::uint64_t p_seed = 7;
  auto* prepare = app.add_subcommand("prepare", "Filter, reindex and split a groups file");
  prepare->add_option("--input", p_input, "raw groups file")->required();
  prepare->add_option("--min-interactions", p_min, "minimum purchase records per user");
  prepare->add_option("--seed", p_seed, "shuffle seed for the 7:3:1 split");
  prepare->add_option("--out", p_out, "output dataset directory")->required();

  // synth
  int s_users = 200, s_items = 60, s_groups = 1500, s_latent = 8;
  std::uint64_t s_seed = 7;
  std::string s_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic group-buying corpus");
  synth->add_option("--users", s_users, "user count");
  synth->add_option("--items", s_items, "item count");
  synth->add_option("--groups", s_groups, "deal-group count");
  synth->add_option("--latent-dim", s_latent, "latent preference dimension");
  synth->add_option("--seed", s_seed, "generator seed");
  synth->add_option("--out", s_out, "output groups file")->required();

  // train
  std::string t_data, t_out;
  std::optional<std::string> t_config;
  bool t_verbose = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a prepared dataset");
  train_cmd->add_option("--data", t_data, "dataset directory from `prepare`")->required();
  train_cmd->add_option("--config", t_config, "key=value config file");
  train_cmd->add_option("--out", t_out, "output directory (checkpoint + log)")->required();
  train_cmd->add_flag("--verbose", t_verbose, "per-epoch progress on stderr");

  // eval
  std::string e_ckpt, e_data;
  int e_neg = 9;
  std::uint64_t e_seed = 17;
  std::optional<std::string> e_ranks, e_report;
  auto* eval_cmd = app.add_subcommand("eval", "Rank held-out candidates and report MRR/NDCG");
  eval_cmd->add_option("--checkpoint", e_ckpt, "trained checkpoint")->required();
  eval_cmd->add_option("--data", e_data, "dataset directory")->required();
  eval_cmd->add_option("--neg-ratio", e_neg, "negatives per positive (9 or 99)")
      ->check(CLI::IsMember({9, 99}));
  eval_cmd->add_option("--seed", e_seed, "candidate sampling seed");
  eval_cmd->add_option("--ranks-csv", e_ranks, "per-instance ranks output");
  eval_cmd->add_option("--report", e_report, "write the JSON report here too");

  // export-embeddings
  std::string x_ckpt, x_data, x_out;
  auto* export_cmd = app.add_subcommand("export-embeddings", "Dump object embeddings as CSV");
  export_cmd->add_option("--checkpoint", x_ckpt)->required();
  export_cmd->add_option("--data", x_data)->required();
  export_cmd->add_option("--out", x_out)->required();

  // gradcheck
  std::optional<std::string> g_config;
  int g_users = 8, g_items = 6, g_groups = 10;
  std::uint64_t g_seed = 101;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference audit of every gradient");
  grad_cmd->add_option("--config", g_config, "config overrides for the tiny model");
  grad_cmd->add_option("--users", g_users);
  grad_cmd->add_option("--items", g_items);
  grad_cmd->add_option("--groups", g_groups);
  grad_cmd->add_option("--seed", g_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(p_input, p_min, p_seed, p_out);
    if (synth->parsed()) return cmd_synth(s_users, s_items, s_groups, s_latent, s_seed, s_out);
    if (train_cmd->parsed()) return cmd_train(t_data, t_config, t_out, t_verbose);
    if (eval_cmd->parsed()) return cmd_eval(e_ckpt, e_data, e_neg, e_seed, e_ranks, e_report);
    if (export_cmd->parsed()) return cmd_export(x_ckpt, x_data, x_out);
    if (grad_cmd->parsed()) return cmd_gradcheck(g_config, g_users, g_items, g_groups, g_seed);
  } catch (const mgbr::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const mgbr::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const mgbr::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const mgbr::MgbrError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
