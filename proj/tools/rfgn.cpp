// Command-line surface: train, eval, verify, ablate.

#include "rfgn/eval.hpp"
#include "rfgn/random_graph.hpp"
#include "rfgn/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
  rfgn::TrainConfig train;
  std::string train_path, valid_path, test_path;
  std::string features_path;
  bool add_reciprocals = true;
  bool eval_reciprocals = true;
  rfgn::Protocol protocol;
  std::string out_dir = "run";
  // Inductive pair (optional): the _ind graph plus its query splits.
  std::string ind_graph_path, ind_valid_path, ind_test_path, ind_features_path;
  std::uint64_t inference_layers = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rfgn::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_run_config(const std::string& path) {
  const std::string text = slurp(path);
  RunConfig rc;
  rc.train = rfgn::train_config_from_json(text);
  json j = json::parse(text);
  auto get_string = [&](const char* key, std::string& out) {
    if (j.contains(key)) out = j[key].get<std::string>();
  };
  get_string("train", rc.train_path);
  get_string("valid", rc.valid_path);
  get_string("test", rc.test_path);
  get_string("features", rc.features_path);
  get_string("out_dir", rc.out_dir);
  get_string("ind_graph", rc.ind_graph_path);
  get_string("ind_valid", rc.ind_valid_path);
  get_string("ind_test", rc.ind_test_path);
  get_string("ind_features", rc.ind_features_path);
  if (j.contains("add_reciprocals")) rc.add_reciprocals = j["add_reciprocals"];
  if (j.contains("eval_reciprocals")) rc.eval_reciprocals = j["eval_reciprocals"];
  if (j.contains("protocol")) {
    const std::string p = j["protocol"];
    if (p == "full")
      rc.protocol.mode = rfgn::RankingMode::Full;
    else if (p == "partial")
      rc.protocol.mode = rfgn::RankingMode::Partial;
    else
      throw rfgn::ConfigError("unknown protocol: " + p);
  }
  if (j.contains("partial_negatives")) rc.protocol.partial_negatives = j["partial_negatives"];
  if (j.contains("filtered")) rc.protocol.filtered = j["filtered"];
  if (j.contains("inference_layers")) rc.inference_layers = j["inference_layers"].get<std::uint64_t>();
  if (rc.train_path.empty()) throw rfgn::ConfigError("config key 'train' is required");
  rc.train.valid_protocol = rc.protocol;
  return rc;
}

struct LoadedData {
  rfgn::DatasetBundle bundle;
  std::optional<rfgn::NodeFeatures> features;
};

LoadedData load_data(const RunConfig& rc) {
  LoadedData data;
  rfgn::KnowledgeGraph train = rfgn::load_triples_file(rc.train_path);
  if (!rc.valid_path.empty())
    data.bundle.valid_triples = rfgn::load_triple_list_file(rc.valid_path, train.vocab());
  if (!rc.test_path.empty())
    data.bundle.test_triples = rfgn::load_triple_list_file(rc.test_path, train.vocab());
  if (!rc.features_path.empty())
    data.features = rfgn::load_features_file(rc.features_path, train.vocab(), rc.train.dim,
                                             rfgn::Rng::derive_seed(rc.train.seed, "feature-fill"));
  data.bundle.train = rc.add_reciprocals ? rfgn::add_reciprocals(train) : std::move(train);
  return data;
}

rfgn::EvalOptions eval_options(const RunConfig& rc, const rfgn::KnowledgeGraph& g,
                               std::string_view label) {
  rfgn::EvalOptions opts;
  opts.kind = rc.train.kind;
  opts.protocol = rc.protocol;
  opts.seed = rfgn::Rng::derive_seed(rc.train.seed, label);
  if (rc.eval_reciprocals && g.reciprocal_flag())
    opts.reciprocal_base = static_cast<rfgn::RelationId>(g.n_relations() / 2);
  return opts;
}

rfgn::FilterIndex transductive_filter(const LoadedData& data) {
  std::optional<rfgn::RelationId> base;
  if (data.bundle.train.reciprocal_flag())
    base = static_cast<rfgn::RelationId>(data.bundle.train.n_relations() / 2);
  rfgn::FilterIndex filter;
  filter.add(data.bundle.train.triples(), base);
  filter.add(data.bundle.valid_triples, base);
  filter.add(data.bundle.test_triples, base);
  return filter;
}

rfgn::Metrics evaluate_transductive(const RunConfig& rc, const LoadedData& data,
                                    const rfgn::TrainedModel& model,
                                    std::span<const rfgn::Triple> queries,
                                    std::string_view label) {
  const rfgn::FilterIndex filter = transductive_filter(rc, data);
  return rfgn::evaluate(model.cache.states(), model.psi, queries,
                        eval_options(rc, data.bundle.train, label), filter);
}

rfgn::Metrics evaluate_inductive(const RunConfig& rc, const rfgn::TrainedModel& model) {
  rfgn::LoadOptions opts;
  // Relations come frozen from the training side, before augmentation.
  rfgn::KnowledgeGraph train_raw = rfgn::load_triples_file(rc.train_path);
  opts.frozen_relations = &train_raw.vocab();
  rfgn::KnowledgeGraph ind = rfgn::load_triples_file(rc.ind_graph_path, opts);
  const auto bundle_check = rfgn::bind_inductive(train_raw, ind);  // validates the pair
  (void)bundle_check;

  const std::vector<rfgn::Triple> queries =
      rfgn::load_triple_list_file(rc.ind_test_path, ind.vocab());
  std::vector<rfgn::Triple> valid;
  if (!rc.ind_valid_path.empty())
    valid = rfgn::load_triple_list_file(rc.ind_valid_path, ind.vocab());

  rfgn::Matrix x;
  if (!rc.ind_features_path.empty()) {
    x = rfgn::load_features_file(rc.ind_features_path, ind.vocab(), model.psi.cols(),
                                 rfgn::Rng::derive_seed(rc.train.seed, "ind-feature-fill"))
            .matrix;
  } else {
    x = rfgn::make_random_features(ind.n_entities(), model.psi.cols(),
                                   rfgn::Rng::derive_seed(rc.train.seed, "ind-features"))
            .matrix;
  }
  const std::uint64_t layers = rc.inference_layers
                                   ? rc.inference_layers
                                   : model.config.layer_budget.value_or(1);
  const rfgn::Matrix h = rfgn::inductive_infer(model, ind, x, layers);

  const bool augmented = model.psi.rows() == 2 * ind.n_relations();
  std::optional<rfgn::RelationId> base;
  if (augmented) base = ind.n_relations();
  rfgn::FilterIndex filter;
  filter.add(ind.triples(), base);
  filter.add(valid, base);
  filter.add(queries, base);

  rfgn::EvalOptions opts2;
  opts2.kind = rc.train.kind;
  opts2.protocol = rc.protocol;
  opts2.seed = rfgn::Rng::derive_seed(rc.train.seed, "ind-eval");
  if (rc.eval_reciprocals && augmented) opts2.reciprocal_base = base;
  return rfgn::evaluate(h, model.psi, queries, opts2, filter);
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed_override) {
  RunConfig rc = parse_run_config(config_path);
  if (seed_override) rc.train.seed = *seed_override;
  const LoadedData data = load_data(rc);
  rfgn::TrainedModel model = rfgn::fit(data.bundle, data.features, rc.train);
  fs::create_directories(rc.out_dir);
  rfgn::save_model(model, rc.out_dir);

  if (!data.bundle.valid_triples.empty()) {
    const auto m = evaluate_transductive(rc, data, model, data.bundle.valid_triples, "valid-eval");
    rfgn::emit_metrics(m, rc.protocol, (fs::path(rc.out_dir) / "metrics_valid.json").string());
  }
  if (!data.bundle.test_triples.empty()) {
    const auto m = evaluate_transductive(rc, data, model, data.bundle.test_triples, "test-eval");
    rfgn::emit_metrics(m, rc.protocol, (fs::path(rc.out_dir) / "metrics.json").string());
    std::cout << rfgn::metrics_to_json(m, rc.protocol) << '\n';
  }
  if (!rc.ind_graph_path.empty() && !rc.ind_test_path.empty()) {
    const auto m = evaluate_inductive(rc, model);
    rfgn::emit_metrics(m, rc.protocol, (fs::path(rc.out_dir) / "metrics_inductive.json").string());
    std::cout << rfgn::metrics_to_json(m, rc.protocol) << '\n';
  }
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& model_dir) {
  RunConfig rc = parse_run_config(config_path);
  rfgn::TrainedModel model = rfgn::load_model(model_dir);
  rc.train.kind = model.config.kind;  // the artifact decides the decoder
  if (!rc.ind_graph_path.empty() && !rc.ind_test_path.empty()) {
    const auto m = evaluate_inductive(rc, model);
    rfgn::emit_metrics(m, rc.protocol, (fs::path(model_dir) / "metrics_inductive.json").string());
    std::cout << rfgn::metrics_to_json(m, rc.protocol) << '\n';
    return 0;
  }
  const LoadedData data = load_data(rc);
  if (data.bundle.test_triples.empty()) throw rfgn::ConfigError("config key 'test' is required");
  const auto m = evaluate_transductive(rc, data, model, data.bundle.test_triples, "test-eval");
  rfgn::emit_metrics(m, rc.protocol, (fs::path(model_dir) / "metrics.json").string());
  std::cout << rfgn::metrics_to_json(m, rc.protocol) << '\n';
  return 0;
}

int cmd_verify(std::uint64_t seed, int graphs, int steps) {
  const rfgn::SweepResult result = rfgn::equivalence_sweep(seed, graphs, steps);
  std::printf("max divergence %.3e over %d graphs (%d steps each)\n", result.max_divergence,
              result.graphs, steps);
  return result.max_divergence <= 1e-9 ? 0 : 1;
}

int cmd_ablate(const std::string& config_path, std::optional<std::uint64_t> seed_override) {
  RunConfig rc = parse_run_config(config_path);
  if (seed_override) rc.train.seed = *seed_override;
  if (rc.train.mode != rfgn::TrainMode::Refactor)
    throw rfgn::ConfigError("ablate applies to refactor mode");
  const LoadedData data = load_data(rc);
  fs::create_directories(rc.out_dir);

  auto run = [&](bool with_global, const char* tag) {
    rfgn::TrainConfig cfg = rc.train;
    cfg.include_global_term = with_global;
    RunConfig local = rc;
    local.train = cfg;
    rfgn::TrainedModel model = rfgn::fit(data.bundle, data.features, cfg);
    rfgn::Metrics m;
    if (!local.ind_graph_path.empty() && !local.ind_test_path.empty())
      m = evaluate_inductive(local, model);
    else
      m = evaluate_transductive(local, data, model, data.bundle.test_triples, "test-eval");
    rfgn::emit_metrics(m, rc.protocol,
                       (fs::path(rc.out_dir) / (std::string("metrics_") + tag + ".json")).string());
    return m;
  };

  const rfgn::Metrics with_term = run(true, "with_global");
  const rfgn::Metrics without_term = run(false, "without_global");
  nlohmann::ordered_json delta;
  delta["mrr_with"] = with_term.mrr;
  delta["mrr_without"] = without_term.mrr;
  delta["mrr_delta"] = with_term.mrr - without_term.mrr;
  delta["hits@10_with"] = with_term.hits10;
  delta["hits@10_without"] = without_term.hits10;
  {
    std::ofstream out(fs::path(rc.out_dir) / "ablation.json");
    out << delta.dump(2) << '\n';
  }
  std::cout << delta.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph completion via factorisation-as-message-passing"};
  app.require_subcommand(1);

  std::string config_path, model_dir;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t verify_seed = 7;
  int verify_graphs = 100;
  int verify_steps = 5;

  auto* train = app.add_subcommand("train", "train a model and evaluate it");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--seed", seed_override, "override the config seed");

  auto* eval = app.add_subcommand("eval", "evaluate a saved model artifact");
  eval->add_option("--config", config_path, "run config JSON")->required();
  eval->add_option("--model", model_dir, "model artifact directory")->required();

  auto* verify = app.add_subcommand(
      "verify", "check the gradient-descent/message-passing equivalence on random graphs");
  verify->add_option("--seed", verify_seed, "sweep seed");
  verify->add_option("--graphs", verify_graphs, "number of random graphs");
  verify->add_option("--steps", verify_steps, "steps per graph");

  auto* ablate = app.add_subcommand("ablate", "train with and without the global term");
  ablate->add_option("--config", config_path, "run config JSON")->required();
  ablate->add_option("--seed", seed_override, "override the config seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, seed_override);
    if (eval->parsed()) return cmd_eval(config_path, model_dir);
    if (verify->parsed()) return cmd_verify(verify_seed, verify_graphs, verify_steps);
    if (ablate->parsed()) return cmd_ablate(config_path, seed_override);
  } catch (const rfgn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rfgn::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
