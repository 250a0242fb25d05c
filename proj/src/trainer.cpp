#include "rfgn/trainer.hpp"

#include "kernel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace rfgn {

DynConfig TrainConfig::dyn() const {
  DynConfig d;
  d.kind = kind;
  d.beta = beta;
  d.lambda = lambda;
  d.optimizer = optimizer;
  d.adagrad_eps = adagrad_eps;
  d.include_global_term = include_global_term;
  return d;
}

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("hidden size must be positive");
  if (kind == ScoreKind::Complex && dim % 2 != 0)
    throw ConfigError("ComplEx requires an even hidden size");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (global_negatives < 0) throw ConfigError("global_negatives must be >= 0");
  if (beta < 0 || !std::isfinite(beta)) throw ConfigError("beta must be finite and >= 0");
  if (lambda < 0 || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (layer_budget && *layer_budget == 0) throw ConfigError("layer budget must be positive");
}

std::size_t TrainedModel::trainable_parameters() const {
  std::size_t n = static_cast<std::size_t>(psi.size());
  if (config.mode == TrainMode::PureFm) n += static_cast<std::size_t>(cache.states().size());
  return n;
}

CandidateSet make_candidates(const KnowledgeGraph& g, std::span<const Triple> batch, Rng& rng,
                             const TrainConfig& cfg) {
  CandidateSet cands;
  std::unordered_set<EntityId> seen;
  auto push = [&](EntityId id) {
    if (seen.insert(id).second) cands.ids.push_back(id);
  };
  // Gold objects always stay; subjects and non-gold endpoints are the
  // in-batch negatives and may be capped.
  for (const Triple& t : batch) push(t.object);
  std::size_t negatives_kept = 0;
  const std::size_t cap = cfg.max_in_batch_negatives
                              ? static_cast<std::size_t>(*cfg.max_in_batch_negatives)
                              : std::numeric_limits<std::size_t>::max();
  for (const Triple& t : batch) {
    if (negatives_kept >= cap) break;
    if (seen.insert(t.subject).second) {
      cands.ids.push_back(t.subject);
      ++negatives_kept;
    }
  }
  const std::size_t draws = batch.size() * static_cast<std::size_t>(cfg.global_negatives);
  for (std::size_t i = 0; i < draws; ++i)
    push(static_cast<EntityId>(rng.uniform(static_cast<std::uint64_t>(g.n_entities()))));
  return cands;
}

BatchSampler::BatchSampler(const KnowledgeGraph& g, const TrainConfig& cfg)
    : graph_(g), cfg_(cfg) {
  if (g.n_triples() == 0) throw ConfigError("cannot sample from an empty graph");
  order_.resize(g.n_triples());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

void BatchSampler::start_epoch(Rng& rng) {
  // Fisher-Yates with the project RNG for cross-platform determinism.
  for (std::size_t i = order_.size(); i > 1; --i)
    std::swap(order_[i - 1], order_[rng.uniform(i)]);
  cursor_ = 0;
}

std::optional<Batch> BatchSampler::next(Rng& rng) {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), order_.size() - cursor_);
  Batch batch;
  batch.triples.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    batch.triples.push_back(graph_.triples()[order_[cursor_++]]);
  batch.cands = make_candidates(graph_, batch.triples, rng, cfg_);
  return batch;
}

std::size_t BatchSampler::batches_per_epoch() const {
  return (order_.size() + static_cast<std::size_t>(cfg_.batch_size) - 1) /
         static_cast<std::size_t>(cfg_.batch_size);
}

Batch sample_batch(const KnowledgeGraph& g, Rng& rng, const TrainConfig& cfg) {
  BatchSampler sampler(g, cfg);
  sampler.start_epoch(rng);
  return *sampler.next(rng);
}

Matrix psi_step(const Scope& scope, const Matrix& states, const Matrix& psi, Real eta,
                const DynConfig& cfg, OptimizerState* opt) {
  if (scope.triples.empty()) throw ConfigError("empty scope");
  if (cfg.optimizer == OptimizerKind::AdaGrad && opt == nullptr)
    throw ConfigError("AdaGrad requires optimizer state");
  const Eigen::Index k = psi.cols();
  Matrix grad = Matrix::Zero(psi.rows(), k);
  std::vector<RelationId> touched;
  std::unordered_set<RelationId> seen;
  for (const Triple& t : scope.triples) {
    const auto ts = detail::triple_softmax(cfg.kind, states, scope, t, psi);
    const Vector weighted = detail::weighted_candidate_row(states, scope.cands, ts.probs);
    Vector g = grad_score(cfg.kind, Slot::Relation, states.row(t.subject), psi.row(t.relation),
                          weighted.transpose()) -
               grad_score(cfg.kind, Slot::Relation, states.row(t.subject), psi.row(t.relation),
                          states.row(t.object));
    if (cfg.lambda > 0) g += n3_gradient(psi.row(t.relation), cfg.lambda);
    if (seen.insert(t.relation).second) touched.push_back(t.relation);
    grad.row(t.relation) += g.transpose();
  }

  Matrix next = psi;
  for (RelationId r : touched) {
    if (cfg.optimizer == OptimizerKind::Sgd) {
      next.row(r) -= eta * grad.row(r);
    } else {
      opt->ensure_rels(psi.rows(), k);
      auto [rescaled, new_accum] =
          adagrad_rescale(grad.row(r).transpose(), opt->rel_accum.row(r).transpose(),
                          cfg.adagrad_eps);
      opt->rel_accum.row(r) = new_accum.transpose();
      next.row(r) -= eta * rescaled.transpose();
    }
  }
  return next;
}

namespace {

struct EvalContext {
  FilterIndex filter;
  EvalOptions options;
};

EvalContext make_eval_context(const DatasetBundle& bundle, const TrainConfig& cfg) {
  EvalContext ctx;
  std::optional<RelationId> base;
  if (bundle.train.reciprocal_flag())
    base = static_cast<RelationId>(bundle.train.n_relations() / 2);
  ctx.filter.add(bundle.train.triples(), base);
  ctx.filter.add(bundle.valid_triples, base);
  ctx.filter.add(bundle.test_triples, base);
  ctx.options.kind = cfg.kind;
  ctx.options.protocol = cfg.valid_protocol;
  ctx.options.seed = Rng::derive_seed(cfg.seed, "valid-eval");
  ctx.options.reciprocal_base = base;
  return ctx;
}

}  // namespace

TrainedModel fit(const DatasetBundle& bundle, const std::optional<NodeFeatures>& features,
                 const TrainConfig& cfg) {
  cfg.validate();
  const KnowledgeGraph& g = bundle.train;
  if (g.n_triples() == 0) throw ConfigError("training graph is empty");

  Matrix x;
  if (features) {
    if (features->matrix.rows() != g.n_entities())
      throw ConfigError("feature row count does not match entity count");
    if (features->matrix.cols() != cfg.dim)
      throw ConfigError("feature dimension does not match configured hidden size");
    x = features->matrix;
  } else {
    x = make_random_features(g.n_entities(), cfg.dim, Rng::derive_seed(cfg.seed, "phi0")).matrix;
  }

  Rng psi_rng = Rng::stream(cfg.seed, "psi0");
  Matrix psi =
      psi_rng.normal_matrix(g.n_relations(), cfg.dim, 1.0 / std::sqrt(static_cast<Real>(cfg.dim)));

  TrainedModel model{std::move(psi), NodeStateCache(std::move(x), cfg.layer_budget), cfg, {}};
  OptimizerState opt;
  const DynConfig dyn = cfg.dyn();

  BatchSampler sampler(g, cfg);
  Rng train_rng = Rng::stream(cfg.seed, "train");

  const bool track_valid = !bundle.valid_triples.empty();
  const EvalContext eval_ctx = make_eval_context(bundle, cfg);
  Real best_mrr = -1;
  Matrix best_psi, best_states;
  int best_epoch = -1, stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    sampler.start_epoch(train_rng);
    Real loss_sum = 0;
    std::size_t triples_seen = 0;
    while (auto batch = sampler.next(train_rng)) {
      const Scope scope = batch_scope(g.n_entities(), batch->triples, std::move(batch->cands));
      const Matrix& states = model.cache.pull_all();
      Real batch_nll = 0;
      Matrix next = cfg.mode == TrainMode::Refactor
                        ? layer_apply(scope, states, model.psi, dyn, &opt, &batch_nll)
                        : full_gd_step(scope, states, model.psi, dyn, &opt, &batch_nll);
      if (!std::isfinite(batch_nll))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += batch_nll * static_cast<Real>(scope.batch_size());
      triples_seen += scope.batch_size();

      Matrix rows(static_cast<Eigen::Index>(scope.nodes.size()), next.cols());
      for (std::size_t i = 0; i < scope.nodes.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) = next.row(scope.nodes[i]);
      model.cache.push(scope.nodes, rows);

      model.psi =
          psi_step(scope, model.cache.pull_all(), model.psi, cfg.psi_eta(), dyn, &opt);
      if (!model.psi.allFinite())
        throw NumericError("non-finite relation table at epoch " + std::to_string(epoch));
      if (cfg.clear_unit == ClearUnit::Batch) model.cache.advance_and_maybe_clear();
    }
    if (cfg.clear_unit == ClearUnit::Pass) model.cache.advance_and_maybe_clear();

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<Real>(triples_seen);
    entry.valid_mrr = std::numeric_limits<Real>::quiet_NaN();
    if (track_valid) {
      const Metrics m = evaluate(model.cache.states(), model.psi, bundle.valid_triples,
                                 eval_ctx.options, eval_ctx.filter);
      entry.valid_mrr = m.mrr;
      if (m.mrr > best_mrr) {
        best_mrr = m.mrr;
        best_psi = model.psi;
        best_states = model.cache.states();
        best_epoch = epoch;
        stale = 0;
      } else {
        ++stale;
      }
    }
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    model.log.push_back(entry);
    if (track_valid && cfg.patience > 0 && stale >= cfg.patience) break;
  }

  if (track_valid && best_epoch >= 0) {
    model.psi = std::move(best_psi);
    model.cache.push_all(best_states);
  }
  return model;
}

Matrix inductive_infer(const TrainedModel& model, const KnowledgeGraph& test_g,
                       const Matrix& x_test, std::uint64_t layers) {
  const KnowledgeGraph* graph = &test_g;
  KnowledgeGraph augmented;
  if (model.psi.rows() == 2 * test_g.n_relations() && !test_g.reciprocal_flag()) {
    augmented = add_reciprocals(test_g);
    graph = &augmented;
  } else if (model.psi.rows() != test_g.n_relations()) {
    throw ConfigError("relation table does not match the test graph vocabulary");
  }
  if (x_test.rows() != graph->n_entities()) throw ConfigError("feature row count mismatch");
  if (x_test.cols() != model.psi.cols()) throw ConfigError("feature dimension mismatch");

  Matrix h = x_test;
  if (layers == 0) return h;
  const Scope scope = full_scope(*graph);
  const DynConfig dyn = model.config.dyn();
  OptimizerState opt;
  for (std::uint64_t l = 0; l < layers; ++l) h = layer_apply(scope, h, model.psi, dyn, &opt);
  return h;
}

namespace {

std::string mode_name(TrainMode m) { return m == TrainMode::PureFm ? "fm" : "refactor"; }
std::string kind_name(ScoreKind k) { return k == ScoreKind::Complex ? "complex" : "distmult"; }
std::string optimizer_name(OptimizerKind o) {
  return o == OptimizerKind::AdaGrad ? "adagrad" : "sgd";
}

}  // namespace

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["score"] = kind_name(cfg.kind);
  j["K"] = cfg.dim;
  j["beta"] = cfg.beta;
  j["eta"] = cfg.psi_eta();
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["global_negatives"] = cfg.global_negatives;
  if (cfg.max_in_batch_negatives) j["max_in_batch_negatives"] = *cfg.max_in_batch_negatives;
  j["layers"] = cfg.layer_budget ? nlohmann::ordered_json(*cfg.layer_budget)
                                 : nlohmann::ordered_json("inf");
  j["lambda"] = cfg.lambda;
  j["optimizer"] = optimizer_name(cfg.optimizer);
  j["adagrad_eps"] = cfg.adagrad_eps;
  j["seed"] = cfg.seed;
  j["mode"] = mode_name(cfg.mode);
  j["include_global_term"] = cfg.include_global_term;
  j["clear_unit"] = cfg.clear_unit == ClearUnit::Batch ? "batch" : "pass";
  j["patience"] = cfg.patience;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  TrainConfig cfg;
  if (j.contains("score")) {
    const std::string s = j["score"];
    if (s == "complex")
      cfg.kind = ScoreKind::Complex;
    else if (s == "distmult")
      cfg.kind = ScoreKind::DistMult;
    else
      throw ConfigError("unknown score kind: " + s);
  }
  if (j.contains("K")) cfg.dim = j["K"].get<Eigen::Index>();
  if (j.contains("beta")) cfg.beta = j["beta"].get<Real>();
  if (j.contains("eta")) cfg.eta = j["eta"].get<Real>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("global_negatives")) cfg.global_negatives = j["global_negatives"].get<int>();
  if (j.contains("max_in_batch_negatives"))
    cfg.max_in_batch_negatives = j["max_in_batch_negatives"].get<int>();
  if (j.contains("layers")) {
    if (j["layers"].is_string()) {
      const std::string s = j["layers"];
      if (s != "inf" && s != "infinity") throw ConfigError("layers must be a count or \"inf\"");
      cfg.layer_budget = std::nullopt;
    } else {
      cfg.layer_budget = j["layers"].get<std::uint64_t>();
    }
  }
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<Real>();
  if (j.contains("optimizer")) {
    const std::string s = j["optimizer"];
    if (s == "adagrad")
      cfg.optimizer = OptimizerKind::AdaGrad;
    else if (s == "sgd")
      cfg.optimizer = OptimizerKind::Sgd;
    else
      throw ConfigError("unknown optimizer: " + s);
  }
  if (j.contains("adagrad_eps")) cfg.adagrad_eps = j["adagrad_eps"].get<Real>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("mode")) {
    const std::string s = j["mode"];
    if (s == "fm")
      cfg.mode = TrainMode::PureFm;
    else if (s == "refactor")
      cfg.mode = TrainMode::Refactor;
    else
      throw ConfigError("unknown mode: " + s);
  }
  if (j.contains("include_global_term")) cfg.include_global_term = j["include_global_term"];
  if (j.contains("clear_unit")) {
    const std::string s = j["clear_unit"];
    if (s == "batch")
      cfg.clear_unit = ClearUnit::Batch;
    else if (s == "pass")
      cfg.clear_unit = ClearUnit::Pass;
    else
      throw ConfigError("unknown clear_unit: " + s);
  }
  if (j.contains("patience")) cfg.patience = j["patience"].get<int>();
  cfg.validate();
  return cfg;
}

void save_model(const TrainedModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_matrix((fs::path(dir) / "states.rfgn").string(), model.cache.states());
  save_matrix((fs::path(dir) / "psi.rfgn").string(), model.psi);
  {
    std::ofstream out(fs::path(dir) / "config.json");
    out << train_config_to_json(model.config) << '\n';
  }
  std::ofstream log(fs::path(dir) / "train_log.csv");
  log << "epoch,loss,valid_mrr,seconds\n";
  log.setf(std::ios::fixed);
  log.precision(6);
  for (const EpochLog& e : model.log)
    log << e.epoch << ',' << e.loss << ',' << e.valid_mrr << ',' << e.seconds << '\n';
}

TrainedModel load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream cfg_in(fs::path(dir) / "config.json");
  if (!cfg_in) throw ConfigError("missing config.json in " + dir);
  std::ostringstream ss;
  ss << cfg_in.rdbuf();
  const TrainConfig cfg = train_config_from_json(ss.str());
  Matrix states = load_matrix((fs::path(dir) / "states.rfgn").string());
  Matrix psi = load_matrix((fs::path(dir) / "psi.rfgn").string());
  return TrainedModel{std::move(psi), NodeStateCache(std::move(states), cfg.layer_budget), cfg, {}};
}

}  // namespace rfgn
