#pragma once

#include "rfgn/cache.hpp"
#include "rfgn/dynamics.hpp"
#include "rfgn/eval.hpp"
#include "rfgn/graph.hpp"
#include "rfgn/refactor.hpp"
#include "rfgn/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfgn {

enum class TrainMode { PureFm, Refactor };
enum class ClearUnit { Pass, Batch };

struct TrainConfig {
  ScoreKind kind = ScoreKind::DistMult;
  Eigen::Index dim = 32;
  Real beta = 0.1;
  std::optional<Real> eta;  // relation step size; defaults to beta
  int epochs = 20;
  int batch_size = 256;
  int global_negatives = 1;  // uniform candidate draws per positive
  std::optional<int> max_in_batch_negatives;
  std::optional<std::uint64_t> layer_budget;  // L; unset = infinity
  Real lambda = 0.0;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  Real adagrad_eps = 1e-8;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Refactor;
  bool include_global_term = true;
  ClearUnit clear_unit = ClearUnit::Pass;
  int patience = 5;
  Protocol valid_protocol{};

  Real psi_eta() const { return eta.value_or(beta); }
  DynConfig dyn() const;
  void validate() const;
};

struct EpochLog {
  int epoch;
  Real loss;
  Real valid_mrr;  // NaN when no validation split
  double seconds;
};

struct TrainedModel {
  Matrix psi;
  NodeStateCache cache;
  TrainConfig config;
  std::vector<EpochLog> log;

  /// Refactor models train only psi; the FM baseline also trains the states.
  std::size_t trainable_parameters() const;
};

struct Batch {
  std::vector<Triple> triples;
  CandidateSet cands;
};

/// Batch endpoints (subjects then objects, triple order), gold objects, then
/// `global_negatives` uniform draws per positive; deduplicated, insertion
/// order. Endpoint negatives can be capped by max_in_batch_negatives.
CandidateSet make_candidates(const KnowledgeGraph& g, std::span<const Triple> batch, Rng& rng,
                             const TrainConfig& cfg);

/// One freshly shuffled batch with its candidate set.
Batch sample_batch(const KnowledgeGraph& g, Rng& rng, const TrainConfig& cfg);

/// Epoch-shuffled mini-batches without replacement.
class BatchSampler {
 public:
  BatchSampler(const KnowledgeGraph& g, const TrainConfig& cfg);
  void start_epoch(Rng& rng);
  std::optional<Batch> next(Rng& rng);
  std::size_t batches_per_epoch() const;

 private:
  const KnowledgeGraph& graph_;
  const TrainConfig& cfg_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Layer-wise relation update: states are treated as constants and the
/// gradient reaches psi only through the decoder. With SGD and lambda = 0
/// each touched row moves by -eta times the summed relation gradient;
/// AdaGrad/N3 apply the same treatment entities get.
Matrix psi_step(const Scope& scope, const Matrix& states, const Matrix& psi, Real eta,
                const DynConfig& cfg, OptimizerState* opt = nullptr);

/// Full training loop over the cache: per batch pull -> layer_apply
/// (Refactor) or full_gd_step (PureFm) -> push -> psi_step; cache advance per
/// pass (or per batch); early stopping on validation MRR.
TrainedModel fit(const DatasetBundle& bundle, const std::optional<NodeFeatures>& features,
                 const TrainConfig& cfg);

/// L rounds of on-the-fly message passing over a new graph with frozen psi*.
/// The test graph gains reciprocal twins automatically when the model was
/// trained with them.
Matrix inductive_infer(const TrainedModel& model, const KnowledgeGraph& test_g,
                       const Matrix& x_test, std::uint64_t layers);

// Model artifact directory: states.rfgn + psi.rfgn (binary snapshots),
// config.json, train_log.csv.
void save_model(const TrainedModel& model, const std::string& dir);
TrainedModel load_model(const std::string& dir);

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace rfgn
