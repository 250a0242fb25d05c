#pragma once

#include "rfgn/graph.hpp"
#include "rfgn/rng.hpp"
#include "rfgn/scoring.hpp"
#include "rfgn/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rfgn {

enum class RankingMode { Full, Partial };

struct Protocol {
  RankingMode mode = RankingMode::Full;
  int partial_negatives = 50;  // Partial only
  bool filtered = true;

  void validate() const {
    if (mode == RankingMode::Partial && partial_negatives < 1)
      throw ConfigError("partial protocol needs at least one negative");
  }
  std::string name() const {
    return mode == RankingMode::Full ? "full"
                                     : "partial-" + std::to_string(partial_negatives);
  }
};

/// All known-true triples keyed by (subject, relation); filtered ranking
/// removes every non-gold candidate found here.
class FilterIndex {
 public:
  /// When reciprocal_base is set, (o, r + base, s) twins are indexed too so
  /// that inverse-direction queries filter correctly.
  void add(std::span<const Triple> triples,
           std::optional<RelationId> reciprocal_base = std::nullopt);

  bool contains(EntityId subject, RelationId relation, EntityId object) const;
  const std::vector<EntityId>* objects(EntityId subject, RelationId relation) const;

 private:
  std::unordered_map<std::uint64_t, std::vector<EntityId>> by_query_;
};

struct Metrics {
  Real mrr = 0;
  Real hits1 = 0;
  Real hits3 = 0;
  Real hits10 = 0;
  std::size_t n_queries = 0;
};

/// Rank of the gold object for the query (v, r, ?), mean-rank tie rule:
/// 1 + #{strictly better} + #{non-gold ties} / 2.
Real rank_query(const Matrix& states, const Matrix& psi, ScoreKind kind, const Triple& query,
                const Protocol& protocol, const FilterIndex& filter, Rng& rng);

Metrics metrics_from_ranks(std::span<const Real> ranks);

struct EvalOptions {
  ScoreKind kind = ScoreKind::DistMult;
  Protocol protocol{};
  std::uint64_t seed = 0;
  // Rank (w, r + base, ?) -> v alongside every forward query.
  std::optional<RelationId> reciprocal_base;
};

/// Ranks every query (both directions when reciprocal_base is set) and
/// aggregates. Per-query RNG streams derive from (seed, query index), so the
/// result is independent of evaluation order; RFGN_THREADS caps parallelism.
Metrics evaluate(const Matrix& states, const Matrix& psi, std::span<const Triple> queries,
                 const EvalOptions& options, const FilterIndex& filter);

/// Canonical JSON: sorted keys, six decimal places.
std::string metrics_to_json(const Metrics& m, const Protocol& protocol);

/// Writes metrics.json (overwrite) and appends one row to results.csv next to
/// it (header created on first write).
void emit_metrics(const Metrics& m, const Protocol& protocol, const std::string& json_path);

Metrics metrics_from_json(const std::string& json_text);

}  // namespace rfgn
