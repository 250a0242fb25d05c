#include "rfgn/random_graph.hpp"

#include "rfgn/refactor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace rfgn {

RandomInstance make_random_instance(Rng& rng, ScoreKind kind, const RandomInstanceLimits& limits) {
  const EntityId n_entities =
      static_cast<EntityId>(2 + rng.uniform(static_cast<std::uint64_t>(limits.max_entities - 1)));
  const RelationId n_relations =
      static_cast<RelationId>(1 + rng.uniform(static_cast<std::uint64_t>(limits.max_relations)));
  Eigen::Index k =
      static_cast<Eigen::Index>(1 + rng.uniform(static_cast<std::uint64_t>(limits.max_dim)));
  if (kind == ScoreKind::Complex && k % 2 != 0) k = k + 1 <= limits.max_dim ? k + 1 : k - 1;
  if (k < 1) k = 2;

  Vocabulary vocab;
  for (EntityId e = 0; e < n_entities; ++e) vocab.add_entity("e" + std::to_string(e));
  for (RelationId r = 0; r < n_relations; ++r) vocab.add_relation("r" + std::to_string(r));

  const std::size_t distinct =
      static_cast<std::size_t>(n_entities) * (n_entities - 1) * n_relations;
  const std::size_t want = std::min<std::size_t>(1 + rng.uniform(limits.max_triples), distinct);
  std::vector<Triple> triples;
  std::unordered_set<std::uint64_t> seen;
  while (triples.size() < want) {
    const EntityId s = static_cast<EntityId>(rng.uniform(n_entities));
    EntityId o = static_cast<EntityId>(rng.uniform(n_entities));
    if (s == o) continue;
    const RelationId r = static_cast<RelationId>(rng.uniform(n_relations));
    const std::uint64_t key = (static_cast<std::uint64_t>(s) << 40) |
                              (static_cast<std::uint64_t>(r) << 20) |
                              static_cast<std::uint64_t>(o);
    if (!seen.insert(key).second) continue;
    triples.push_back({s, r, o});
  }

  RandomInstance inst{KnowledgeGraph(std::move(vocab), std::move(triples)), Matrix(), Matrix()};
  const Real stddev = 1.0 / std::sqrt(static_cast<Real>(k));
  inst.phi = rng.normal_matrix(n_entities, k, stddev);
  inst.psi = rng.normal_matrix(n_relations, k, stddev);
  return inst;
}

SweepResult equivalence_sweep(std::uint64_t seed, int n_graphs, int steps,
                              const RandomInstanceLimits& limits) {
  SweepResult result;
  for (int i = 0; i < n_graphs; ++i) {
    for (ScoreKind kind : {ScoreKind::DistMult, ScoreKind::Complex}) {
      Rng rng = Rng::stream(seed, "sweep/" + std::to_string(i) +
                                      (kind == ScoreKind::Complex ? "/complex" : "/distmult"));
      const RandomInstance inst = make_random_instance(rng, kind, limits);

      DynConfig sgd;
      sgd.kind = kind;
      sgd.beta = 0.5;

      DynConfig n3 = sgd;
      n3.lambda = 0.01;

      DynConfig adagrad = sgd;
      adagrad.optimizer = OptimizerKind::AdaGrad;
      adagrad.adagrad_eps = 1e-8;

      for (const DynConfig& cfg : {sgd, n3, adagrad}) {
        const Real divergence = verify_gd_equivalence(inst.graph, inst.phi, inst.psi, cfg, steps);
        result.max_divergence = std::max(result.max_divergence, divergence);
      }
    }
    ++result.graphs;
  }
  return result;
}

}  // namespace rfgn
