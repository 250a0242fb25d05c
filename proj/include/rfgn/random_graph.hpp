#pragma once

#include "rfgn/dynamics.hpp"
#include "rfgn/graph.hpp"
#include "rfgn/rng.hpp"

#include <cstdint>

namespace rfgn {

struct RandomInstanceLimits {
  EntityId max_entities = 12;
  RelationId max_relations = 4;
  std::size_t max_triples = 40;
  Eigen::Index max_dim = 8;
};

/// A self-loop-free random graph with matching random states and relation
/// table, for the equivalence sweep and property tests. ComplEx instances get
/// an even hidden size.
struct RandomInstance {
  KnowledgeGraph graph;
  Matrix phi;
  Matrix psi;
};

RandomInstance make_random_instance(Rng& rng, ScoreKind kind,
                                    const RandomInstanceLimits& limits = {});

struct SweepResult {
  Real max_divergence = 0;
  int graphs = 0;
};

/// The hermetic equivalence sweep behind `verify`: seeded random graphs, both
/// score kinds, SGD / SGD+N3(0.01) / AdaGrad(1e-8), `steps` iterations each.
SweepResult equivalence_sweep(std::uint64_t seed, int n_graphs, int steps,
                              const RandomInstanceLimits& limits = {});

}  // namespace rfgn
