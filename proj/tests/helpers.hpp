#pragma once

#include "rfgn/graph.hpp"
#include "rfgn/scope.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace rfgn::testing {

/// The worked one-edge instance: two entities, K = 1, phi = (1, 2),
/// psi = (1), single triple (0, r0, 1), full candidates.
struct TwoEntity {
  KnowledgeGraph graph;
  Matrix phi;
  Matrix psi;
  Real p0, p1;  // softmax over scores (1, 2)

  TwoEntity() {
    Vocabulary vocab;
    vocab.add_entity("a");
    vocab.add_entity("b");
    vocab.add_relation("r");
    graph = KnowledgeGraph(vocab, {{0, 0, 1}});
    phi = Matrix(2, 1);
    phi << 1.0, 2.0;
    psi = Matrix(1, 1);
    psi << 1.0;
    const Real e1 = std::exp(1.0), e2 = std::exp(2.0);
    p0 = e1 / (e1 + e2);
    p1 = e2 / (e1 + e2);
  }
};

inline KnowledgeGraph graph_from(EntityId n_entities, RelationId n_relations,
                                 std::vector<Triple> triples) {
  Vocabulary vocab;
  for (EntityId e = 0; e < n_entities; ++e) vocab.add_entity("e" + std::to_string(e));
  for (RelationId r = 0; r < n_relations; ++r) vocab.add_relation("r" + std::to_string(r));
  return KnowledgeGraph(std::move(vocab), std::move(triples));
}

}  // namespace rfgn::testing
