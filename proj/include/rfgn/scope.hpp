#pragma once

#include "rfgn/graph.hpp"
#include "rfgn/scoring.hpp"
#include "rfgn/types.hpp"

#include <span>
#include <vector>

namespace rfgn {

/// One evaluation scope for a gradient-descent step or a message-passing
/// layer: a set of triples B, the softmax candidate set C, and the
/// neighbourhood indices induced by B. For a mini-batch the induced subgraph
/// defines the neighbourhoods, the excluded-triple sets and the candidates,
/// and |B| is the batch size entering alpha = beta / |B|.
struct Scope {
  std::vector<Triple> triples;
  CandidateSet cands;
  std::vector<Eigen::Index> cand_pos;          // entity id -> position in cands, -1 when absent
  std::vector<EntityId> nodes;                 // update targets: cands then any extra endpoint
  std::vector<std::vector<Neighbor>> out_nbrs; // induced N1+ per entity
  std::vector<std::vector<Neighbor>> in_nbrs;  // induced N1- per entity
  std::vector<std::vector<std::size_t>> out_tidx;  // triple indices with v as subject
  std::vector<std::vector<std::size_t>> in_tidx;   // triple indices with v as object
  EntityId n_entities = 0;

  std::size_t batch_size() const { return triples.size(); }
  bool is_candidate(EntityId v) const { return cand_pos[v] >= 0; }
};

/// Full-graph scope: B = all triples, C = all entities.
Scope full_scope(const KnowledgeGraph& g);

/// Mini-batch scope over the induced subgraph.
Scope batch_scope(EntityId n_entities, std::span<const Triple> batch, CandidateSet cands);

}  // namespace rfgn
