#include "rfgn/scope.hpp"

namespace rfgn {

namespace {

void index_scope(Scope& s) {
  s.cands.validate();
  s.cand_pos.assign(s.n_entities, -1);
  for (std::size_t i = 0; i < s.cands.ids.size(); ++i) {
    const EntityId id = s.cands.ids[i];
    if (id < 0 || id >= s.n_entities) throw ConfigError("candidate id out of range");
    s.cand_pos[id] = static_cast<Eigen::Index>(i);
  }
  s.nodes = s.cands.ids;
  std::vector<bool> present(s.n_entities, false);
  for (EntityId id : s.cands.ids) present[id] = true;

  s.out_nbrs.assign(s.n_entities, {});
  s.in_nbrs.assign(s.n_entities, {});
  s.out_tidx.assign(s.n_entities, {});
  s.in_tidx.assign(s.n_entities, {});
  for (std::size_t ti = 0; ti < s.triples.size(); ++ti) {
    const Triple& t = s.triples[ti];
    if (t.subject == t.object) throw ConfigError("self-loop triple in scope");
    if (t.subject < 0 || t.subject >= s.n_entities || t.object < 0 || t.object >= s.n_entities)
      throw ConfigError("triple entity out of range");
    s.out_nbrs[t.subject].push_back({t.relation, t.object});
    s.in_nbrs[t.object].push_back({t.relation, t.subject});
    s.out_tidx[t.subject].push_back(ti);
    s.in_tidx[t.object].push_back(ti);
    for (EntityId endpoint : {t.subject, t.object}) {
      if (!present[endpoint]) {
        present[endpoint] = true;
        s.nodes.push_back(endpoint);
      }
    }
  }
}

}  // namespace

Scope full_scope(const KnowledgeGraph& g) {
  Scope s;
  s.n_entities = g.n_entities();
  s.triples = g.triples();
  s.cands = CandidateSet::all(g.n_entities());
  index_scope(s);
  return s;
}

Scope batch_scope(EntityId n_entities, std::span<const Triple> batch, CandidateSet cands) {
  Scope s;
  s.n_entities = n_entities;
  s.triples.assign(batch.begin(), batch.end());
  s.cands = std::move(cands);
  index_scope(s);
  return s;
}

}  // namespace rfgn
