#include "rfgn/graph.hpp"

#include "rfgn/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace rfgn {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream ifs(path, std::ios::binary);
  if (!ifs) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << ifs.rdbuf();
  return ss.str();
}

struct TripleKey {
  std::size_t operator()(const Triple& t) const {
    std::size_t h = static_cast<std::size_t>(t.subject);
    h = h * 1000003u + static_cast<std::size_t>(t.relation);
    h = h * 1000003u + static_cast<std::size_t>(t.object);
    return h;
  }
};

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

EntityId Vocabulary::add_entity(const std::string& label) {
  auto it = entity_ids_.find(label);
  if (it != entity_ids_.end()) return it->second;
  const EntityId id = static_cast<EntityId>(entity_labels_.size());
  entity_labels_.push_back(label);
  entity_ids_.emplace(label, id);
  return id;
}

RelationId Vocabulary::add_relation(const std::string& label) {
  auto it = relation_ids_.find(label);
  if (it != relation_ids_.end()) return it->second;
  const RelationId id = static_cast<RelationId>(relation_labels_.size());
  relation_labels_.push_back(label);
  relation_ids_.emplace(label, id);
  return id;
}

std::optional<EntityId> Vocabulary::entity_id(const std::string& label) const {
  auto it = entity_ids_.find(label);
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::relation_id(const std::string& label) const {
  auto it = relation_ids_.find(label);
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary vocab, std::vector<Triple> triples, bool reciprocal_flag)
    : vocab_(std::move(vocab)), triples_(std::move(triples)), reciprocal_flag_(reciprocal_flag) {
  out_nbrs_.resize(vocab_.n_entities());
  in_nbrs_.resize(vocab_.n_entities());
  for (const Triple& t : triples_) {
    if (t.subject < 0 || t.subject >= vocab_.n_entities() || t.object < 0 ||
        t.object >= vocab_.n_entities() || t.relation < 0 || t.relation >= vocab_.n_relations())
      throw ConfigError("triple references id outside vocabulary bounds");
    if (t.subject == t.object) throw ConfigError("self-loop triple rejected");
    out_nbrs_[t.subject].push_back({t.relation, t.object});
    in_nbrs_[t.object].push_back({t.relation, t.subject});
  }
}

const std::vector<Neighbor>& KnowledgeGraph::out_neighbors(EntityId v) const {
  if (v < 0 || v >= n_entities()) throw ConfigError("entity id out of range");
  return out_nbrs_[v];
}

const std::vector<Neighbor>& KnowledgeGraph::in_neighbors(EntityId v) const {
  if (v < 0 || v >= n_entities()) throw ConfigError("entity id out of range");
  return in_nbrs_[v];
}

bool KnowledgeGraph::contains(const Triple& q) const {
  if (q.subject < 0 || q.subject >= n_entities()) return false;
  for (const Neighbor& nb : out_nbrs_[q.subject])
    if (nb.relation == q.relation && nb.node == q.object) return true;
  return false;
}

KnowledgeGraph load_triples(const std::string& text, const LoadOptions& opts) {
  Vocabulary vocab;
  if (opts.frozen_vocab) vocab = *opts.frozen_vocab;
  if (opts.frozen_relations)
    for (const std::string& label : opts.frozen_relations->relation_labels())
      vocab.add_relation(label);

  std::vector<Triple> triples;
  std::unordered_set<Triple, TripleKey> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected exactly three tab-separated fields");
    const std::string s = line.substr(0, tab1);
    const std::string r = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string o = line.substr(tab2 + 1);
    if (s.empty() || r.empty() || o.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty field");
    if (s == o)
      throw ConfigError("line " + std::to_string(line_no) + ": self-loop triple '" + s + "'");

    EntityId sid, oid;
    RelationId rid;
    if (opts.frozen_vocab) {
      const auto se = vocab.entity_id(s), oe = vocab.entity_id(o);
      const auto re = vocab.relation_id(r);
      if (!se || !oe || !re)
        throw ConfigError("line " + std::to_string(line_no) + ": unknown label under frozen vocabulary");
      sid = *se;
      oid = *oe;
      rid = *re;
    } else {
      if (opts.frozen_relations) {
        const auto re = vocab.relation_id(r);
        if (!re)
          throw ConfigError("line " + std::to_string(line_no) + ": unknown relation '" + r +
                            "' under frozen relation vocabulary");
        rid = *re;
      } else {
        rid = vocab.add_relation(r);
      }
      sid = vocab.add_entity(s);
      oid = vocab.add_entity(o);
    }
    const Triple t{sid, rid, oid};
    if (seen.insert(t).second) triples.push_back(t);
  }
  return KnowledgeGraph(std::move(vocab), std::move(triples));
}

KnowledgeGraph load_triples_file(const std::string& path, const LoadOptions& opts) {
  return load_triples(read_file(path), opts);
}

std::vector<Triple> load_triple_list(const std::string& text, const Vocabulary& vocab) {
  LoadOptions opts;
  opts.frozen_vocab = &vocab;
  return load_triples(text, opts).triples();
}

std::vector<Triple> load_triple_list_file(const std::string& path, const Vocabulary& vocab) {
  return load_triple_list(read_file(path), vocab);
}

std::string serialize_triples(const KnowledgeGraph& g) {
  std::ostringstream out;
  for (const Triple& t : g.triples())
    out << g.vocab().entity_label(t.subject) << '\t' << g.vocab().relation_label(t.relation)
        << '\t' << g.vocab().entity_label(t.object) << '\n';
  return out.str();
}

KnowledgeGraph add_reciprocals(const KnowledgeGraph& g) {
  if (g.reciprocal_flag()) throw ConfigError("add_reciprocals called on an augmented graph");
  Vocabulary vocab = g.vocab();
  const RelationId base = vocab.n_relations();
  for (RelationId r = 0; r < base; ++r) vocab.add_relation(vocab.relation_label(r) + "_inv");

  std::vector<Triple> triples = g.triples();
  triples.reserve(2 * triples.size());
  for (std::size_t i = 0, n = g.n_triples(); i < n; ++i) {
    const Triple& t = g.triples()[i];
    triples.push_back({t.object, static_cast<RelationId>(t.relation + base), t.subject});
  }
  return KnowledgeGraph(std::move(vocab), std::move(triples), /*reciprocal_flag=*/true);
}

std::pair<const std::vector<Neighbor>&, const std::vector<Neighbor>&> neighborhoods(
    const KnowledgeGraph& g, EntityId v) {
  return {g.out_neighbors(v), g.in_neighbors(v)};
}

NodeFeatures load_features(const std::string& text, const Vocabulary& vocab, Eigen::Index k,
                           std::optional<std::uint64_t> fill_seed) {
  const EntityId n = vocab.n_entities();
  Matrix m = Matrix::Zero(n, k);
  std::vector<bool> present(n, false);

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string label;
    if (!std::getline(fields, label, ','))
      throw ConfigError("feature line " + std::to_string(line_no) + ": missing label");
    const auto id = vocab.entity_id(label);
    if (!id)
      throw ConfigError("feature line " + std::to_string(line_no) + ": unknown entity '" + label +
                        "'");
    std::string field;
    Eigen::Index col = 0;
    while (std::getline(fields, field, ',')) {
      if (col >= k)
        throw ConfigError("feature line " + std::to_string(line_no) + ": more than " +
                          std::to_string(k) + " values");
      std::size_t consumed = 0;
      Real value = 0;
      try {
        value = std::stod(field, &consumed);
      } catch (const std::exception&) {
        throw ConfigError("feature line " + std::to_string(line_no) + ": bad float '" + field + "'");
      }
      if (consumed != field.size())
        throw ConfigError("feature line " + std::to_string(line_no) + ": bad float '" + field + "'");
      if (!std::isfinite(value))
        throw ConfigError("feature line " + std::to_string(line_no) + ": non-finite value");
      m(*id, col++) = value;
    }
    if (col != k)
      throw ConfigError("feature line " + std::to_string(line_no) + ": expected " +
                        std::to_string(k) + " values, got " + std::to_string(col));
    present[*id] = true;
  }

  for (EntityId e = 0; e < n; ++e) {
    if (present[e]) continue;
    if (!fill_seed)
      throw ConfigError("no feature row for entity '" + vocab.entity_label(e) + "'");
    Rng rng = Rng::stream(*fill_seed, "features/" + vocab.entity_label(e));
    const Real stddev = 1.0 / std::sqrt(static_cast<Real>(k));
    for (Eigen::Index j = 0; j < k; ++j) m(e, j) = stddev * rng.normal();
  }

  NodeFeatures f;
  f.matrix = std::move(m);
  f.source = FeatureSource::FileLoaded;
  f.seed = fill_seed.value_or(0);
  return f;
}

NodeFeatures load_features_file(const std::string& path, const Vocabulary& vocab, Eigen::Index k,
                                std::optional<std::uint64_t> fill_seed) {
  NodeFeatures f = load_features(read_file(path), vocab, k, fill_seed);
  f.path = path;
  return f;
}

NodeFeatures make_random_features(EntityId n_entities, Eigen::Index k, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "features");
  NodeFeatures f;
  f.matrix = rng.normal_matrix(n_entities, k, 1.0 / std::sqrt(static_cast<Real>(k)));
  f.source = FeatureSource::RandomFrozen;
  f.seed = seed;
  return f;
}

DatasetBundle bind_inductive(KnowledgeGraph train, KnowledgeGraph test) {
  const auto& train_rels = train.vocab().relation_labels();
  const auto& test_rels = test.vocab().relation_labels();
  bool rel_ok = train_rels == test_rels;
  if (!rel_ok && train.reciprocal_flag() && !test.reciprocal_flag() &&
      train_rels.size() == 2 * test_rels.size())
    rel_ok = std::equal(test_rels.begin(), test_rels.end(), train_rels.begin());
  if (!rel_ok) throw ConfigError("inductive test relation vocabulary does not match training");

  std::unordered_set<std::string> train_entities(train.vocab().entity_labels().begin(),
                                                 train.vocab().entity_labels().end());
  for (const std::string& label : test.vocab().entity_labels())
    if (train_entities.count(label))
      throw ConfigError("inductive test shares entity '" + label + "' with training graph");

  DatasetBundle bundle;
  bundle.train = std::move(train);
  bundle.inductive_test = std::move(test);
  return bundle;
}

}  // namespace rfgn
