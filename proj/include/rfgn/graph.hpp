#pragma once

#include "rfgn/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rfgn {

/// Dense label<->id maps for entities and relations, ids in first-seen order.
class Vocabulary {
 public:
  EntityId add_entity(const std::string& label);
  RelationId add_relation(const std::string& label);

  std::optional<EntityId> entity_id(const std::string& label) const;
  std::optional<RelationId> relation_id(const std::string& label) const;

  const std::string& entity_label(EntityId id) const { return entity_labels_.at(id); }
  const std::string& relation_label(RelationId id) const { return relation_labels_.at(id); }

  EntityId n_entities() const { return static_cast<EntityId>(entity_labels_.size()); }
  RelationId n_relations() const { return static_cast<RelationId>(relation_labels_.size()); }

  const std::vector<std::string>& entity_labels() const { return entity_labels_; }
  const std::vector<std::string>& relation_labels() const { return relation_labels_; }

  bool operator==(const Vocabulary& other) const {
    return entity_labels_ == other.entity_labels_ && relation_labels_ == other.relation_labels_;
  }

 private:
  std::vector<std::string> entity_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

struct Triple {
  EntityId subject;
  RelationId relation;
  EntityId object;

  bool operator==(const Triple&) const = default;
};

/// (relation, neighbour) entry of an outgoing or incoming adjacency list.
struct Neighbor {
  RelationId relation;
  EntityId node;

  bool operator==(const Neighbor&) const = default;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(Vocabulary vocab, std::vector<Triple> triples, bool reciprocal_flag = false);

  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<Triple>& triples() const { return triples_; }
  bool reciprocal_flag() const { return reciprocal_flag_; }

  EntityId n_entities() const { return vocab_.n_entities(); }
  RelationId n_relations() const { return vocab_.n_relations(); }
  std::size_t n_triples() const { return triples_.size(); }

  /// N1+[v]: (r, o) pairs over triples (v, r, o), in triple order.
  const std::vector<Neighbor>& out_neighbors(EntityId v) const;
  /// N1-[v]: (r, s) pairs over triples (s, r, v), in triple order.
  const std::vector<Neighbor>& in_neighbors(EntityId v) const;

  bool contains(const Triple& t) const;

 private:
  Vocabulary vocab_;
  std::vector<Triple> triples_;
  std::vector<std::vector<Neighbor>> out_nbrs_;
  std::vector<std::vector<Neighbor>> in_nbrs_;
  bool reciprocal_flag_ = false;
};

struct LoadOptions {
  // When set, relation labels must already exist (inductive test graphs share
  // the training relation vocabulary). Entities are always assigned fresh ids.
  const Vocabulary* frozen_relations = nullptr;
  // When set, both entity and relation labels must exist (valid/test splits).
  const Vocabulary* frozen_vocab = nullptr;
};

/// Parse tab-separated "subject\trelation\tobject" lines (UTF-8, LF or CRLF).
/// Duplicates are dropped; self-loops and malformed lines raise ConfigError
/// with the offending line number.
KnowledgeGraph load_triples(const std::string& text, const LoadOptions& opts = {});
KnowledgeGraph load_triples_file(const std::string& path, const LoadOptions& opts = {});

/// Triple list parsed against an existing vocabulary (evaluation splits).
std::vector<Triple> load_triple_list(const std::string& text, const Vocabulary& vocab);
std::vector<Triple> load_triple_list_file(const std::string& path, const Vocabulary& vocab);

/// One line per triple, in triple order; reloading reproduces the graph.
std::string serialize_triples(const KnowledgeGraph& g);

/// For each (v, r, w) adds (w, r + |R|, v); relation labels gain an "_inv"
/// twin. Errors if the graph is already augmented.
KnowledgeGraph add_reciprocals(const KnowledgeGraph& g);

/// (N1+[v], N1-[v]); out-of-range v raises.
std::pair<const std::vector<Neighbor>&, const std::vector<Neighbor>&> neighborhoods(
    const KnowledgeGraph& g, EntityId v);

enum class FeatureSource { RandomFrozen, FileLoaded };

struct NodeFeatures {
  Matrix matrix;  // |E| x K
  FeatureSource source = FeatureSource::RandomFrozen;
  std::uint64_t seed = 0;  // RandomFrozen only
  std::string path;        // FileLoaded only
};

/// Header-free CSV "label,f1,...,fK", one row per entity, any order.
/// Entities absent from the file raise unless fill_seed is given, in which
/// case their rows are frozen seeded draws (Normal(0, 1/sqrt(K))).
NodeFeatures load_features(const std::string& text, const Vocabulary& vocab, Eigen::Index k,
                           std::optional<std::uint64_t> fill_seed = std::nullopt);
NodeFeatures load_features_file(const std::string& path, const Vocabulary& vocab, Eigen::Index k,
                                std::optional<std::uint64_t> fill_seed = std::nullopt);

/// Frozen random features, Normal(0, 1/sqrt(K)).
NodeFeatures make_random_features(EntityId n_entities, Eigen::Index k, std::uint64_t seed);

struct DatasetBundle {
  KnowledgeGraph train;
  std::vector<Triple> valid_triples;
  std::vector<Triple> test_triples;
  std::optional<KnowledgeGraph> inductive_test;
};

/// Validates the GraIL contract: identical relation labels (the training side
/// may already carry reciprocal twins) and disjoint entity labels.
DatasetBundle bind_inductive(KnowledgeGraph train, KnowledgeGraph test);

}  // namespace rfgn
