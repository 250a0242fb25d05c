#include "rfgn/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace rfgn {

namespace {

std::uint64_t query_key(EntityId s, RelationId r) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) |
         static_cast<std::uint32_t>(r);
}

int thread_budget() {
  if (const char* env = std::getenv("RFGN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int threads = std::min<int>(thread_budget(), static_cast<int>(n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < n;
           i += static_cast<std::size_t>(threads))
        fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string format_real(Real v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

void FilterIndex::add(std::span<const Triple> triples,
                      std::optional<RelationId> reciprocal_base) {
  for (const Triple& t : triples) {
    by_query_[query_key(t.subject, t.relation)].push_back(t.object);
    if (reciprocal_base)
      by_query_[query_key(t.object, static_cast<RelationId>(t.relation + *reciprocal_base))]
          .push_back(t.subject);
  }
}

bool FilterIndex::contains(EntityId subject, RelationId relation, EntityId object) const {
  const auto it = by_query_.find(query_key(subject, relation));
  if (it == by_query_.end()) return false;
  return std::find(it->second.begin(), it->second.end(), object) != it->second.end();
}

const std::vector<EntityId>* FilterIndex::objects(EntityId subject, RelationId relation) const {
  const auto it = by_query_.find(query_key(subject, relation));
  return it == by_query_.end() ? nullptr : &it->second;
}

Real rank_query(const Matrix& states, const Matrix& psi, ScoreKind kind, const Triple& query,
                const Protocol& protocol, const FilterIndex& filter, Rng& rng) {
  protocol.validate();
  const EntityId n = static_cast<EntityId>(states.rows());
  if (query.subject < 0 || query.subject >= n || query.object < 0 || query.object >= n)
    throw ConfigError("query entity out of range");
  if (query.relation < 0 || query.relation >= psi.rows())
    throw ConfigError("query relation out of range");

  std::vector<EntityId> pool;
  if (protocol.mode == RankingMode::Full) {
    pool.resize(n);
    for (EntityId u = 0; u < n; ++u) pool[u] = u;
  } else {
    pool.push_back(query.object);
    if (n < 2) throw ConfigError("partial ranking needs at least two entities");
    const int want = std::min<int>(protocol.partial_negatives, n - 1);
    std::unordered_set<EntityId> drawn;
    while (static_cast<int>(drawn.size()) < want) {
      const EntityId u = static_cast<EntityId>(rng.uniform(n));
      if (u == query.object) continue;
      if (drawn.insert(u).second) pool.push_back(u);
    }
  }

  const Vector reference =
      grad_score(kind, Slot::Object, states.row(query.subject), psi.row(query.relation),
                 states.row(query.subject));
  const Real gold_score = states.row(query.object) * reference;

  std::size_t better = 0, tied = 0;
  bool gold_seen = false;
  for (EntityId u : pool) {
    if (u == query.object) {
      gold_seen = true;
      continue;
    }
    if (protocol.filtered && filter.contains(query.subject, query.relation, u)) continue;
    const Real s = states.row(u) * reference;
    if (s > gold_score)
      ++better;
    else if (s == gold_score)
      ++tied;
  }
  if (!gold_seen) throw ConfigError("gold filtered out of the candidate pool");
  return 1.0 + static_cast<Real>(better) + static_cast<Real>(tied) / 2.0;
}

Metrics metrics_from_ranks(std::span<const Real> ranks) {
  if (ranks.empty()) throw ConfigError("no ranks to aggregate");
  Metrics m;
  m.n_queries = ranks.size();
  for (Real r : ranks) {
    if (r < 1.0) throw ConfigError("rank below 1");
    m.mrr += 1.0 / r;
    m.hits1 += r <= 1.0;
    m.hits3 += r <= 3.0;
    m.hits10 += r <= 10.0;
  }
  const Real n = static_cast<Real>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

Metrics evaluate(const Matrix& states, const Matrix& psi, std::span<const Triple> queries,
                 const EvalOptions& options, const FilterIndex& filter) {
  if (queries.empty()) throw ConfigError("no evaluation queries");
  const std::size_t per_query = options.reciprocal_base ? 2 : 1;
  std::vector<Real> ranks(queries.size() * per_query);
  parallel_for(queries.size(), [&](std::size_t i) {
    const Triple& q = queries[i];
    Rng fwd = Rng::stream(options.seed, "eval/" + std::to_string(2 * i));
    ranks[per_query * i] =
        rank_query(states, psi, options.kind, q, options.protocol, filter, fwd);
    if (options.reciprocal_base) {
      const Triple inverse{q.object, static_cast<RelationId>(q.relation + *options.reciprocal_base),
                           q.subject};
      Rng bwd = Rng::stream(options.seed, "eval/" + std::to_string(2 * i + 1));
      ranks[per_query * i + 1] =
          rank_query(states, psi, options.kind, inverse, options.protocol, filter, bwd);
    }
  });
  return metrics_from_ranks(ranks);
}

std::string metrics_to_json(const Metrics& m, const Protocol& protocol) {
  std::ostringstream out;
  out << "{\"filtered\": " << (protocol.filtered ? "true" : "false")
      << ", \"hits@1\": " << format_real(m.hits1) << ", \"hits@10\": " << format_real(m.hits10)
      << ", \"hits@3\": " << format_real(m.hits3) << ", \"mrr\": " << format_real(m.mrr)
      << ", \"n_queries\": " << m.n_queries << ", \"protocol\": \"" << protocol.name() << "\"}";
  return out.str();
}

void emit_metrics(const Metrics& m, const Protocol& protocol, const std::string& json_path) {
  {
    std::ofstream out(json_path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + json_path);
    out << metrics_to_json(m, protocol) << '\n';
  }
  const auto csv_path = std::filesystem::path(json_path).parent_path() / "results.csv";
  const bool fresh = !std::filesystem::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::app);
  if (!csv) throw ConfigError("cannot write " + csv_path.string());
  if (fresh) csv << "protocol,filtered,mrr,hits@1,hits@3,hits@10,n_queries\n";
  csv << protocol.name() << ',' << (protocol.filtered ? 1 : 0) << ',' << format_real(m.mrr) << ','
      << format_real(m.hits1) << ',' << format_real(m.hits3) << ',' << format_real(m.hits10) << ','
      << m.n_queries << '\n';
}

Metrics metrics_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Metrics m;
  m.mrr = j.at("mrr").get<Real>();
  m.hits1 = j.at("hits@1").get<Real>();
  m.hits3 = j.at("hits@3").get<Real>();
  m.hits10 = j.at("hits@10").get<Real>();
  m.n_queries = j.at("n_queries").get<std::size_t>();
  return m;
}

}  // namespace rfgn
