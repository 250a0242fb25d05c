#include "rfgn/graph.hpp"
#include "rfgn/random_graph.hpp"
#include "rfgn/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace rfgn;

TEST_CASE("load_triples builds vocab and indices in file order") {
  const auto g = load_triples("a\tr1\tb\nb\tr2\tc");
  CHECK(g.n_entities() == 3);
  CHECK(g.n_relations() == 2);
  CHECK(g.n_triples() == 2);
  CHECK(g.vocab().entity_label(0) == "a");
  CHECK(g.vocab().entity_label(1) == "b");
  CHECK(g.vocab().relation_label(0) == "r1");
  REQUIRE(g.out_neighbors(0).size() == 1);
  CHECK(g.out_neighbors(0)[0] == Neighbor{0, 1});
}

TEST_CASE("load_triples empty input") {
  const auto g = load_triples("");
  CHECK(g.n_entities() == 0);
  CHECK(g.n_triples() == 0);
}

TEST_CASE("load_triples rejects self-loops with the line number") {
  CHECK_THROWS_WITH_AS(load_triples("x\tr\ty\na\tr\ta"), doctest::Contains("line 2"),
                       ConfigError);
}

TEST_CASE("load_triples rejects malformed lines") {
  CHECK_THROWS_WITH_AS(load_triples("a\tb"), doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(load_triples("a\tb\tc\td"), doctest::Contains("three"), ConfigError);
}

TEST_CASE("load_triples deduplicates and accepts CRLF") {
  const auto g = load_triples("a\tr\tb\r\na\tr\tb\nb\tr\ta\r\n");
  CHECK(g.n_triples() == 2);
}

TEST_CASE("load_triples with frozen relations rejects unseen relation labels") {
  const auto train = load_triples("a\tr1\tb");
  LoadOptions opts;
  opts.frozen_relations = &train.vocab();
  const auto ok = load_triples("x\tr1\ty", opts);
  CHECK(ok.n_entities() == 2);
  CHECK(ok.vocab().relation_label(0) == "r1");
  CHECK_THROWS_AS(load_triples("x\tr2\ty", opts), ConfigError);
}

TEST_CASE("load_triple_list requires known labels") {
  const auto train = load_triples("a\tr\tb");
  CHECK(load_triple_list("a\tr\tb", train.vocab()).size() == 1);
  CHECK_THROWS_AS(load_triple_list("a\tr\tz", train.vocab()), ConfigError);
}

TEST_CASE("add_reciprocals doubles relations and mirrors triples") {
  auto g = testing::graph_from(3, 2, {{0, 1, 2}});
  const auto aug = add_reciprocals(g);
  CHECK(aug.n_relations() == 4);
  CHECK(aug.n_triples() == 2);
  CHECK(aug.triples()[0] == Triple{0, 1, 2});
  CHECK(aug.triples()[1] == Triple{2, 3, 0});
  CHECK(aug.vocab().relation_label(3) == "r1_inv");
  CHECK(aug.reciprocal_flag());
  CHECK_THROWS_AS(add_reciprocals(aug), ConfigError);
}

TEST_CASE("add_reciprocals on an empty graph") {
  const auto aug = add_reciprocals(KnowledgeGraph());
  CHECK(aug.n_relations() == 0);
  CHECK(aug.n_triples() == 0);
  CHECK(aug.reciprocal_flag());
}

TEST_CASE("reciprocal symmetry: every node has equal in and out degree") {
  Rng rng(123);
  for (int i = 0; i < 25; ++i) {
    const auto inst = make_random_instance(rng, ScoreKind::DistMult);
    const auto aug = add_reciprocals(inst.graph);
    for (EntityId v = 0; v < aug.n_entities(); ++v)
      CHECK(aug.out_neighbors(v).size() == aug.in_neighbors(v).size());
  }
}

TEST_CASE("neighborhoods") {
  const auto g = testing::graph_from(3, 1, {{0, 0, 1}, {2, 0, 0}});
  const auto& [out, in] = neighborhoods(g, 0);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Neighbor{0, 1});
  REQUIRE(in.size() == 1);
  CHECK(in[0] == Neighbor{0, 2});

  const auto g2 = testing::graph_from(3, 1, {{0, 0, 1}});
  CHECK(g2.out_neighbors(2).empty());
  CHECK(g2.in_neighbors(2).empty());

  const auto aug = add_reciprocals(g2);
  CHECK(aug.out_neighbors(0).size() == 1);
  CHECK(aug.out_neighbors(0)[0] == Neighbor{0, 1});
  REQUIRE(aug.in_neighbors(0).size() == 1);
  CHECK(aug.in_neighbors(0)[0] == Neighbor{1, 1});

  CHECK_THROWS_AS(neighborhoods(g, 5), ConfigError);
  CHECK_THROWS_AS(neighborhoods(g, -1), ConfigError);
}

TEST_CASE("neighborhood consistency against the triple set") {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto inst = make_random_instance(rng, ScoreKind::DistMult);
    const auto& g = inst.graph;
    std::size_t out_total = 0, in_total = 0;
    for (EntityId v = 0; v < g.n_entities(); ++v) {
      out_total += g.out_neighbors(v).size();
      in_total += g.in_neighbors(v).size();
      for (const Neighbor& nb : g.out_neighbors(v)) {
        CHECK(g.contains({v, nb.relation, nb.node}));
        const auto& back = g.in_neighbors(nb.node);
        CHECK(std::find(back.begin(), back.end(), Neighbor{nb.relation, v}) != back.end());
      }
    }
    CHECK(out_total == g.n_triples());
    CHECK(in_total == g.n_triples());
  }
}

TEST_CASE("serialize and reload round trip") {
  Rng rng(99);
  for (int i = 0; i < 10; ++i) {
    const auto inst = make_random_instance(rng, ScoreKind::DistMult);
    const auto reloaded = load_triples(serialize_triples(inst.graph));
    CHECK(reloaded.vocab().entity_labels() == inst.graph.vocab().entity_labels());
    CHECK(reloaded.vocab().relation_labels() == inst.graph.vocab().relation_labels());
    CHECK(reloaded.triples() == inst.graph.triples());
    for (EntityId v = 0; v < inst.graph.n_entities(); ++v) {
      CHECK(reloaded.out_neighbors(v) == inst.graph.out_neighbors(v));
      CHECK(reloaded.in_neighbors(v) == inst.graph.in_neighbors(v));
    }
  }
}

TEST_CASE("load_features") {
  Vocabulary vocab;
  vocab.add_entity("a");
  vocab.add_entity("b");
  vocab.add_entity("c");

  SUBCASE("complete file") {
    const auto f = load_features("a,1.0,2.0\nb,3.0,4.0\nc,5.5,-1.25", vocab, 2);
    REQUIRE(f.matrix.rows() == 3);
    CHECK(f.matrix(0, 1) == 2.0);
    CHECK(f.matrix(2, 1) == -1.25);
  }
  SUBCASE("missing entity without fill names the entity") {
    CHECK_THROWS_WITH_AS(load_features("a,1,2\nb,3,4", vocab, 2), doctest::Contains("c"),
                         ConfigError);
  }
  SUBCASE("fill-random is deterministic per seed") {
    const auto f1 = load_features("a,1,2", vocab, 2, 42u);
    const auto f2 = load_features("a,1,2", vocab, 2, 42u);
    CHECK(f1.matrix == f2.matrix);
    const auto f3 = load_features("a,1,2", vocab, 2, 43u);
    CHECK(f1.matrix.row(1) != f3.matrix.row(1));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(load_features("a,1\nb,3,4\nc,5,6", vocab, 2), ConfigError);
  }
  SUBCASE("non-finite value") {
    CHECK_THROWS_AS(load_features("a,1,inf\nb,3,4\nc,5,6", vocab, 2), ConfigError);
  }
  SUBCASE("unknown label") {
    CHECK_THROWS_AS(load_features("z,1,2", vocab, 2), ConfigError);
  }
}

TEST_CASE("bind_inductive") {
  const auto train = load_triples("a\tr1\tb\nb\tr2\tc");
  LoadOptions opts;
  opts.frozen_relations = &train.vocab();

  SUBCASE("valid pair") {
    const auto test = load_triples("x\tr1\ty", opts);
    const auto bundle = bind_inductive(train, test);
    REQUIRE(bundle.inductive_test.has_value());
    CHECK(bundle.inductive_test->n_entities() == 2);
  }
  SUBCASE("entity overlap rejected") {
    CHECK_THROWS_WITH_AS(bind_inductive(train, train), doctest::Contains("entity"), ConfigError);
  }
  SUBCASE("relation vocabulary mismatch rejected") {
    const auto other = load_triples("x\tother\ty");
    CHECK_THROWS_AS(bind_inductive(train, other), ConfigError);
  }
  SUBCASE("augmented training side still matches") {
    const auto test = load_triples("x\tr1\ty", opts);
    const auto bundle = bind_inductive(add_reciprocals(train), test);
    CHECK(bundle.train.reciprocal_flag());
  }
}
