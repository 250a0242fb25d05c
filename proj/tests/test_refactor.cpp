#include "rfgn/refactor.hpp"
#include "rfgn/random_graph.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace rfgn;

TEST_CASE("message values") {
  Matrix hv(1, 1), psi(1, 1), hw(1, 1);
  psi << 1.0;

  SUBCASE("outgoing is the subject-slot score gradient") {
    hv << 7.0;
    hw << 2.0;
    const Vector m =
        message(ScoreKind::DistMult, hv.row(0), psi.row(0), hw.row(0), Direction::Outgoing);
    CHECK(m(0) == 2.0);
  }
  SUBCASE("incoming is damped by the gold probability") {
    const testing::TwoEntity inst;
    hv << 2.0;  // central node (the object of the edge)
    hw << 1.0;  // neighbour (the subject)
    const Vector m = message(ScoreKind::DistMult, hv.row(0), psi.row(0), hw.row(0),
                             Direction::Incoming, inst.p1);
    CHECK(m(0) == doctest::Approx(1.0 - inst.p1).epsilon(1e-14));
    CHECK(m(0) == doctest::Approx(0.268941).epsilon(1e-6));
  }
  SUBCASE("saturated probability zeroes the message") {
    hv << 3.0;
    hw << 4.0;
    const Vector m =
        message(ScoreKind::DistMult, hv.row(0), psi.row(0), hw.row(0), Direction::Incoming, 1.0);
    CHECK(m.isZero(0));
  }
  SUBCASE("probability outside the unit interval is rejected") {
    CHECK_THROWS_AS(
        message(ScoreKind::DistMult, hv.row(0), psi.row(0), hw.row(0), Direction::Incoming, 1.5),
        ConfigError);
    CHECK_THROWS_AS(
        message(ScoreKind::DistMult, hv.row(0), psi.row(0), hw.row(0), Direction::Incoming, -0.1),
        ConfigError);
  }
}

TEST_CASE("global term on the worked instance") {
  const testing::TwoEntity inst;
  const Scope scope = full_scope(inst.graph);
  DynConfig cfg;
  cfg.beta = 1.0;

  const Vector n0 = global_term(scope, inst.phi, inst.psi, 0, cfg);
  CHECK(n0(0) == doctest::Approx(inst.p0 * 1.0 + inst.p1 * 2.0).epsilon(1e-14));
  CHECK(n0(0) == doctest::Approx(1.731059).epsilon(1e-6));

  const Vector n1 = global_term(scope, inst.phi, inst.psi, 1, cfg);
  CHECK(n1.isZero(0));
}

TEST_CASE("global term of an isolated absent node is zero") {
  const auto g = testing::graph_from(4, 1, {{0, 0, 1}, {1, 0, 2}});
  const Scope scope = full_scope(g);
  Matrix phi = Matrix::Ones(4, 2);
  Matrix psi = Matrix::Ones(1, 2);
  DynConfig cfg;
  // Node 3 never appears in a triple, but it is a candidate, so only the
  // T^-v part can contribute; check the fully-empty variant too.
  const auto g_empty = testing::graph_from(2, 1, {{0, 0, 1}});
  const Scope s2 = full_scope(g_empty);
  Matrix phi2 = Matrix::Ones(2, 2);
  CHECK(global_term(s2, phi2, psi, 1, cfg).isZero(0));  // N1+[1] empty, T^-1 empty
  CHECK(global_term(scope, phi, psi, 3, cfg).size() == 2);
}

TEST_CASE("layer_apply equals the gradient-descent oracle on the worked instance") {
  const testing::TwoEntity inst;
  const Scope scope = full_scope(inst.graph);
  DynConfig cfg;
  cfg.beta = 1.0;

  const Matrix h = layer_apply(scope, inst.phi, inst.psi, cfg);
  CHECK(h(0, 0) == doctest::Approx(1.268941).epsilon(1e-6));
  CHECK(h(1, 0) == doctest::Approx(2.268941).epsilon(1e-6));

  const Matrix oracle = full_gd_step(scope, inst.phi, inst.psi, cfg);
  CHECK((h - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero step sizes are the identity") {
  const testing::TwoEntity inst;
  const Scope scope = full_scope(inst.graph);
  DynConfig cfg;
  cfg.beta = 0.0;
  CHECK(layer_apply(scope, inst.phi, inst.psi, cfg) == inst.phi);
}

TEST_CASE("ablation identity: no global term means messages only") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const ScoreKind kind = trial % 2 ? ScoreKind::Complex : ScoreKind::DistMult;
    const auto inst = make_random_instance(rng, kind);
    const Scope scope = full_scope(inst.graph);
    DynConfig cfg;
    cfg.kind = kind;
    cfg.beta = 0.7;
    cfg.include_global_term = false;
    const Real alpha = cfg.beta / static_cast<Real>(scope.batch_size());

    const Matrix h = layer_apply(scope, inst.phi, inst.psi, cfg);

    // Reconstruct h[v] + alpha * sum of messages with the public message op.
    Matrix expected = inst.phi;
    for (EntityId v = 0; v < inst.graph.n_entities(); ++v) {
      Vector z = Vector::Zero(inst.phi.cols());
      for (const Neighbor& nb : inst.graph.out_neighbors(v))
        z += message(kind, inst.phi.row(v), inst.psi.row(nb.relation), inst.phi.row(nb.node),
                     Direction::Outgoing);
      for (const Neighbor& nb : inst.graph.in_neighbors(v)) {
        const Vector scores = score_all(kind, inst.phi.row(nb.node), inst.psi.row(nb.relation),
                                        inst.phi, scope.cands);
        const auto sm = softmax_nll(scores, scope.cand_pos[v]);
        z += message(kind, inst.phi.row(v), inst.psi.row(nb.relation), inst.phi.row(nb.node),
                     Direction::Incoming, sm.probabilities(scope.cand_pos[v]));
      }
      expected.row(v) += alpha * z.transpose();
    }
    CHECK((h - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("layer global part matches the per-node global_term op") {
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const ScoreKind kind = trial % 2 ? ScoreKind::Complex : ScoreKind::DistMult;
    const auto inst = make_random_instance(rng, kind);
    const Scope scope = full_scope(inst.graph);
    DynConfig cfg;
    cfg.kind = kind;
    cfg.beta = 0.7;
    DynConfig no_global = cfg;
    no_global.include_global_term = false;

    const Matrix with = layer_apply(scope, inst.phi, inst.psi, cfg);
    const Matrix without = layer_apply(scope, inst.phi, inst.psi, no_global);
    for (EntityId v = 0; v < inst.graph.n_entities(); ++v) {
      const Vector n = global_term(scope, inst.phi, inst.psi, v, cfg);
      const Vector diff = (without.row(v) - with.row(v)).transpose() / cfg.beta;
      CHECK((diff - n).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("edge view sums to the node view") {
  Rng rng(57);
  for (int trial = 0; trial < 10; ++trial) {
    const ScoreKind kind = trial % 2 ? ScoreKind::Complex : ScoreKind::DistMult;
    const auto inst = make_random_instance(rng, kind);
    const Scope scope = full_scope(inst.graph);
    DynConfig cfg;
    cfg.kind = kind;
    cfg.beta = 0.4;
    cfg.lambda = trial % 3 ? 0.0 : 0.05;

    const Matrix node_view = layer_apply(scope, inst.phi, inst.psi, cfg);
    const Matrix edge_view = full_gd_step(scope, inst.phi, inst.psi, cfg);
    CHECK((node_view - edge_view).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("messages are local: a neighbourhood-only candidate set isolates v") {
  // Batch scope whose candidates are exactly v's closed neighbourhood; rows
  // outside it cannot influence h'[v] when the global term is off.
  const auto g = testing::graph_from(5, 2, {{0, 0, 1}, {2, 1, 0}, {3, 0, 4}});
  std::vector<Triple> incident = {{0, 0, 1}, {2, 1, 0}};
  CandidateSet cands;
  cands.ids = {0, 1, 2};
  const Scope scope = batch_scope(5, incident, cands);

  Rng rng(61);
  Matrix phi = rng.normal_matrix(5, 3, 1.0);
  Matrix psi = rng.normal_matrix(2, 3, 1.0);
  DynConfig cfg;
  cfg.beta = 0.3;
  cfg.include_global_term = false;

  const Matrix base = layer_apply(scope, phi, psi, cfg);
  Matrix zeroed = phi;
  zeroed.row(3).setZero();
  zeroed.row(4).setZero();
  const Matrix after = layer_apply(scope, zeroed, psi, cfg);
  CHECK(base.row(0) == after.row(0));
}

TEST_CASE("aggregation is order independent up to rounding") {
  Rng rng(63);
  const auto inst = make_random_instance(rng, ScoreKind::DistMult, {8, 3, 20, 6});
  DynConfig cfg;
  cfg.beta = 0.5;

  std::vector<Triple> reversed(inst.graph.triples().rbegin(), inst.graph.triples().rend());
  const KnowledgeGraph permuted(inst.graph.vocab(), reversed);

  const Matrix a = layer_apply(full_scope(inst.graph), inst.phi, inst.psi, cfg);
  const Matrix b = layer_apply(full_scope(permuted), inst.phi, inst.psi, cfg);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);

  // Same order twice is exactly reproducible.
  const Matrix c = layer_apply(full_scope(inst.graph), inst.phi, inst.psi, cfg);
  CHECK(a == c);
}

TEST_CASE("verify_gd_equivalence on the worked instance and a small sweep") {
  const testing::TwoEntity inst;
  DynConfig cfg;
  cfg.beta = 1.0;
  CHECK(verify_gd_equivalence(inst.graph, inst.phi, inst.psi, cfg, 1) <= 1e-12);

  const SweepResult sweep = equivalence_sweep(17, 10, 5);
  CHECK(sweep.graphs == 10);
  CHECK(sweep.max_divergence <= 1e-9);
}

TEST_CASE("strict autograd diverges when the subject is its own candidate") {
  const testing::TwoEntity inst;
  DynConfig cfg;
  cfg.beta = 1.0;
  cfg.convention = GradConvention::StrictAutograd;
  const Real divergence = verify_gd_equivalence(inst.graph, inst.phi, inst.psi, cfg, 1);
  // The self-candidate object-slot flow alpha * P(v) * psi * phi[v] ~ 0.27.
  CHECK(divergence > 1e-6);
  CHECK(divergence == doctest::Approx(inst.p0 * 1.0 * 1.0).epsilon(1e-9));
}
