#include "rfgn/refactor.hpp"

#include "kernel.hpp"

#include <cmath>
#include <vector>

namespace rfgn {

Vector message(ScoreKind kind, ConstRowRef h_v, ConstRowRef psi_r, ConstRowRef h_w, Direction dir,
               Real p_incoming) {
  if (dir == Direction::Outgoing) return grad_score(kind, Slot::Subject, h_v, psi_r, h_w);
  if (p_incoming < 0.0 || p_incoming > 1.0)
    throw ConfigError("incoming message probability outside [0, 1]");
  // Triple (w, r, v): gradient of its score with respect to the object slot.
  return (1.0 - p_incoming) * grad_score(kind, Slot::Object, h_w, psi_r, h_v);
}

Vector global_term(const Scope& scope, const Matrix& states, const Matrix& psi, EntityId v,
                   const DynConfig& cfg) {
  if (v < 0 || v >= scope.n_entities) throw ConfigError("entity id out of range");
  const Eigen::Index k = states.cols();
  Vector acc = Vector::Zero(k);
  if (scope.triples.empty()) return acc;
  for (const Triple& t : scope.triples) {
    if (t.subject == v) {
      const auto ts = detail::triple_softmax(cfg.kind, states, scope, t, psi);
      const Vector weighted = detail::weighted_candidate_row(states, scope.cands, ts.probs);
      acc += grad_score(cfg.kind, Slot::Subject, states.row(v), psi.row(t.relation),
                        weighted.transpose());
    } else if (t.object != v) {
      const Eigen::Index pos = scope.cand_pos[v];
      if (pos < 0) continue;  // P(v | s, r) = 0 outside the candidate set
      const auto ts = detail::triple_softmax(cfg.kind, states, scope, t, psi);
      acc += ts.probs(pos) * ts.object_grad;
    }
  }
  return acc / static_cast<Real>(scope.batch_size());
}

Matrix layer_apply(const Scope& scope, const Matrix& states, const Matrix& psi,
                   const DynConfig& cfg, OptimizerState* opt, Real* mean_nll) {
  if (scope.triples.empty()) throw ConfigError("empty scope");
  if (states.rows() != scope.n_entities) throw ConfigError("states row count mismatch");
  if (cfg.optimizer == OptimizerKind::AdaGrad && opt == nullptr)
    throw ConfigError("AdaGrad requires optimizer state");

  const StepSizes sizes = StepSizes::from_batch(cfg.beta, scope.batch_size());
  const Eigen::Index k = states.cols();
  const std::size_t nt = scope.triples.size();
  const Eigen::Index nc = static_cast<Eigen::Index>(scope.cands.size());

  // One streaming pass over the triples. S accumulates P_t(u) * object_grad_t
  // per candidate u; together with the per-triple scalars this reconstructs
  // n[v] without an |B| x |C| probability matrix.
  Matrix expected_grad(nt, k);  // e_t: expected subject gradient over candidates
  Matrix object_grad(nt, k);    // G_t
  Vector p_gold(nt), p_subj(nt);
  Matrix cand_mass = cfg.include_global_term ? Matrix::Zero(nc, k) : Matrix();
  Real loss_sum = 0;
  for (std::size_t ti = 0; ti < nt; ++ti) {
    const Triple& t = scope.triples[ti];
    if (t.relation < 0 || t.relation >= psi.rows()) throw ConfigError("relation id out of range");
    const auto ts = detail::triple_softmax(cfg.kind, states, scope, t, psi);
    loss_sum += ts.loss;
    const Vector weighted = detail::weighted_candidate_row(states, scope.cands, ts.probs);
    expected_grad.row(ti) = grad_score(cfg.kind, Slot::Subject, states.row(t.subject),
                                       psi.row(t.relation), weighted.transpose());
    object_grad.row(ti) = ts.object_grad;
    p_gold(static_cast<Eigen::Index>(ti)) = ts.probs(ts.gold_pos);
    p_subj(static_cast<Eigen::Index>(ti)) = ts.subj_pos >= 0 ? ts.probs(ts.subj_pos) : 0.0;
    if (cfg.include_global_term)
      cand_mass.noalias() += ts.probs * object_grad.row(ti);
  }
  if (mean_nll) *mean_nll = loss_sum / static_cast<Real>(nt);

  const Real inv_batch = 1.0 / static_cast<Real>(scope.batch_size());
  Matrix next = states;
  for (EntityId v : scope.nodes) {
    Vector aggregated = Vector::Zero(k);
    const Vector reg =
        cfg.lambda > 0 ? n3_gradient(states.row(v), cfg.lambda) : Vector::Zero(k);
    for (std::size_t ti : scope.out_tidx[v]) {
      const Triple& t = scope.triples[ti];
      aggregated += message(cfg.kind, states.row(v), psi.row(t.relation), states.row(t.object),
                            Direction::Outgoing);
      if (cfg.lambda > 0) aggregated -= reg;
    }
    for (std::size_t ti : scope.in_tidx[v]) {
      // Incoming edge (s, r, v): P(v | s, r) is the triple's gold probability.
      aggregated += (1.0 - p_gold(static_cast<Eigen::Index>(ti))) *
                    object_grad.row(ti).transpose();
      if (cfg.lambda > 0) aggregated -= reg;
    }

    Vector global = Vector::Zero(k);
    if (cfg.include_global_term) {
      for (std::size_t ti : scope.out_tidx[v]) global += expected_grad.row(ti).transpose();
      const Eigen::Index pos = scope.cand_pos[v];
      if (pos >= 0) {
        global += cand_mass.row(pos).transpose();
        // cand_mass includes v's own mass in triples where v participates;
        // those triples are outside T^-v and are removed here.
        for (std::size_t ti : scope.out_tidx[v])
          global -= p_subj(static_cast<Eigen::Index>(ti)) * object_grad.row(ti).transpose();
        for (std::size_t ti : scope.in_tidx[v])
          global -= p_gold(static_cast<Eigen::Index>(ti)) * object_grad.row(ti).transpose();
      }
      global *= inv_batch;
    }

    if (cfg.optimizer == OptimizerKind::Sgd) {
      next.row(v) = states.row(v) + sizes.alpha * aggregated.transpose() -
                    sizes.beta * global.transpose();
    } else {
      // alpha * z - beta * n = -alpha * G with G the per-node gradient sum.
      const Vector grad = static_cast<Real>(scope.batch_size()) * global - aggregated;
      opt->ensure_nodes(states.rows(), k);
      auto [rescaled, new_accum] =
          adagrad_rescale(grad, opt->node_accum.row(v).transpose(), cfg.adagrad_eps);
      opt->node_accum.row(v) = new_accum.transpose();
      next.row(v) = states.row(v) - sizes.alpha * rescaled.transpose();
    }
  }
  return next;
}

Real verify_gd_equivalence(const KnowledgeGraph& g, const Matrix& phi, const Matrix& psi,
                           const DynConfig& cfg, int steps) {
  const Scope scope = full_scope(g);
  Matrix oracle = phi;
  Matrix layered = phi;
  OptimizerState oracle_opt, layer_opt;
  Real max_divergence = 0;
  for (int s = 0; s < steps; ++s) {
    oracle = full_gd_step(scope, oracle, psi, cfg, &oracle_opt);
    layered = layer_apply(scope, layered, psi, cfg, &layer_opt);
    max_divergence = std::max(max_divergence, (oracle - layered).cwiseAbs().maxCoeff());
  }
  return max_divergence;
}

}  // namespace rfgn
