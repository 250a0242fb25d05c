#include "rfgn/dynamics.hpp"

#include "kernel.hpp"

#include <cmath>

namespace rfgn {

Vector n3_gradient(ConstRowRef row, Real lambda) {
  if (lambda < 0 || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  Vector g(row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const Real x = row(i);
    const Real sign = (x > 0) - (x < 0);
    g(i) = lambda * sign * x * x;
  }
  return g;
}

std::pair<Vector, Vector> adagrad_rescale(ConstVectorRef grad, ConstVectorRef accum, Real eps) {
  if ((accum.array() < 0).any()) throw ConfigError("adagrad accumulator must be nonnegative");
  Vector new_accum = accum + grad.cwiseProduct(grad);
  Vector rescaled(grad.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i)
    rescaled(i) = grad(i) == 0 ? 0.0 : grad(i) / (std::sqrt(new_accum(i)) + eps);
  return {std::move(rescaled), std::move(new_accum)};
}

namespace {

void check_probs(ConstVectorRef probs) {
  if (std::abs(probs.sum() - 1.0) > 1e-9)
    throw ConfigError("probabilities do not sum to 1 within 1e-9");
}

}  // namespace

Vector edge_delta_subject(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, ConstRowRef hw,
                          const Matrix& states, const CandidateSet& cands, ConstVectorRef probs,
                          Real p_self, Real alpha, GradConvention conv) {
  check_probs(probs);
  const Vector weighted = detail::weighted_candidate_row(states, cands, probs);
  Vector raw = grad_score(kind, Slot::Subject, hv, psi_r, hw) -
               grad_score(kind, Slot::Subject, hv, psi_r, weighted.transpose());
  if (conv == GradConvention::StrictAutograd && p_self != 0.0)
    raw -= p_self * grad_score(kind, Slot::Object, hv, psi_r, hv);
  return alpha * raw;
}

Vector edge_delta_object(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, Real p_w, Real alpha) {
  const Real scale = alpha * (1.0 - p_w);
  return scale * grad_score(kind, Slot::Object, hv, psi_r, hv);
}

Vector edge_delta_nonparticipant(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, Real p_u,
                                 Real alpha) {
  const Real scale = -(alpha * p_u);
  return scale * grad_score(kind, Slot::Object, hv, psi_r, hv);
}

Vector edge_update_subject(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, ConstRowRef hw,
                           const Matrix& states, const CandidateSet& cands, ConstVectorRef probs,
                           Real p_self, Real alpha, GradConvention conv) {
  return hv.transpose() +
         edge_delta_subject(kind, hv, psi_r, hw, states, cands, probs, p_self, alpha, conv);
}

Vector edge_update_object(ScoreKind kind, ConstRowRef hw, ConstRowRef psi_r, ConstRowRef hv,
                          Real p_w, Real alpha) {
  return hw.transpose() + edge_delta_object(kind, hv, psi_r, p_w, alpha);
}

Vector edge_update_nonparticipant(ScoreKind kind, ConstRowRef hu, ConstRowRef psi_r,
                                  ConstRowRef hv, Real p_u, Real alpha) {
  return hu.transpose() + edge_delta_nonparticipant(kind, hv, psi_r, p_u, alpha);
}

Matrix full_gd_step(const Scope& scope, const Matrix& states, const Matrix& psi,
                    const DynConfig& cfg, OptimizerState* opt, Real* mean_nll) {
  if (scope.triples.empty()) throw ConfigError("empty scope");
  if (states.rows() != scope.n_entities) throw ConfigError("states row count mismatch");
  if (cfg.optimizer == OptimizerKind::AdaGrad && opt == nullptr)
    throw ConfigError("AdaGrad requires optimizer state");

  const StepSizes sizes = StepSizes::from_batch(cfg.beta, scope.batch_size());
  const Eigen::Index k = states.cols();
  const bool adagrad = cfg.optimizer == OptimizerKind::AdaGrad;
  // SGD accumulates the already-scaled per-edge deltas so that the step is
  // bit-identical to the edge view; AdaGrad needs the raw gradient sum for
  // its accumulator and applies alpha after rescaling.
  Matrix acc = Matrix::Zero(scope.n_entities, k);
  Real loss_sum = 0;

  for (const Triple& t : scope.triples) {
    if (t.relation < 0 || t.relation >= psi.rows()) throw ConfigError("relation id out of range");
    const auto ts = detail::triple_softmax(cfg.kind, states, scope, t, psi);
    loss_sum += ts.loss;
    const Real p_self = ts.subj_pos >= 0 ? ts.probs(ts.subj_pos) : 0.0;
    const Real p_gold = ts.probs(ts.gold_pos);
    const Real alpha = adagrad ? -1.0 : sizes.alpha;  // raw gradients carry -1

    acc.row(t.subject) += edge_delta_subject(cfg.kind, states.row(t.subject), psi.row(t.relation),
                                             states.row(t.object), states, scope.cands, ts.probs,
                                             p_self, alpha, cfg.convention);
    acc.row(t.object) +=
        edge_delta_object(cfg.kind, states.row(t.subject), psi.row(t.relation), p_gold, alpha);
    for (std::size_t i = 0; i < scope.cands.ids.size(); ++i) {
      const EntityId u = scope.cands.ids[i];
      if (u == t.subject || u == t.object) continue;
      const Real scale = -(alpha * ts.probs(static_cast<Eigen::Index>(i)));
      acc.row(u) += scale * ts.object_grad.transpose();
    }
    if (cfg.lambda > 0) {
      // One regulariser term per triple participation, mirroring the
      // per-message form on the layer side.
      acc.row(t.subject) -=
          alpha * n3_gradient(states.row(t.subject), cfg.lambda).transpose();
      acc.row(t.object) -= alpha * n3_gradient(states.row(t.object), cfg.lambda).transpose();
    }
  }

  if (mean_nll) *mean_nll = loss_sum / static_cast<Real>(scope.batch_size());

  Matrix next = states;
  if (!adagrad) {
    next += acc;
    return next;
  }
  opt->ensure_nodes(states.rows(), k);
  for (EntityId v : scope.nodes) {
    // acc holds -alpha * delta with alpha = -1, i.e. the raw gradient sum.
    auto [rescaled, new_accum] = adagrad_rescale(acc.row(v).transpose(),
                                                 opt->node_accum.row(v).transpose(),
                                                 cfg.adagrad_eps);
    opt->node_accum.row(v) = new_accum.transpose();
    next.row(v) -= sizes.alpha * rescaled.transpose();
  }
  return next;
}

}  // namespace rfgn
