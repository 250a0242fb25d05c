#pragma once

// Internal per-triple machinery shared by the gradient-descent oracle, the
// message-passing layer and the relation update. Not installed.

#include "rfgn/scope.hpp"
#include "rfgn/scoring.hpp"
#include "rfgn/types.hpp"

namespace rfgn::detail {

struct TripleSoftmax {
  Vector probs;        // over scope.cands
  Real loss;           // -log P(gold)
  Eigen::Index gold_pos;
  Eigen::Index subj_pos;  // -1 when the subject is not a candidate
  Vector object_grad;     // dGamma/dObject at (v, r, .), independent of the object
};

/// sum_u P(u) * states[u] over the candidate set, in candidate order.
inline Vector weighted_candidate_row(const Matrix& states, const CandidateSet& cands,
                                     ConstVectorRef probs) {
  Vector w = Vector::Zero(states.cols());
  for (std::size_t i = 0; i < cands.ids.size(); ++i)
    w += probs(static_cast<Eigen::Index>(i)) * states.row(cands.ids[i]).transpose();
  return w;
}

inline TripleSoftmax triple_softmax(ScoreKind kind, const Matrix& states, const Scope& scope,
                                    const Triple& t, const Matrix& psi) {
  TripleSoftmax out;
  out.object_grad = grad_score(kind, Slot::Object, states.row(t.subject), psi.row(t.relation),
                               states.row(t.subject));
  const Eigen::Index n = static_cast<Eigen::Index>(scope.cands.size());
  Vector scores(n);
  for (Eigen::Index i = 0; i < n; ++i)
    scores(i) = states.row(scope.cands.ids[static_cast<std::size_t>(i)]) * out.object_grad;
  out.gold_pos = scope.cand_pos[t.object];
  if (out.gold_pos < 0) throw ConfigError("gold object missing from candidate set");
  out.subj_pos = scope.cand_pos[t.subject];
  auto sm = softmax_nll(scores, out.gold_pos);
  out.probs = std::move(sm.probabilities);
  out.loss = sm.loss;
  return out;
}

}  // namespace rfgn::detail
