#pragma once

#include "rfgn/types.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rfgn {

enum class ScoreKind { DistMult, Complex };

enum class Slot { Subject, Relation, Object };

/// Ordered, duplicate-free entity ids the softmax normalises over.
struct CandidateSet {
  std::vector<EntityId> ids;

  static CandidateSet all(EntityId n_entities) {
    CandidateSet c;
    c.ids.resize(n_entities);
    for (EntityId i = 0; i < n_entities; ++i) c.ids[i] = i;
    return c;
  }

  void validate() const {
    if (ids.empty()) throw ConfigError("empty candidate set");
    std::unordered_set<EntityId> seen;
    for (EntityId id : ids)
      if (!seen.insert(id).second) throw ConfigError("duplicate candidate id");
  }

  std::size_t size() const { return ids.size(); }
};

inline void check_dims(ScoreKind kind, Eigen::Index hv, Eigen::Index psi, Eigen::Index hw) {
  if (hv != psi || hv != hw) throw ConfigError("score: vector dimensions disagree");
  if (kind == ScoreKind::Complex && hv % 2 != 0)
    throw ConfigError("ComplEx requires an even hidden size");
}

/// Gamma(v, r, w). DistMult: tri-linear dot product. ComplEx rows are
/// [real | imaginary] halves.
inline Real score(ScoreKind kind, ConstRowRef hv, ConstRowRef psi, ConstRowRef hw) {
  check_dims(kind, hv.size(), psi.size(), hw.size());
  if (kind == ScoreKind::DistMult) return (hv.array() * psi.array() * hw.array()).sum();
  const Eigen::Index d = hv.size() / 2;
  const auto vre = hv.head(d).array(), vim = hv.tail(d).array();
  const auto wre = hw.head(d).array(), wim = hw.tail(d).array();
  const auto pre = psi.head(d).array(), pim = psi.tail(d).array();
  return (pre * vre * wre).sum() + (pre * vim * wim).sum() + (pim * vre * wim).sum() -
         (pim * vim * wre).sum();
}

/// d Gamma / d <slot>. The Object slot gradient does not depend on the object
/// row and the Subject slot gradient is linear in the object row; callers rely
/// on both properties.
inline Vector grad_score(ScoreKind kind, Slot slot, ConstRowRef hv, ConstRowRef psi,
                         ConstRowRef hw) {
  check_dims(kind, hv.size(), psi.size(), hw.size());
  const Eigen::Index k = hv.size();
  Vector g(k);
  if (kind == ScoreKind::DistMult) {
    switch (slot) {
      case Slot::Subject: g = (psi.array() * hw.array()).transpose(); break;
      case Slot::Object: g = (psi.array() * hv.array()).transpose(); break;
      case Slot::Relation: g = (hv.array() * hw.array()).transpose(); break;
    }
    return g;
  }
  const Eigen::Index d = k / 2;
  const auto vre = hv.head(d).array(), vim = hv.tail(d).array();
  const auto wre = hw.head(d).array(), wim = hw.tail(d).array();
  const auto pre = psi.head(d).array(), pim = psi.tail(d).array();
  switch (slot) {
    case Slot::Subject:
      g.head(d) = (pre * wre + pim * wim).transpose();
      g.tail(d) = (pre * wim - pim * wre).transpose();
      break;
    case Slot::Object:
      g.head(d) = (pre * vre - pim * vim).transpose();
      g.tail(d) = (pre * vim + pim * vre).transpose();
      break;
    case Slot::Relation:
      g.head(d) = (vre * wre + vim * wim).transpose();
      g.tail(d) = (vre * wim - vim * wre).transpose();
      break;
  }
  return g;
}

/// Scores of (v, r, u) for u over the candidate set, in candidate order.
inline Vector score_all(ScoreKind kind, ConstRowRef hv, ConstRowRef psi, const Matrix& states,
                        const CandidateSet& cands) {
  if (cands.ids.empty()) throw ConfigError("empty candidate set");
  // Multilinearity: Gamma(v, r, u) = states[u] . dGamma/dObject.
  const Vector object_grad = grad_score(kind, Slot::Object, hv, psi, hv);
  Vector out(static_cast<Eigen::Index>(cands.size()));
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const EntityId u = cands.ids[i];
    if (u < 0 || u >= states.rows()) throw ConfigError("candidate id out of range");
    out(static_cast<Eigen::Index>(i)) = states.row(u) * object_grad;
  }
  return out;
}

struct SoftmaxNll {
  Vector probabilities;
  Real loss;
};

/// Max-subtracted softmax and the negative log-likelihood of the gold index.
inline SoftmaxNll softmax_nll(ConstVectorRef scores, Eigen::Index gold_index) {
  if (scores.size() == 0) throw ConfigError("softmax over empty score vector");
  if (gold_index < 0 || gold_index >= scores.size())
    throw ConfigError("gold index out of range");
  if (!scores.allFinite()) throw NumericError("non-finite score in softmax");
  const Real max = scores.maxCoeff();
  Vector shifted = (scores.array() - max).exp();
  const Real total = shifted.sum();
  SoftmaxNll out;
  out.probabilities = shifted / total;
  out.loss = std::log(total) - (scores(gold_index) - max);
  return out;
}

}  // namespace rfgn
