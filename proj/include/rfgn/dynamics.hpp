#pragma once

#include "rfgn/scope.hpp"
#include "rfgn/scoring.hpp"
#include "rfgn/types.hpp"

#include <cmath>
#include <utility>

namespace rfgn {

enum class OptimizerKind { Sgd, AdaGrad };

/// In the normaliser sum over candidates u of exp Gamma(v, r, u), the
/// candidate u = v makes Gamma quadratic in phi[v]. PaperSubjectSlot routes
/// the gradient through the subject slot only, which makes the gradient step
/// identical to the message-passing layer; StrictAutograd keeps the extra
/// object-slot flow and exists to measure the discrepancy.
enum class GradConvention { PaperSubjectSlot, StrictAutograd };

struct StepSizes {
  Real beta;
  Real alpha;  // beta / |B|

  static StepSizes from_batch(Real beta, std::size_t batch_size) {
    if (beta < 0 || !std::isfinite(beta)) throw ConfigError("beta must be finite and >= 0");
    if (batch_size == 0) throw ConfigError("empty batch");
    return {beta, beta / static_cast<Real>(batch_size)};
  }
};

/// AdaGrad running sums of squared gradients, one row per node state row and
/// one per relation row. Entries never decrease.
struct OptimizerState {
  Matrix node_accum;
  Matrix rel_accum;

  void ensure_nodes(Eigen::Index rows, Eigen::Index cols) {
    if (node_accum.rows() != rows || node_accum.cols() != cols)
      node_accum = Matrix::Zero(rows, cols);
  }
  void ensure_rels(Eigen::Index rows, Eigen::Index cols) {
    if (rel_accum.rows() != rows || rel_accum.cols() != cols)
      rel_accum = Matrix::Zero(rows, cols);
  }
};

/// Shared knobs of the gradient-descent oracle and the message-passing layer.
struct DynConfig {
  ScoreKind kind = ScoreKind::DistMult;
  Real beta = 0.1;
  Real lambda = 0.0;  // N3 strength
  OptimizerKind optimizer = OptimizerKind::Sgd;
  Real adagrad_eps = 1e-8;
  GradConvention convention = GradConvention::PaperSubjectSlot;
  bool include_global_term = true;  // layer side only
};

/// lambda * sign(row) * row^2, elementwise; zero at zero entries.
Vector n3_gradient(ConstRowRef row, Real lambda);

/// Accumulate-then-rescale: new_accum = accum + grad^2,
/// rescaled = grad / (sqrt(new_accum) + eps). Zero gradient components stay
/// exactly zero regardless of eps.
std::pair<Vector, Vector> adagrad_rescale(ConstVectorRef grad, ConstVectorRef accum, Real eps);

// Per-edge contributions of one triple (v, r, w) to the step, evaluated at
// the pre-step states. `probs` is the softmax over the candidate set; the new
// row is old row plus the delta. These compose exactly: full_gd_step with SGD
// and lambda = 0 equals the per-triple sum of these deltas bit for bit.

Vector edge_delta_subject(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, ConstRowRef hw,
                          const Matrix& states, const CandidateSet& cands, ConstVectorRef probs,
                          Real p_self, Real alpha,
                          GradConvention conv = GradConvention::PaperSubjectSlot);
Vector edge_delta_object(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, Real p_w, Real alpha);
Vector edge_delta_nonparticipant(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, Real p_u,
                                 Real alpha);

Vector edge_update_subject(ScoreKind kind, ConstRowRef hv, ConstRowRef psi_r, ConstRowRef hw,
                           const Matrix& states, const CandidateSet& cands, ConstVectorRef probs,
                           Real p_self, Real alpha,
                           GradConvention conv = GradConvention::PaperSubjectSlot);
Vector edge_update_object(ScoreKind kind, ConstRowRef hw, ConstRowRef psi_r, ConstRowRef hv,
                          Real p_w, Real alpha);
Vector edge_update_nonparticipant(ScoreKind kind, ConstRowRef hu, ConstRowRef psi_r,
                                  ConstRowRef hv, Real p_u, Real alpha);

/// One synchronous gradient-descent step over the scope: all per-triple
/// gradients are taken at the pre-step states and applied once. This is the
/// oracle side of the equivalence check. AdaGrad requires `opt`; N3 adds the
/// per-participant regulariser gradient; mean_nll, when non-null, receives
/// the batch-mean negative log-likelihood.
Matrix full_gd_step(const Scope& scope, const Matrix& states, const Matrix& psi,
                    const DynConfig& cfg, OptimizerState* opt = nullptr,
                    Real* mean_nll = nullptr);

}  // namespace rfgn
