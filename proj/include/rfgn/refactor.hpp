#pragma once

#include "rfgn/dynamics.hpp"
#include "rfgn/graph.hpp"
#include "rfgn/scope.hpp"

namespace rfgn {

/// The layer shares its configuration with the gradient-descent oracle.
using RefactorConfig = DynConfig;

enum class Direction { Outgoing, Incoming };

/// Message along one edge incident to the central node v. Outgoing covers a
/// triple (v, r, w); Incoming covers (w, r, v) and carries
/// p_incoming = P(v | w, r) computed over the scope's candidate set.
Vector message(ScoreKind kind, ConstRowRef h_v, ConstRowRef psi_r, ConstRowRef h_w, Direction dir,
               Real p_incoming = 0.0);

/// The beyond-neighbourhood term n[v]: expected candidate pull over v's
/// outgoing triples plus v's probability mass in every triple not containing
/// it. Expectations are exact sums over the scope.
Vector global_term(const Scope& scope, const Matrix& states, const Matrix& psi, EntityId v,
                   const DynConfig& cfg);

/// One ReFactor layer over the scope: for every scope node,
/// h'[v] = h[v] + alpha * sum of messages over N1[v] - beta * n[v],
/// all probabilities taken at the pre-layer states. Rows outside the scope
/// are returned unchanged. With include_global_term = false the n[v] term is
/// omitted; with lambda > 0 each message carries the central node's N3
/// gradient; AdaGrad rescales the aggregate per-node step.
Matrix layer_apply(const Scope& scope, const Matrix& states, const Matrix& psi,
                   const DynConfig& cfg, OptimizerState* opt = nullptr, Real* mean_nll = nullptr);

/// Runs `steps` iterations of the layer and of the gradient-descent oracle
/// from the same initial states and returns the maximum elementwise
/// divergence seen at any step. Under PaperSubjectSlot this is the executable
/// statement of the GD = message-passing equivalence.
Real verify_gd_equivalence(const KnowledgeGraph& g, const Matrix& phi, const Matrix& psi,
                           const DynConfig& cfg, int steps);

}  // namespace rfgn
