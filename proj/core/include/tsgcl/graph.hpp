#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/data.hpp"
#include "tsgcl/params.hpp"
#include "tsgcl/tensor.hpp"

namespace tsgcl {

/// 1 - angle(a, b) / pi, times omega for a cross-modal edge. Parallel vectors
/// give exactly 1, antiparallel exactly 0; a zero vector counts as orthogonal.
double angular_weight(std::span<const double> a, std::span<const double> b, bool cross_modal,
                      double omega);

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;  // from < to
  bool cross_modal = false;
};

/// Undirected edge set of a dialogue with `utterances` turns, nodes laid out
/// turn-major (node 3i + m is modality m of turn i): every same-modality
/// pair, plus the three cross-modal edges inside each turn.
std::vector<GraphEdge> dialogue_edges(std::size_t utterances);

/// Per-pair multiplier: 1 on same-modality edges, omega on cross-modal
/// edges, 0 elsewhere (including the diagonal).
Tensor edge_scale_matrix(std::size_t utterances, double omega);

struct ConversationGraph {
  Tensor node_features;             // [3N x d]
  Tensor adjacency;                 // [3N x 3N], symmetric, zero diagonal
  std::vector<Modality> node_modality;
  std::vector<std::size_t> node_turn;
  std::vector<GraphEdge> edges;

  std::size_t node_count() const noexcept { return node_modality.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
};

/// Builds the graph from turn-major node features [3N x d].
ConversationGraph build_graph(const Tensor& node_features, double omega);

/// (D + I)^-1/2 (A + I) (D + I)^-1/2 with D the weighted degrees. Throws
/// ValueError for an asymmetric or negative adjacency.
Tensor normalize_adjacency(const Tensor& adjacency);

// ---- differentiable counterparts ------------------------------------------------

/// Adjacency of the dialogue graph as a function of the node features, so
/// that gradients reach the encoder through the edge weights.
ad::Var angular_adjacency(ad::Var node_features, double omega);
ad::Var normalized_adjacency(ad::Var adjacency);

struct GcnParams {
  std::vector<ParamId> weights;  // one [d x d] matrix per layer
  double kappa = 0.1;
  double lambda_decay = 1.0;

  std::size_t layers() const noexcept { return weights.size(); }
  /// ln(1 + lambda_decay / (layer + 1)) clamped to [0, 1].
  double identity_mixing(std::size_t layer) const;
};

GcnParams add_gcn_params(ParameterSet& params, std::size_t layers, std::size_t dim, double kappa,
                         double lambda_decay, double init_sigma, Rng& rng);

/// H(l+1) = relu(((1 - kappa) P H(l) + kappa H(0)) ((1 - r_l) I + r_l W_l)),
/// with r_l = identity_mixing(l). Returns H(L).
ad::Var gcn_propagate(ParamBinding& bind, ad::Var p_tilde, ad::Var h0, const GcnParams& p);

}  // namespace tsgcl
