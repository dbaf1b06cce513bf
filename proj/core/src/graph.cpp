#include "tsgcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsgcl/error.hpp"

namespace tsgcl {

using namespace ad;

namespace {

// Angle between two vectors via 2 atan2(|u - v|, |u + v|) on the unit
// vectors, which stays exact near 0 and pi where acos(cos) loses half the
// digits. A zero-norm operand counts as orthogonal.
struct Angle {
  double theta = 0.0;
  double cos = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  bool degenerate = false;
  // The weight has a kink at theta = 0 and theta = pi; its derivative is taken as 0 there.
  bool smooth() const { return !degenerate && theta > 0.0 && theta < std::numbers::pi; }
};

Angle angle_between(const double* a, const double* b, std::size_t d) {
  Angle out;
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  out.norm_a = std::sqrt(na);
  out.norm_b = std::sqrt(nb);
  if (na == 0.0 || nb == 0.0) {
    out.theta = std::numbers::pi / 2;
    out.degenerate = true;
    return out;
  }
  double diff = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double u = a[k] / out.norm_a, v = b[k] / out.norm_b;
    diff += (u - v) * (u - v);
    sum += (u + v) * (u + v);
  }
  out.theta = 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
  out.cos = std::cos(out.theta);
  return out;
}

double weight_from_angle(double theta) { return 1.0 - theta / std::numbers::pi; }

void check_omega(double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) throw ValueError("omega must lie in (0, 1]");
}

std::size_t turns_of(const Tensor& node_features) {
  if (node_features.rank() != 2 || node_features.rows() % 3 != 0)
    throw ShapeError("node features must be a [3N x d] matrix, got " + to_string(node_features.shape()));
  return node_features.rows() / 3;
}

}  // namespace

double angular_weight(std::span<const double> a, std::span<const double> b, bool cross_modal,
                      double omega) {
  if (a.size() != b.size())
    throw ShapeError("angular_weight: dimensions " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  check_omega(omega);
  const double w = weight_from_angle(angle_between(a.data(), b.data(), a.size()).theta);
  return cross_modal ? omega * w : w;
}

std::vector<GraphEdge> dialogue_edges(std::size_t n) {
  std::vector<GraphEdge> edges;
  edges.reserve(3 * n * (n - 1) / 2 + 3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    // cross-modal triangle of turn i
    edges.push_back({3 * i, 3 * i + 1, true});
    edges.push_back({3 * i, 3 * i + 2, true});
    edges.push_back({3 * i + 1, 3 * i + 2, true});
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t m = 0; m < 3; ++m) edges.push_back({3 * i + m, 3 * j + m, false});
  }
  return edges;
}

Tensor edge_scale_matrix(std::size_t n, double omega) {
  check_omega(omega);
  Tensor s({3 * n, 3 * n});
  for (const auto& e : dialogue_edges(n)) {
    const double w = e.cross_modal ? omega : 1.0;
    s.at(e.from, e.to) = w;
    s.at(e.to, e.from) = w;
  }
  return s;
}

ConversationGraph build_graph(const Tensor& node_features, double omega) {
  const std::size_t n = turns_of(node_features);
  if (n == 0) throw ShapeError("build_graph: dialogue has no utterances");
  check_omega(omega);
  ConversationGraph g;
  g.node_features = node_features;
  g.node_features.set_requires_grad(false);
  g.adjacency = Tensor({3 * n, 3 * n});
  g.edges = dialogue_edges(n);
  for (std::size_t i = 0; i < 3 * n; ++i) {
    g.node_modality.push_back(kModalities[i % 3]);
    g.node_turn.push_back(i / 3);
  }
  const std::size_t d = node_features.cols();
  for (const auto& e : g.edges) {
    const double* a = node_features.data().data() + e.from * d;
    const double* b = node_features.data().data() + e.to * d;
    const double w = angular_weight({a, d}, {b, d}, e.cross_modal, omega);
    g.adjacency.at(e.from, e.to) = w;
    g.adjacency.at(e.to, e.from) = w;
  }
  return g;
}

Tensor normalize_adjacency(const Tensor& a) {
  if (a.rank() != 2 || a.rows() != a.cols())
    throw ShapeError("normalize_adjacency: expected a square matrix, got " + to_string(a.shape()));
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (a.at(i, j) < 0) throw ValueError("normalize_adjacency: negative weight");
      if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-12)
        throw ValueError("normalize_adjacency: adjacency is not symmetric");
    }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
    s[i] = 1.0 / std::sqrt(deg + 1.0);
  }
  Tensor p({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p.at(i, j) = s[i] * (a.at(i, j) + (i == j ? 1.0 : 0.0)) * s[j];
  return p;
}

// ---- tape operations ----------------------------------------------------------

Var angular_adjacency(Var node_features, double omega) {
  const Tensor& x = node_features.value();
  const std::size_t n = turns_of(x);
  if (n == 0) throw ShapeError("angular_adjacency: dialogue has no utterances");
  check_omega(omega);
  const std::size_t d = x.cols();
  const auto edges = dialogue_edges(n);

  struct EdgeCache {
    GraphEdge edge;
    Angle angle;
  };
  std::vector<EdgeCache> cache;
  cache.reserve(edges.size());
  Tensor a({3 * n, 3 * n});
  for (const auto& e : edges) {
    const Angle c = angle_between(x.data().data() + e.from * d, x.data().data() + e.to * d, d);
    const double w = (e.cross_modal ? omega : 1.0) * weight_from_angle(c.theta);
    a.at(e.from, e.to) = w;
    a.at(e.to, e.from) = w;
    cache.push_back({e, c});
  }

  return node_features.tape()->record(
      "angular_adjacency", std::move(a), {node_features},
      [node_features, cache = std::move(cache), omega, d](const Tensor& g, Gradients& grads) {
        Tensor* gx = grads.target(node_features);
        if (!gx) return;
        const Tensor& x = node_features.value();
        for (const auto& [e, c] : cache) {
          if (!c.smooth()) continue;
          const double upstream = g.at(e.from, e.to) + g.at(e.to, e.from);
          if (upstream == 0.0) continue;
          // dw/dx_i = scale / (pi sin theta) * (u_j - cos theta u_i) / |x_i|
          const double f = upstream * (e.cross_modal ? omega : 1.0) / (std::numbers::pi * std::sin(c.theta));
          const double* xi = x.data().data() + e.from * d;
          const double* xj = x.data().data() + e.to * d;
          for (std::size_t k = 0; k < d; ++k) {
            const double ui = xi[k] / c.norm_a, uj = xj[k] / c.norm_b;
            gx->at(e.from, k) += f * (uj - c.cos * ui) / c.norm_a;
            gx->at(e.to, k) += f * (ui - c.cos * uj) / c.norm_b;
          }
        }
      });
}

Var normalized_adjacency(Var adjacency) {
  const Tensor& a = adjacency.value();
  Tensor p = normalize_adjacency(a);
  const std::size_t n = a.rows();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
    s[i] = 1.0 / std::sqrt(deg + 1.0);
  }
  return adjacency.tape()->record(
      "normalized_adjacency", std::move(p), {adjacency},
      [adjacency, s = std::move(s), n](const Tensor& g, Gradients& grads) {
        Tensor* ga = grads.target(adjacency);
        if (!ga) return;
        const Tensor& a = adjacency.value();
        // P_ij = s_i (A_ij + I_ij) s_j, s_i = (1 + sum_j A_ij)^-1/2
        std::vector<double> g_deg(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          double gs = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double aij = a.at(i, j) + (i == j ? 1.0 : 0.0);
            const double aji = a.at(j, i) + (i == j ? 1.0 : 0.0);
            gs += g.at(i, j) * aij * s[j] + g.at(j, i) * aji * s[j];
          }
          g_deg[i] = gs * (-0.5 * s[i] * s[i] * s[i]);
        }
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) ga->at(i, j) += g.at(i, j) * s[i] * s[j] + g_deg[i];
      });
}

double GcnParams::identity_mixing(std::size_t layer) const {
  const double r = std::log(1.0 + lambda_decay / static_cast<double>(layer + 1));
  return std::clamp(r, 0.0, 1.0);
}

GcnParams add_gcn_params(ParameterSet& params, std::size_t layers, std::size_t dim, double kappa,
                         double lambda_decay, double init_sigma, Rng& rng) {
  if (layers == 0) throw ValueError("gcn: at least one layer is required");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValueError("gcn: kappa must lie in [0, 1]");
  if (!(lambda_decay > 0.0)) throw ValueError("gcn: lambda_decay must be positive");
  GcnParams p;
  p.kappa = kappa;
  p.lambda_decay = lambda_decay;
  for (std::size_t l = 0; l < layers; ++l)
    p.weights.push_back(
        params.add_gaussian("gcn.layer" + std::to_string(l) + ".weight", {dim, dim}, init_sigma, rng));
  return p;
}

Var gcn_propagate(ParamBinding& bind, Var p_tilde, Var h0, const GcnParams& p) {
  if (h0.value().rank() != 2 || p_tilde.value().rank() != 2 ||
      p_tilde.shape()[0] != p_tilde.shape()[1] || p_tilde.shape()[0] != h0.shape()[0])
    throw ShapeError("gcn_propagate: propagation matrix " + to_string(p_tilde.shape()) +
                     " does not fit features " + to_string(h0.shape()));
  Tape& tape = bind.tape();
  const std::size_t d = h0.shape()[1];
  Var h = h0;
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const Var w = bind(p.weights[l]);
    if (w.shape() != Shape{d, d}) throw ShapeError("gcn_propagate: layer weight must be [d x d]");
    const double r = p.identity_mixing(l);
    Tensor id = Tensor::identity(d);
    for (auto& v : id.data()) v *= (1.0 - r);
    const Var mixing = add(scale(w, r), tape.constant(std::move(id)));
    const Var smoothed = add(scale(matmul(p_tilde, h), 1.0 - p.kappa), scale(h0, p.kappa));
    h = relu(matmul(smoothed, mixing));
  }
  return h;
}

}  // namespace tsgcl
