#pragma once

// Plain-loop reference implementations used to check the library. Nothing
// here calls into the code under test except the Tensor container and the
// ParameterSet used for finite differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/params.hpp"
#include "tsgcl/tensor.hpp"

namespace oracle {

using tsgcl::Tensor;
using Mat = std::vector<std::vector<double>>;

inline Tensor random_tensor(tsgcl::Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, sd);
  for (auto& x : t.storage()) x = n(rng);
  return t;
}

inline Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline double max_abs_diff(const Mat& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) worst = std::max(worst, std::abs(a[r][c] - b.at(r, c)));
  return worst;
}

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

/// Central-difference gradient check of a scalar function of `inputs`.
/// Returns the worst relative error over every input element.
using TapeFn = std::function<tsgcl::ad::Var(std::vector<tsgcl::ad::Var>&)>;

inline double gradient_check(const TapeFn& f, std::vector<Tensor> inputs, double h = 1e-6) {
  auto eval = [&](const std::vector<Tensor>& xs, bool grads, std::vector<Tensor>* out) {
    tsgcl::ad::Tape tape;
    std::vector<tsgcl::ad::Var> vars;
    for (auto x : xs) vars.push_back(tape.leaf(x.set_requires_grad(true)));
    const auto loss = f(vars);
    if (grads) {
      const auto g = tape.backward(loss);
      for (const auto& v : vars) out->push_back(g.of(v));
    }
    return loss.value()[0];
  };
  std::vector<Tensor> analytic;
  eval(inputs, true, &analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      auto plus = inputs, minus = inputs;
      plus[i][j] += h;
      minus[i][j] -= h;
      const double numeric = (eval(plus, false, nullptr) - eval(minus, false, nullptr)) / (2 * h);
      worst = std::max(worst, rel_error(analytic[i][j], numeric));
    }
  return worst;
}

/// Same check over every scalar of a ParameterSet. `loss` builds the loss on
/// a fresh binding.
using ParamLossFn = std::function<tsgcl::ad::Var(tsgcl::ParamBinding&)>;

struct ParamCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t nonzero = 0;  // analytic entries with |g| > 1e-10
};

inline ParamCheck parameter_gradient_check(tsgcl::ParameterSet& params, const ParamLossFn& loss,
                                           double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    tsgcl::ad::Tape tape;
    tsgcl::ParamBinding bind(tape, params);
    const auto l = loss(bind);
    analytic = bind.collect(tape.backward(l));
  }
  auto value = [&] {
    tsgcl::ad::Tape tape;
    tsgcl::ParamBinding bind(tape, params);
    return loss(bind).value()[0];
  };
  ParamCheck out;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params.value(i).size(); ++j) {
      double& w = params.value(i)[j];
      const double saved = w;
      w = saved + h;
      const double up = value();
      w = saved - h;
      const double down = value();
      w = saved;
      const double numeric = (up - down) / (2 * h);
      out.worst = std::max(out.worst, rel_error(analytic[i][j], numeric));
      ++out.checked;
      if (std::abs(analytic[i][j]) > 1e-10) ++out.nonzero;
    }
  return out;
}

// ---- graph -------------------------------------------------------------------

inline double angular(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double cos = (na == 0 || nb == 0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
  cos = std::clamp(cos, -1.0, 1.0);
  return 1.0 - std::acos(cos) / std::numbers::pi;
}

/// Dense adjacency of a turn-major node matrix: same modality across all
/// turns, plus the three modalities of one turn scaled by omega.
inline Mat adjacency(const Mat& x, double omega) {
  const std::size_t n = x.size();
  Mat a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool same_modality = i % 3 == j % 3;
      const bool same_turn = i / 3 == j / 3;
      if (same_modality) a[i][j] = angular(x[i], x[j]);
      else if (same_turn) a[i][j] = omega * angular(x[i], x[j]);
    }
  return a;
}

inline Mat normalize(const Mat& a) {
  const std::size_t n = a.size();
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  Mat p(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i][j] = (a[i][j] + (i == j ? 1.0 : 0.0)) / std::sqrt(deg[i] * deg[j]);
  return p;
}

inline Mat gcn(const Mat& p, const Mat& h0, const std::vector<Mat>& weights, double kappa, double lambda) {
  Mat h = h0;
  const std::size_t d = h0[0].size();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const double r = std::clamp(std::log(1.0 + lambda / static_cast<double>(l + 1)), 0.0, 1.0);
    Mat ph = matmul(p, h);
    Mat mixed(h.size(), std::vector<double>(d));
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) mixed[i][c] = (1 - kappa) * ph[i][c] + kappa * h0[i][c];
    Mat t(d, std::vector<double>(d));
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) t[a][b] = r * weights[l][a][b] + (a == b ? 1 - r : 0.0);
    h = matmul(mixed, t);
    for (auto& row : h)
      for (auto& v : row) v = std::max(0.0, v);
  }
  return h;
}

// ---- contrastive -----------------------------------------------------------------

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double mmd(const Mat& p, const Mat& n, double gamma) {
  auto k = [&](const auto& a, const auto& b) { return std::exp(-gamma * sqdist(a, b)); };
  double pp = 0, nn = 0, pn = 0;
  for (const auto& a : p)
    for (const auto& b : p) pp += k(a, b);
  for (const auto& a : n)
    for (const auto& b : n) nn += k(a, b);
  for (const auto& a : p)
    for (const auto& b : n) pn += k(a, b);
  const double np = static_cast<double>(p.size()), nq = static_cast<double>(n.size());
  return pp / (np * np) + nn / (nq * nq) - 2 * pn / (np * nq);
}

inline double median_gamma(const Mat& pts) {
  if (pts.size() < 2) return 1.0;
  std::vector<double> d;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d.push_back(std::sqrt(sqdist(pts[i], pts[j])));
  std::sort(d.begin(), d.end());
  const double m = d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
  return m == 0 ? 1.0 : 1.0 / (2 * m * m);
}

// ---- metrics ------------------------------------------------------------------

struct BruteMetrics {
  std::vector<double> recall, f1;
  std::vector<std::size_t> support;
  double wacc = 0, wf1 = 0;
};

inline BruteMetrics brute_metrics(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred,
                                  std::size_t k) {
  BruteMetrics m;
  std::vector<std::vector<std::size_t>> conf(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++conf[gold[i]][pred[i]];
  double total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = conf[c][c], row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += conf[c][j];
      col += conf[j][c];
    }
    const double r = row > 0 ? tp / row : 0.0;
    const double p = col > 0 ? tp / col : 0.0;
    m.recall.push_back(r);
    m.f1.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0.0);
    m.support.push_back(static_cast<std::size_t>(row));
    total += row;
  }
  for (std::size_t c = 0; c < k; ++c) {
    m.wacc += m.support[c] * m.recall[c];
    m.wf1 += m.support[c] * m.f1[c];
  }
  if (total > 0) {
    m.wacc /= total;
    m.wf1 /= total;
  }
  return m;
}

}  // namespace oracle
