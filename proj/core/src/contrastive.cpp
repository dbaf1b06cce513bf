#include "tsgcl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tsgcl/error.hpp"

namespace tsgcl {

using namespace ad;

std::vector<PairCell> partition_pairs(std::size_t node_count, std::span<const std::size_t> labels) {
  if (node_count != 3 * labels.size())
    throw ShapeError("partition_pairs: " + std::to_string(node_count) + " nodes for " +
                     std::to_string(labels.size()) + " labels");
  const std::set<std::size_t> classes(labels.begin(), labels.end());
  std::vector<PairCell> cells;
  for (Modality m : kModalities) {
    const auto offset = static_cast<std::size_t>(m);
    for (std::size_t c : classes) {
      PairCell cell;
      cell.modality = m;
      cell.label = c;
      for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == c ? cell.positives : cell.negatives).push_back(3 * i + offset);
      if (!cell.negatives.empty()) cells.push_back(std::move(cell));
    }
  }
  return cells;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw ShapeError("rbf_kernel: dimension mismatch");
  if (!(gamma > 0)) throw ValueError("rbf_kernel: gamma must be positive");
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) sq += (x[k] - y[k]) * (x[k] - y[k]);
  return std::exp(-gamma * sq);
}

double median_heuristic_gamma(const Tensor& points) {
  if (points.rank() != 2) throw ShapeError("median_heuristic_gamma: expected a matrix");
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) return 1.0;
  std::vector<double> dist;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = points.at(i, k) - points.at(j, k);
        sq += diff * diff;
      }
      dist.push_back(std::sqrt(sq));
    }
  std::sort(dist.begin(), dist.end());
  const std::size_t m = dist.size();
  const double med = m % 2 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
  return med == 0.0 ? 1.0 : 1.0 / (2.0 * med * med);
}

Var kernel_gamma(Var points, const KernelConfig& kernel) {
  Tape& tape = *points.tape();
  if (kernel.bandwidth == KernelConfig::Bandwidth::Fixed) {
    if (!(kernel.gamma > 0)) throw ValueError("kernel: fixed gamma must be positive");
    return tape.constant(Tensor::scalar(kernel.gamma));
  }
  if (points.value().rank() != 2) throw ShapeError("kernel_gamma: expected a matrix");
  if (points.shape()[0] < 2) return tape.constant(Tensor::scalar(1.0));
  const Var m = median(sqrt(upper_triangle(pairwise_sqdist(points, points))));
  if (m.value()[0] == 0.0) return tape.constant(Tensor::scalar(1.0));
  return scale(reciprocal(mul(m, m)), 0.5);
}

Var mmd_loss(Var positives, Var negatives, Var gamma) {
  if (positives.value().rank() != 2 || negatives.value().rank() != 2 || positives.shape()[0] == 0 ||
      negatives.shape()[0] == 0)
    throw ShapeError("mmd_loss: positives and negatives must be non-empty matrices");
  const Var neg_gamma = scale(gamma, -1.0);
  auto kernel_mean = [&](Var x, Var y) { return mean(exp(mul_scalar(pairwise_sqdist(x, y), neg_gamma))); };
  const Var pp = kernel_mean(positives, positives);
  const Var pn = kernel_mean(positives, negatives);
  const Var nn = kernel_mean(negatives, negatives);
  return add(sub(pp, scale(pn, 2.0)), nn);
}

std::vector<Var> cell_losses(Var reps, std::span<const PairCell> cells, const KernelConfig& kernel) {
  if (reps.value().rank() != 2 || reps.shape()[0] % 3 != 0)
    throw ShapeError("cell_losses: representations must be a [3N x d] matrix");
  const std::size_t n = reps.shape()[0] / 3;
  std::map<int, Var> gammas;
  std::vector<Var> out;
  out.reserve(cells.size());
  for (const auto& cell : cells) {
    if (cell.positives.empty() || cell.negatives.empty())
      throw ValueError("mmd_loss: a cell needs at least one positive and one negative");
    const int m = static_cast<int>(cell.modality);
    auto it = gammas.find(m);
    if (it == gammas.end()) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < n; ++i) rows.push_back(3 * i + static_cast<std::size_t>(m));
      it = gammas.emplace(m, kernel_gamma(gather_rows(reps, rows), kernel)).first;
    }
    out.push_back(mmd_loss(gather_rows(reps, cell.positives), gather_rows(reps, cell.negatives),
                           it->second));
  }
  return out;
}

Var gcl_total_loss(std::span<const Var> cell_losses, Var classification, double zeta) {
  if (!(zeta >= 0)) throw ValueError("gcl_total_loss: zeta must be non-negative");
  const Var weighted = scale(classification, zeta);
  if (cell_losses.empty()) return weighted;
  return add(mean(concat(cell_losses)), weighted);
}

}  // namespace tsgcl
