#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/data.hpp"
#include "tsgcl/tensor.hpp"

namespace tsgcl {

/// Positives and negatives for one (modality, class) pair. Indices are rows
/// of the turn-major node matrix (node 3i + m).
struct PairCell {
  Modality modality = Modality::Text;
  std::size_t label = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

/// For every modality and every class present in `labels`: positives are the
/// modality's nodes with that label, negatives the modality's other nodes.
/// Cells without negatives are dropped. Throws ShapeError if `node_count`
/// is not 3 * labels.size().
std::vector<PairCell> partition_pairs(std::size_t node_count, std::span<const std::size_t> labels);

struct KernelConfig {
  enum class Bandwidth { Median, Fixed };
  Bandwidth bandwidth = Bandwidth::Median;
  double gamma = 1.0;  // used when bandwidth == Fixed
};

/// exp(-gamma * ||x - y||^2).
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// 1 / (2 m^2) with m the median pairwise distance between the rows of
/// `points`; 1 when m is 0 or there are fewer than two rows.
double median_heuristic_gamma(const Tensor& points);

/// Kernel bandwidth for the rows of `points` as a [1] node. The median rule
/// stays on the tape so its dependence on the representations is
/// differentiated too.
ad::Var kernel_gamma(ad::Var points, const KernelConfig& kernel);

/// Biased (V-statistic) squared MMD between the rows of `positives` and
/// `negatives` under exp(-gamma ||x - y||^2).
ad::Var mmd_loss(ad::Var positives, ad::Var negatives, ad::Var gamma);

/// MMD of every cell over the post-propagation node matrix `reps` [3N x d].
/// The bandwidth is computed once per modality over all of its nodes.
std::vector<ad::Var> cell_losses(ad::Var reps, std::span<const PairCell> cells,
                                 const KernelConfig& kernel);

/// mean(cell losses) + zeta * classification; just zeta * classification
/// when there are no cells.
ad::Var gcl_total_loss(std::span<const ad::Var> cell_losses, ad::Var classification, double zeta);

}  // namespace tsgcl
