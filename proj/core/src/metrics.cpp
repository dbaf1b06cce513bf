#include "tsgcl/metrics.hpp"

#include <string>

#include "tsgcl/error.hpp"

namespace tsgcl {

std::size_t Metrics::total_support() const {
  std::size_t n = 0;
  for (const auto& c : per_class) n += c.support;
  return n;
}

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t k = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != k) throw ShapeError("confusion matrix must be square");
  Metrics m;
  m.per_class.resize(k);
  std::size_t total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t support = 0, predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += confusion[c][j];
      predicted += confusion[j][c];
    }
    const double tp = static_cast<double>(confusion[c][c]);
    auto& pc = m.per_class[c];
    pc.support = support;
    pc.accuracy = support ? tp / static_cast<double>(support) : 0.0;
    pc.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    pc.f1 = pc.precision + pc.accuracy > 0
                ? 2.0 * pc.precision * pc.accuracy / (pc.precision + pc.accuracy)
                : 0.0;
    total += support;
  }
  if (total > 0) {
    for (const auto& pc : m.per_class) {
      m.weighted_accuracy += static_cast<double>(pc.support) * pc.accuracy;
      m.weighted_f1 += static_cast<double>(pc.support) * pc.f1;
    }
    m.weighted_accuracy /= static_cast<double>(total);
    m.weighted_f1 /= static_cast<double>(total);
  }
  m.confusion = std::move(confusion);
  return m;
}

Metrics compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                        std::size_t num_classes) {
  if (gold.size() != predicted.size())
    throw ShapeError("compute_metrics: " + std::to_string(gold.size()) + " gold labels but " +
                     std::to_string(predicted.size()) + " predictions");
  std::vector<std::vector<std::size_t>> confusion(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= num_classes || predicted[i] >= num_classes)
      throw ValueError("compute_metrics: label id out of range");
    ++confusion[gold[i]][predicted[i]];
  }
  return metrics_from_confusion(std::move(confusion));
}

}  // namespace tsgcl
