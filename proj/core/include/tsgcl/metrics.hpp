#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tsgcl {

struct ClassMetrics {
  std::size_t support = 0;
  double accuracy = 0.0;  // recall of the class
  double precision = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double weighted_accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]

  std::size_t total_support() const;
};

/// Per-class recall ("accuracy") and F1 with support-weighted averages.
/// F1 is 0 when precision + recall is 0; a class with no support gets recall 0.
Metrics compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                        std::size_t num_classes);

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);

}  // namespace tsgcl
