#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tsgcl/data.hpp"
#include "tsgcl/metrics.hpp"
#include "tsgcl/model.hpp"
#include "tsgcl/params.hpp"

namespace tsgcl {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation with bias correction.
class Adam {
 public:
  Adam(AdamConfig config, const ParameterSet& params);
  void step(ParameterSet& params, std::span<const Tensor> grads);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct TrainConfig {
  std::size_t epochs = 200;
  AdamConfig adam;
  std::uint64_t seed = 7;
  std::size_t patience = 10;  // epochs without val improvement; 0 disables early stop
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double mmd_loss = 0.0;
  double cls_loss = 0.0;
  double val_wf1 = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

/// One dialogue per step: forward, loss, reverse pass, Adam update. Dialogue
/// order is reshuffled every epoch from the seed. Early stopping watches
/// weighted F1 on `val` (on `train` when `val` is null or empty) and the
/// best parameters are restored at the end. Throws NumericError naming the
/// epoch and batch when a NaN or Inf appears.
TrainResult train(const Dataset& train_set, const Dataset* val_set, const ModelConfig& model_config,
                  const TrainConfig& config);

struct SplitPredictions {
  std::vector<std::size_t> gold;
  std::vector<std::size_t> predicted;
};

SplitPredictions predict_split(const Model& model, const Dataset& split);
Metrics evaluate(const Model& model, const Dataset& split);

struct AblationRun {
  Variant variant = Variant::Full;
  std::uint64_t seed = 0;
  Metrics test;
  std::size_t epochs_run = 0;
};

struct VariantSummary {
  Variant variant = Variant::Full;
  std::size_t runs = 0;
  double mean_wacc = 0.0;
  double std_wacc = 0.0;
  double mean_wf1 = 0.0;
  double std_wf1 = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;         // seed-major, variants in order full, no-ts, no-gcl
  std::vector<VariantSummary> summary;  // always the three variants, same order
};

inline constexpr Variant kAblationVariants[3] = {Variant::Full, Variant::NoTs, Variant::NoGcl};

/// Trains every variant for every seed on the same splits and reports test
/// metrics. Sample standard deviation (0 for a single seed). Up to `jobs`
/// runs execute concurrently; results do not depend on `jobs`.
AblationReport ablate(const Dataset& train_set, const Dataset& val_set, const Dataset& test_set,
                      const ModelConfig& base_model, const TrainConfig& base_train,
                      std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

}  // namespace tsgcl
