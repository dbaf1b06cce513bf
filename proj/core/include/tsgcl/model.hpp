#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/classifier.hpp"
#include "tsgcl/contrastive.hpp"
#include "tsgcl/data.hpp"
#include "tsgcl/encoder.hpp"
#include "tsgcl/graph.hpp"
#include "tsgcl/params.hpp"

namespace tsgcl {

enum class Variant {
  Full,   // two-stage head + MMD contrastive term
  NoTs,   // single K-way head, MMD kept
  NoGcl,  // two-stage head, classification loss only
};

std::string_view to_string(Variant v);
/// Accepts "full", "no-ts", "no-gcl"; throws ValueError otherwise.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  FeatureDims dims;
  LabelScheme scheme;
  std::size_t max_speakers = 2;
  std::size_t hidden_dim = 64;  // per recurrent direction
  std::size_t speaker_dim = 16;
  std::size_t mlp_hidden = 128;
  std::size_t layers = 4;
  double omega = 0.5;
  double kappa = 0.1;
  double lambda_decay = 1.0;
  double init_sigma = 0.1;
  double zeta = 1.0;
  double alpha = 1.0;
  Variant variant = Variant::Full;
  bool conditioned = true;  // stage 2 reads the stage-1 distribution
  KernelConfig kernel;

  HeadMode head_mode() const;
  std::size_t node_dim() const noexcept { return 2 * hidden_dim + speaker_dim; }
  void validate() const;
};

/// Every intermediate of one dialogue's forward pass. Loss members are only
/// set when the pass was asked to compute losses.
struct ForwardPass {
  ad::Var node_features;  // H(0), [3N x d]
  ad::Var adjacency;
  ad::Var propagation;    // normalized adjacency
  ad::Var reps;           // H(L)
  ad::Var chi;            // [N x 3d]
  std::optional<ad::Var> stage1;
  ad::Var stage2;
  std::optional<ad::Var> classification;
  std::optional<ad::Var> mmd;  // mean over cells; empty when there are none
  std::optional<ad::Var> total;

  double mmd_value() const { return mmd ? mmd->value()[0] : 0.0; }
};

struct Prediction {
  std::vector<std::size_t> emotion;
  std::vector<std::size_t> polarity;  // class index (0 neg, 1 neu, 2 pos); empty without stage 1
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const NodeEncoders& encoders() const noexcept { return encoders_; }
  const GcnParams& gcn() const noexcept { return gcn_; }
  const TwoStageParams& head() const noexcept { return head_; }

  ForwardPass forward(ParamBinding& bind, const Dialogue& dialogue, bool with_loss = true) const;
  Prediction predict(const Dialogue& dialogue) const;
  /// Throws DataError when the dialogue does not fit this model's sizes.
  void check_dialogue(const Dialogue& dialogue) const;

 private:

  ModelConfig config_;
  ParameterSet params_;
  NodeEncoders encoders_;
  GcnParams gcn_;
  TwoStageParams head_;
};

/// Text format: "#tsgcl-model-v1", config lines "key=value", then one
/// "param <name> <shape>" line per parameter followed by its values.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace tsgcl
