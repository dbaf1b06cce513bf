#include "tsgcl/classifier.hpp"

#include <vector>

#include "tsgcl/error.hpp"

namespace tsgcl {

using namespace ad;

MlpParams add_mlp_params(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim, std::size_t output_dim, double init_sigma, Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0)
    throw ValueError("mlp: dimensions must be positive");
  MlpParams p{input_dim, hidden_dim, output_dim, {}, {}, {}, {}};
  p.w1 = params.add_gaussian(prefix + ".w1", {input_dim, hidden_dim}, init_sigma, rng);
  p.b1 = params.add_zeros(prefix + ".b1", {hidden_dim});
  p.w2 = params.add_gaussian(prefix + ".w2", {hidden_dim, output_dim}, init_sigma, rng);
  p.b2 = params.add_zeros(prefix + ".b2", {output_dim});
  return p;
}

Var mlp_logits(ParamBinding& bind, Var x, const MlpParams& p) {
  if (x.value().rank() != 2 || x.shape()[1] != p.input_dim)
    throw ShapeError("mlp: input " + to_string(x.shape()) + " does not have " +
                     std::to_string(p.input_dim) + " columns");
  const Var hidden = relu(add_row(matmul(x, bind(p.w1)), bind(p.b1)));
  return add_row(matmul(hidden, bind(p.w2)), bind(p.b2));
}

TwoStageParams add_two_stage_params(ParameterSet& params, HeadMode mode, std::size_t fusion_dim,
                                    std::size_t num_classes, std::size_t hidden_dim,
                                    double init_sigma, Rng& rng) {
  TwoStageParams p;
  p.mode = mode;
  p.fusion_dim = fusion_dim;
  p.num_classes = num_classes;
  if (mode != HeadMode::SingleStage)
    p.polarity = add_mlp_params(params, "head.polarity", fusion_dim, hidden_dim, 3, init_sigma, rng);
  const std::size_t emotion_in = mode == HeadMode::Conditioned ? fusion_dim + 3 : fusion_dim;
  p.emotion = add_mlp_params(params, "head.emotion", emotion_in, hidden_dim, num_classes, init_sigma, rng);
  return p;
}

Var fuse(Var rep_t, Var rep_a, Var rep_v) {
  if (rep_t.shape() != rep_a.shape() || rep_t.shape() != rep_v.shape() || rep_t.value().rank() != 1)
    throw ShapeError("fuse: the three representations must be vectors of equal length");
  return concat({rep_t, rep_a, rep_v});
}

Var fuse_nodes(Var node_reps) {
  if (node_reps.value().rank() != 2 || node_reps.shape()[0] % 3 != 0)
    throw ShapeError("fuse_nodes: expected a [3N x d] matrix, got " + to_string(node_reps.shape()));
  const std::size_t n = node_reps.shape()[0] / 3, d = node_reps.shape()[1];
  // Turn-major layout makes each group of three rows one contiguous block.
  return reshape(node_reps, {n, 3 * d});
}

Var stage1_polarity(ParamBinding& bind, Var chi, const TwoStageParams& p) {
  if (!p.polarity) throw ValueError("stage1_polarity: single-stage head has no polarity stage");
  return softmax(mlp_logits(bind, chi, *p.polarity));
}

Var stage2_emotion(ParamBinding& bind, Var chi, std::optional<Var> stage1, const TwoStageParams& p) {
  if (p.mode == HeadMode::Conditioned) {
    if (!stage1) throw ValueError("stage2_emotion: conditioned head needs the stage-1 distribution");
    if (stage1->value().rank() != 2 || stage1->shape()[1] != 3 || stage1->shape()[0] != chi.shape()[0])
      throw ShapeError("stage2_emotion: stage-1 distribution must be [B x 3]");
    return softmax(mlp_logits(bind, concat({chi, *stage1}, 1), p.emotion));
  }
  return softmax(mlp_logits(bind, chi, p.emotion));
}

Var classification_loss(std::optional<Var> stage1, Var stage2, std::span<const std::size_t> gold,
                        const LabelScheme& scheme, double alpha) {
  if (stage2.value().rank() != 2 || stage2.shape()[0] != gold.size())
    throw ShapeError("classification_loss: one stage-2 row per gold label required");
  if (stage2.shape()[1] != scheme.size())
    throw ShapeError("classification_loss: stage-2 width does not match the label scheme");
  std::vector<std::size_t> polarity;
  polarity.reserve(gold.size());
  for (auto g : gold) {
    if (g >= scheme.size()) throw ValueError("classification_loss: unknown label id " + std::to_string(g));
    polarity.push_back(scheme.polarity_class(g));
  }
  const Var fine = scale(mean(log_floor(pick(stage2, gold), kLogFloor)), -alpha);
  if (!stage1) return fine;
  const Var coarse = scale(mean(log_floor(pick(*stage1, polarity), kLogFloor)), -1.0);
  return add(coarse, fine);
}

}  // namespace tsgcl
