#include "tsgcl/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "tsgcl/error.hpp"

namespace tsgcl {

Adam::Adam(AdamConfig config, const ParameterSet& params) : config_(config) {
  if (!(config_.learning_rate > 0)) throw ValueError("adam: learning rate must be positive");
  if (!(config_.beta1 >= 0 && config_.beta1 < 1 && config_.beta2 >= 0 && config_.beta2 < 1))
    throw ValueError("adam: betas must lie in [0, 1)");
  if (!(config_.epsilon > 0)) throw ValueError("adam: epsilon must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.value(i).shape());
    v_.emplace_back(params.value(i).shape());
  }
}

void Adam::step(ParameterSet& params, std::span<const Tensor> grads) {
  if (grads.size() != params.size()) throw ShapeError("adam: one gradient per parameter required");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params.value(i);
    const Tensor& g = grads[i];
    if (g.shape() != w.shape()) throw ShapeError("adam: gradient shape mismatch for " + params.name(i));
    for (std::size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = b1 * m_[i][j] + (1 - b1) * g[j];
      v_[i][j] = b2 * v_[i][j] + (1 - b2) * g[j] * g[j];
      w[j] -= config_.learning_rate * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + config_.epsilon);
    }
  }
}

SplitPredictions predict_split(const Model& model, const Dataset& split) {
  SplitPredictions out;
  for (const auto& d : split.dialogues) {
    const auto p = model.predict(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      out.gold.push_back(d.utterances[i].label);
      out.predicted.push_back(p.emotion[i]);
    }
  }
  return out;
}

Metrics evaluate(const Model& model, const Dataset& split) {
  const auto p = predict_split(model, split);
  return compute_metrics(p.gold, p.predicted, model.config().scheme.size());
}

TrainResult train(const Dataset& train_set, const Dataset* val_set, const ModelConfig& model_config,
                  const TrainConfig& config) {
  if (train_set.dialogues.empty()) throw DataError("train: the training split is empty");
  TrainResult result{Model(model_config, config.seed), {}, 0};
  if (config.epochs == 0) return result;

  Model& model = result.model;
  Adam adam(config.adam, model.params());
  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const Dataset& monitor = (val_set && !val_set->dialogues.empty()) ? *val_set : train_set;

  std::vector<std::size_t> order(train_set.dialogues.size());
  std::iota(order.begin(), order.end(), 0);
  ParameterSet best = model.params();
  double best_wf1 = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t b = 0; b < order.size(); ++b) {
      const Dialogue& d = train_set.dialogues[order[b]];
      try {
        ad::Tape tape;
        ParamBinding bind(tape, model.params());
        const ForwardPass f = model.forward(bind, d);
        const auto grads = bind.collect(tape.backward(*f.total));
        adam.step(model.params(), grads);
        rec.train_loss += f.total->value()[0];
        rec.cls_loss += f.classification->value()[0];
        rec.mmd_loss += f.mmd_value();
      } catch (const NumericError& e) {
        throw NumericError(e.op(), "epoch " + std::to_string(epoch) + " batch " + std::to_string(b + 1) +
                                       " (dialogue '" + d.id + "'): " + e.what());
      }
    }
    const double n = static_cast<double>(order.size());
    rec.train_loss /= n;
    rec.cls_loss /= n;
    rec.mmd_loss /= n;
    rec.val_wf1 = evaluate(model, monitor).weighted_f1;
    result.history.push_back(rec);

    if (rec.val_wf1 > best_wf1) {
      best_wf1 = rec.val_wf1;
      best = model.params();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  model.params() = best;
  return result;
}

AblationReport ablate(const Dataset& train_set, const Dataset& val_set, const Dataset& test_set,
                      const ModelConfig& base_model, const TrainConfig& base_train,
                      std::span<const std::uint64_t> seeds, std::size_t jobs) {
  if (seeds.empty()) throw ValueError("ablate: at least one seed is required");
  if (test_set.dialogues.empty()) throw DataError("ablate: the test split is empty");
  jobs = std::max<std::size_t>(1, jobs);

  AblationReport report;
  for (auto seed : seeds)
    for (Variant v : kAblationVariants) report.runs.push_back(AblationRun{v, seed, {}, 0});

  auto run_one = [&](AblationRun& run) {
    ModelConfig mc = base_model;
    mc.variant = run.variant;
    TrainConfig tc = base_train;
    tc.seed = run.seed;
    const TrainResult r = train(train_set, &val_set, mc, tc);
    run.test = evaluate(r.model, test_set);
    run.epochs_run = r.history.size();
  };

  for (std::size_t start = 0; start < report.runs.size(); start += jobs) {
    const std::size_t end = std::min(report.runs.size(), start + jobs);
    if (jobs == 1) {
      run_one(report.runs[start]);
      continue;
    }
    std::vector<std::future<void>> pending;
    for (std::size_t i = start; i < end; ++i)
      pending.push_back(std::async(std::launch::async, run_one, std::ref(report.runs[i])));
    for (auto& f : pending) f.get();
  }

  for (Variant v : kAblationVariants) {
    VariantSummary s;
    s.variant = v;
    std::vector<double> acc, f1;
    for (const auto& r : report.runs)
      if (r.variant == v) {
        acc.push_back(r.test.weighted_accuracy);
        f1.push_back(r.test.weighted_f1);
      }
    auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
      mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      sd = 0.0;
      if (xs.size() < 2) return;
      for (double x : xs) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
    };
    s.runs = acc.size();
    mean_std(acc, s.mean_wacc, s.std_wacc);
    mean_std(f1, s.mean_wf1, s.std_wf1);
    report.summary.push_back(s);
  }
  return report;
}

}  // namespace tsgcl
