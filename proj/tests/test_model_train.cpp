#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "tsgcl/error.hpp"
#include "tsgcl/model.hpp"
#include "tsgcl/train.hpp"

using namespace tsgcl;

namespace {

Dataset tiny_dataset(std::size_t dialogues = 6, std::uint64_t seed = 3) {
  SynthesisSpec s;
  s.dialogues = dialogues;
  s.utterances = 4;
  s.dims = {5, 3, 4};
  s.seed = seed;
  return synthesize_dataset(s, LabelScheme::iemocap());
}

ModelConfig tiny_config(Variant v = Variant::Full) {
  ModelConfig c;
  c.dims = {5, 3, 4};
  c.scheme = LabelScheme::iemocap();
  c.hidden_dim = 3;
  c.speaker_dim = 2;
  c.mlp_hidden = 6;
  c.layers = 2;
  c.variant = v;
  return c;
}

}  // namespace

TEST_CASE("forward pass shapes and loss composition") {
  const auto ds = tiny_dataset();
  const Dialogue& d = ds.dialogues[0];
  const Model model(tiny_config(), 1);
  ad::Tape tape;
  ParamBinding bind(tape, model.params());
  const auto f = model.forward(bind, d);
  CHECK(f.node_features.shape() == Shape{12, 8});
  CHECK(f.adjacency.shape() == Shape{12, 12});
  CHECK(f.reps.shape() == Shape{12, 8});
  CHECK(f.chi.shape() == Shape{4, 24});
  CHECK(f.stage1->shape() == Shape{4, 3});
  CHECK(f.stage2.shape() == Shape{4, 6});

  const auto cells = partition_pairs(12, d.labels());
  const auto losses = cell_losses(f.reps, cells, KernelConfig{});
  double mean = 0;
  for (const auto& l : losses) mean += l.value()[0];
  mean /= static_cast<double>(losses.size());
  CHECK(f.mmd_value() == doctest::Approx(mean).epsilon(1e-14));
  CHECK(f.total->value()[0] ==
        doctest::Approx(mean + model.config().zeta * f.classification->value()[0]).epsilon(1e-14));
}

TEST_CASE("variant contracts") {
  const auto ds = tiny_dataset();
  const Dialogue& d = ds.dialogues[1];
  {
    const Model m(tiny_config(Variant::NoGcl), 1);
    ad::Tape tape;
    ParamBinding bind(tape, m.params());
    const auto f = m.forward(bind, d);
    CHECK_FALSE(f.mmd.has_value());
    CHECK(f.mmd_value() == 0.0);
    CHECK(f.total->value()[0] == m.config().zeta * f.classification->value()[0]);
    CHECK(f.stage1.has_value());
  }
  {
    const Model m(tiny_config(Variant::NoTs), 1);
    ad::Tape tape;
    ParamBinding bind(tape, m.params());
    const auto f = m.forward(bind, d);
    CHECK_FALSE(f.stage1.has_value());
    CHECK_FALSE(m.head().polarity.has_value());
    CHECK(f.mmd.has_value());
    CHECK(m.predict(d).polarity.empty());
  }
  CHECK(parse_variant("no-ts") == Variant::NoTs);
  CHECK(to_string(Variant::NoGcl) == "no-gcl");
  CHECK_THROWS_AS(parse_variant("none"), ValueError);
}

TEST_CASE("full pipeline gradients match central differences") {
  const auto ds = tiny_dataset();
  // Seed 2 puts a polarity-head ReLU input 5e-6 from zero, inside the +-h stencil,
  // so central differences there measure an average of two slopes.
  Model model(tiny_config(), 1);
  const auto check = oracle::parameter_gradient_check(
      model.params(), [&](ParamBinding& bind) { return *model.forward(bind, ds.dialogues[0]).total; });
  CHECK(check.worst <= 1e-4);
  CHECK(check.checked == model.params().scalar_count());
}

TEST_CASE("model rejects dialogues that do not fit") {
  auto ds = tiny_dataset();
  const Model model(tiny_config(), 1);
  Dialogue d = ds.dialogues[0];
  d.utterances[0].speaker = 5;
  CHECK_THROWS_AS(model.predict(d), DataError);
  d = ds.dialogues[0];
  d.utterances[0].feat_a.push_back(1.0);
  CHECK_THROWS_AS(model.predict(d), DataError);
  CHECK_THROWS_AS(model.predict(Dialogue{"empty", {}}), DataError);
  ModelConfig bad = tiny_config();
  bad.omega = 0.0;
  CHECK_THROWS_AS(Model(bad, 1), ValueError);
}

TEST_CASE("save and load round-trip exactly") {
  const auto ds = tiny_dataset();
  ModelConfig c = tiny_config();
  c.conditioned = false;
  c.kernel = {KernelConfig::Bandwidth::Fixed, 0.3};
  c.omega = 0.37;
  const Model model(c, 9);
  const auto path = std::filesystem::temp_directory_path() / "tsgcl_model_test.txt";
  save_model(model, path);
  const Model back = load_model(path);
  CHECK(back.params() == model.params());
  CHECK(back.config().omega == 0.37);
  CHECK(back.config().scheme == c.scheme);
  CHECK_FALSE(back.config().conditioned);
  for (const auto& d : ds.dialogues) CHECK(back.predict(d).emotion == model.predict(d).emotion);

  std::ofstream(path) << "#tsgcl-model-v1\nd_t=5\n";
  CHECK_THROWS_AS(load_model(path), DataError);
  std::ofstream(path) << "not a model\n";
  CHECK_THROWS_AS(load_model(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), IoError);
}

TEST_CASE("Adam step equals the hand-computed update") {
  ParameterSet ps;
  ps.add("w", Tensor::vector({1.0, -2.0}));
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  Adam adam(cfg, ps);
  const std::vector<Tensor> g1 = {Tensor::vector({0.5, -1.0})};
  const std::vector<Tensor> g2 = {Tensor::vector({0.2, 3.0})};
  adam.step(ps, g1);
  adam.step(ps, g2);
  CHECK(adam.steps() == 2);
  double w[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    const Tensor& g = t == 1 ? g1[0] : g2[0];
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      w[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(ps.value(0)[0] == doctest::Approx(w[0]).epsilon(1e-14));
  CHECK(ps.value(0)[1] == doctest::Approx(w[1]).epsilon(1e-14));
  CHECK_THROWS_AS(Adam(AdamConfig{0.0}, ps), ValueError);
}

TEST_CASE("training is deterministic, restores the best epoch and stops early") {
  const auto split = split_dataset(tiny_dataset(20), 1);
  TrainConfig tc;
  tc.epochs = 12;
  tc.patience = 3;
  tc.seed = 5;
  const auto a = train(split.train, &split.val, tiny_config(), tc);
  const auto b = train(split.train, &split.val, tiny_config(), tc);
  CHECK(a.model.params() == b.model.params());
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_wf1 == b.history[i].val_wf1);
    CHECK(a.history[i].epoch == i + 1);
    CHECK(std::isfinite(a.history[i].mmd_loss));
  }
  REQUIRE(a.best_epoch >= 1);
  double best = -1;
  for (const auto& r : a.history) best = std::max(best, r.val_wf1);
  CHECK(a.history[a.best_epoch - 1].val_wf1 == best);
  CHECK(evaluate(a.model, split.val).weighted_f1 == best);
  CHECK(a.history.size() <= std::min<std::size_t>(12, a.best_epoch + 3));

  tc.seed = 6;
  const auto c = train(split.train, &split.val, tiny_config(), tc);
  CHECK_FALSE(c.model.params() == a.model.params());
}

TEST_CASE("zero epochs returns the initial model") {
  const auto ds = tiny_dataset();
  TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 4;
  const auto r = train(ds, nullptr, tiny_config(), tc);
  CHECK(r.history.empty());
  CHECK(r.best_epoch == 0);
  CHECK(r.model.params() == Model(tiny_config(), 4).params());
  CHECK_THROWS_AS(train(Dataset{}, nullptr, tiny_config(), tc), DataError);
}

TEST_CASE("no-gcl training reports zero MMD") {
  const auto ds = tiny_dataset();
  TrainConfig tc;
  tc.epochs = 2;
  const auto r = train(ds, nullptr, tiny_config(Variant::NoGcl), tc);
  for (const auto& e : r.history) {
    CHECK(e.mmd_loss == 0.0);
    CHECK(e.train_loss == doctest::Approx(e.cls_loss).epsilon(1e-14));
  }
}

TEST_CASE("a numeric failure names the epoch, batch and dialogue") {
  auto ds = tiny_dataset(3);
  ds.dialogues[1].utterances[2].feat_t[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.epochs = 1;
  try {
    train(ds, nullptr, tiny_config(), tc);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
    CHECK(msg.find(ds.dialogues[1].id) != std::string::npos);
  }
}

TEST_CASE("ablation layout and independence from jobs") {
  const auto split = split_dataset(tiny_dataset(14), 2);
  TrainConfig tc;
  tc.epochs = 2;
  const std::vector<std::uint64_t> seeds = {1, 2};
  const auto a = ablate(split.train, split.val, split.test, tiny_config(), tc, seeds, 1);
  const auto b = ablate(split.train, split.val, split.test, tiny_config(), tc, seeds, 3);
  REQUIRE(a.runs.size() == 6);
  REQUIRE(a.summary.size() == 3);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.runs[i].seed == seeds[i / 3]);
    CHECK(a.runs[i].variant == kAblationVariants[i % 3]);
    CHECK(a.runs[i].test.weighted_f1 == b.runs[i].test.weighted_f1);
  }
  for (std::size_t v = 0; v < 3; ++v) {
    const double x = a.runs[v].test.weighted_f1, y = a.runs[3 + v].test.weighted_f1;
    CHECK(a.summary[v].runs == 2);
    CHECK(a.summary[v].mean_wf1 == doctest::Approx((x + y) / 2));
    CHECK(a.summary[v].std_wf1 == doctest::Approx(std::abs(x - y) / std::sqrt(2.0)));
  }
  CHECK_THROWS_AS(ablate(split.train, split.val, split.test, tiny_config(), tc, {}, 1), ValueError);
}
