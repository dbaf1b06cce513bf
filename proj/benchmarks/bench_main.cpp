#include <benchmark/benchmark.h>

#include <random>

#include "tsgcl/contrastive.hpp"
#include "tsgcl/graph.hpp"
#include "tsgcl/model.hpp"

using namespace tsgcl;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (auto& x : t.storage()) x = n(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    ad::Tape tape;
    benchmark::DoNotOptimize(ad::matmul(tape.constant(a), tape.constant(b)).value()[0]);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(144);

void BM_GraphBuild(benchmark::State& state) {
  const auto utts = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({3 * utts, 144}, 3);
  for (auto _ : state) {
    const auto g = build_graph(x, 0.5);
    benchmark::DoNotOptimize(normalize_adjacency(g.adjacency).at(0, 0));
  }
}
BENCHMARK(BM_GraphBuild)->Arg(10)->Arg(30)->Arg(60);

void BM_Mmd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor p = random_tensor({n, 144}, 4), q = random_tensor({2 * n, 144}, 5);
  for (auto _ : state) {
    ad::Tape tape;
    const auto pv = tape.leaf(Tensor(p).set_requires_grad(true));
    const auto loss = mmd_loss(pv, tape.constant(q), tape.constant(Tensor::vector({0.01})));
    benchmark::DoNotOptimize(tape.backward(loss).of(pv)[0]);
  }
}
BENCHMARK(BM_Mmd)->Arg(5)->Arg(20);

// One training step's worth of work on a default-sized dialogue.
void BM_ForwardBackward(benchmark::State& state) {
  SynthesisSpec spec;
  spec.dialogues = 1;
  spec.utterances = static_cast<std::size_t>(state.range(0));
  const auto ds = synthesize_dataset(spec, LabelScheme::iemocap());
  ModelConfig c;
  c.dims = ds.dims;
  c.scheme = ds.scheme;
  const Model model(c, 1);
  for (auto _ : state) {
    ad::Tape tape;
    ParamBinding bind(tape, model.params());
    const auto f = model.forward(bind, ds.dialogues[0]);
    benchmark::DoNotOptimize(bind.collect(tape.backward(*f.total)).size());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
