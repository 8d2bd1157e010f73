#include <benchmark/benchmark.h>

#include "multimix/mixer.hpp"
#include "multimix/trainer.hpp"

using namespace multimix;

namespace {

Eigen::MatrixXd one_hot(Eigen::Index classes, Eigen::Index m, Rng& rng) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(classes, m);
  for (Eigen::Index i = 0; i < m; ++i) y(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(classes))), i) = 1.0;
  return y;
}

void BM_Dirichlet(benchmark::State& state) {
  Rng rng(1);
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dirichlet_sample(1.0, m, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Dirichlet)->Arg(2)->Arg(16)->Arg(128);

// interpolation of a 128-example batch of 64-d embeddings into n tuples
void BM_MultiMixInterpolate(benchmark::State& state) {
  Rng rng(2);
  const Eigen::Index m = 128;
  const auto n = static_cast<std::size_t>(state.range(0));
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(64, m);
  const Eigen::MatrixXd y = one_hot(10, m, rng);
  const auto lam = sample_interpolation_matrix(m, n, AlphaPolicy::uniform_range(0.5, 2.0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(multimix_interpolate(z, y, lam));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MultiMixInterpolate)->RangeMultiplier(4)->Range(16, 4096);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(3);
  ModelConfig model;
  model.input_dim = 2;
  model.hidden = {64};
  model.embed_dim = 32;
  model.classes = 3;
  model.resolution = 4;
  TrainConfig cfg;
  cfg.mix_mode = MixMode::multimix;
  cfg.mix_probability = 1.0;
  cfg.dense = state.range(0) != 0;
  cfg.tuples = 1000;
  auto train = TrainState::start(init_params(model, rng), cfg.ema_momentum);
  const LabeledBatch batch{Eigen::MatrixXd::Random(2, 128), one_hot(3, 128, rng)};
  for (auto _ : state) benchmark::DoNotOptimize(train_step(train, batch, model, cfg, 0.01, rng));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgNames({"dense"});

}  // namespace

BENCHMARK_MAIN();
