#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "utep/losses.hpp"
#include "utep/ndgrad/ops.hpp"
#include "utep/nets.hpp"
#include "utep/trainer.hpp"
#include "utep/uncertainty.hpp"

namespace {

using namespace utep;

NetConfig small_net() {
  NetConfig nc;
  nc.input_dim = 2;
  nc.hidden_dim = 64;
  nc.feature_dim = 32;
  nc.disc_hidden = 32;
  nc.classes = 2;
  nc.dropout_rate = 0.5;
  return nc;
}

Array2 random_rows(std::size_t rows, std::size_t cols, RngStream& rng) {
  Array2 a(rows, cols);
  for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
  return a;
}

void BM_ForwardBackward(benchmark::State& state) {
  RngStream rng(1);
  ModelBundle bundle(small_net(), rng);
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Array2 x = random_rows(rows, 2, rng);
  std::vector<int> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) labels[i] = static_cast<int>(i % 2);
  for (auto _ : state) {
    Tape t;
    Var loss = loss_classifier(bundle.classify(t, bundle.features(t, t.constant(x))), labels);
    t.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(256);

void BM_McVarianceNumeric(benchmark::State& state) {
  RngStream rng(2);
  ModelBundle bundle(small_net(), rng);
  const Array2 x = random_rows(1000, 2, rng);
  const Array2 f = extract_features(bundle, x);
  const int passes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    RngStream mc(3);
    benchmark::DoNotOptimize(mc_variance(bundle, f, passes, mc));
  }
}
BENCHMARK(BM_McVarianceNumeric)->Arg(10)->Arg(50);

void BM_McVarianceNode(benchmark::State& state) {
  RngStream rng(4);
  ModelBundle bundle(small_net(), rng);
  const Array2 x = random_rows(32, 2, rng);
  std::vector<Array2> masks;
  for (int k = 0; k < state.range(0); ++k) masks.push_back(bundle.sample_dropout_mask(32, rng));
  for (auto _ : state) {
    Tape t;
    Var u = mc_variance_node(t, bundle, bundle.features(t, t.constant(x)), masks);
    Var l = loss_bias(u);
    t.backward(l);
    benchmark::DoNotOptimize(l.item());
  }
}
BENCHMARK(BM_McVarianceNode)->Arg(10);

void BM_TrainEpoch(benchmark::State& state) {
  spdlog::set_level(spdlog::level::err);
  ExperimentConfig cfg;
  cfg.method = state.range(0) == 0 ? Method::Dann : Method::DannUtep;
  cfg.epochs = 1;
  const DomainSplit split = prepare_split(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, split).total_steps);
  state.SetLabel(method_name(cfg.method));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
