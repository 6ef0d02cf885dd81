#include <random>

#include <benchmark/benchmark.h>

#include "echoea/alignment.hpp"
#include "echoea/attribute_sim.hpp"
#include "echoea/encoder.hpp"
#include "echoea/synth.hpp"
#include "echoea/training.hpp"

namespace {

using namespace echoea;

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Dataset bench_dataset(int n, int dim) {
  SynthOptions o;
  o.n_entities = n;
  o.embedding_dim = dim;
  return synth_kg_pair(o);
}

void BM_EncodeInfer(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  EncoderConfig c;
  c.d_e = 64;
  c.d_r = 24;
  const auto data = bench_dataset(n, c.d_e);
  const auto graph = EncoderGraph::build(data.kg1, build_adjacency(data.kg1));
  const auto params = initialize_params(c, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(graph, *data.embeddings1, params, c, Mode::kInfer));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EncodeInfer)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  EncoderConfig c;
  c.d_e = 64;
  c.d_r = 24;
  const auto data = bench_dataset(n, c.d_e);
  const auto g1 = EncoderGraph::build(data.kg1, build_adjacency(data.kg1));
  const auto g2 = EncoderGraph::build(data.kg2, build_adjacency(data.kg2));
  const auto params = initialize_params(c, 1);
  SampleBank bank;
  bank.plus = data.seeds.pairs();
  bank.minus = sample_negatives(bank.plus, *data.embeddings1, *data.embeddings2, 5);
  Rng rng(1);
  for (auto _ : state) {
    autodiff::Tape tape;
    const auto bound = bind(tape, params, true);
    Var o1 = encode(tape.constant(*data.embeddings1), g1, bound, c, Mode::kTrain, &rng);
    Var o2 = encode(tape.constant(*data.embeddings2), g2, bound, c, Mode::kTrain, &rng);
    tape.backward(hinge_loss(o1, o2, bank, 3.0));
    benchmark::DoNotOptimize(tape.grad(bound.can_attention));
  }
}
BENCHMARK(BM_TrainStep)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GlobalAlign(benchmark::State& state) {
  const auto s = uniform(state.range(0), state.range(0), 7);
  for (auto _ : state) benchmark::DoNotOptimize(global_align(s));
}
BENCHMARK(BM_GlobalAlign)->Arg(100)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_LocalAlign(benchmark::State& state) {
  const auto s = uniform(state.range(0), state.range(0), 8);
  for (auto _ : state) benchmark::DoNotOptimize(local_align(s));
}
BENCHMARK(BM_LocalAlign)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Dice(benchmark::State& state) {
  const std::string a = "populationTotal of the metropolitan area";
  const std::string b = "population total metropolitan region";
  for (auto _ : state) benchmark::DoNotOptimize(dice(a, b));
}
BENCHMARK(BM_Dice);

}  // namespace

BENCHMARK_MAIN();
