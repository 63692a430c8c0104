#include <benchmark/benchmark.h>

#include <random>

#include "dppdcc/dataset.hpp"
#include "dppdcc/encoder.hpp"
#include "dppdcc/features.hpp"
#include "dppdcc/graph.hpp"

using namespace dppdcc;

namespace {

const corpus::GlobalCitationNetwork& network() {
  static const auto net = corpus::ingest_corpus(corpus::synth_corpus(5000, 7).records);
  return net;
}

std::vector<corpus::PaperIndex> targets(corpus::TimeStep t, std::size_t n) {
  const auto& net = network();
  std::vector<corpus::PaperIndex> out;
  for (corpus::PaperIndex p = 0; p < static_cast<corpus::PaperIndex>(net.paper_count()) && out.size() < n; p += 7) {
    if (net.pub_time(p) <= t) out.push_back(p);
  }
  return out;
}

void BM_BuildSnapshot(benchmark::State& state) {
  const auto& net = network();
  graph::SamplingOptions o;
  o.limits = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) / 5};
  const auto ps = targets(2010, 64);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(graph::build_snapshot(net, ps[k++ % ps.size()], 2010, o));
  }
}
BENCHMARK(BM_BuildSnapshot)->Arg(20)->Arg(100);

void BM_CocitationStrengths(benchmark::State& state) {
  const auto& net = network();
  const auto s = graph::build_snapshot(net, targets(2010, 1).front(), 2010);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        graph::cocitation_strengths(net, s.papers, s.relation(graph::Relation::kCitedBy), graph::Relation::kCitedBy, 2010));
  }
  state.counters["edges"] = static_cast<double>(s.relation(graph::Relation::kCitedBy).size());
}
BENCHMARK(BM_CocitationStrengths);

struct EncoderSetup {
  encoder::EncoderConfig config;
  nn::ParameterStore store;
  nn::Rng rng{1};
  std::unique_ptr<features::EmbeddingTable> table;
  std::unique_ptr<encoder::Encoder> enc;
  encoder::GraphInputs inputs;

  explicit EncoderSetup(int hidden) {
    config.input_dim = 64;
    config.hidden_dim = hidden;
    config.layers = 2;
    config.heads = 2;
    config.temporal_layers = 1;
    config.temporal_heads = 2;
    const auto& net = network();
    table = std::make_unique<features::EmbeddingTable>(
        net, features::embed_papers(features::HashingEmbeddingProvider(64), net));
    enc = std::make_unique<encoder::Encoder>(config, store, rng);
    graph::SamplingOptions o;
    o.limits = {20, 5};
    const auto g = graph::build_dynamic_graph(net, targets(2006, 1).front(), 2010, config.window, o);
    inputs = encoder::prepare_inputs(g, *table, net);
  }
};

void BM_EncoderForward(benchmark::State& state) {
  EncoderSetup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ad::Tape tape;
    nn::Binder b(tape, s.store);
    benchmark::DoNotOptimize(s.enc->encode(b, s.inputs).value());
  }
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(64);

void BM_EncoderForwardBackward(benchmark::State& state) {
  EncoderSetup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ad::Tape tape;
    nn::Binder b(tape, s.store);
    auto loss = ad::sum_all(s.enc->encode(b, s.inputs));
    tape.backward(loss);
    benchmark::DoNotOptimize(b.gradients());
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
