#include "dppdcc/dataset.hpp"

#include <fstream>

namespace dppdcc::pipeline {

Workspace make_workspace(corpus::GlobalCitationNetwork net, features::Matrix paper_vectors) {
  Workspace ws;
  ws.net = std::make_unique<corpus::GlobalCitationNetwork>(std::move(net));
  ws.table = std::make_unique<features::EmbeddingTable>(*ws.net, std::move(paper_vectors));
  return ws;
}

Workspace open_workspace(const config::RunConfig& c) {
  namespace fs = std::filesystem;
  corpus::GlobalCitationNetwork net;
  if (!c.paths.network.empty() && fs::exists(fs::path(c.paths.network) / "manifest.json")) {
    net = corpus::load_network(c.paths.network);
  } else if (c.synth.papers > 0) {
    net = corpus::ingest_corpus(corpus::synth_corpus(c.synth.papers, c.synth.seed).records);
  } else if (!c.paths.corpus.empty()) {
    std::ifstream in(c.paths.corpus, std::ios::binary);
    if (!in) throw config::ConfigError("cannot read corpus " + c.paths.corpus);
    net = corpus::ingest_corpus(in);
  } else {
    throw config::ConfigError("no network store, synthetic corpus size or corpus file configured");
  }

  features::Matrix vectors;
  if (!c.paths.embeddings.empty() && fs::exists(fs::path(c.paths.embeddings) / "paper_embeddings.tsv")) {
    vectors = features::load_paper_vectors(c.paths.embeddings, net);
  } else {
    auto provider = features::make_provider(c.embedding.provider, static_cast<std::size_t>(c.embedding.dim),
                                            c.embedding.artifact);
    vectors = features::embed_papers(*provider, net);
  }
  if (vectors.cols() != c.embedding.dim) {
    throw config::ConfigError("paper vectors have dimension " + std::to_string(vectors.cols()) +
                              " but embedding.dim is " + std::to_string(c.embedding.dim));
  }
  return make_workspace(std::move(net), std::move(vectors));
}

std::vector<Sample> build_samples(const Workspace& ws, std::span<const splits::SampleSpec> specs, int window,
                                  const graph::SamplingOptions& sampling) {
  std::vector<Sample> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    Sample s;
    s.spec = spec;
    s.graph = graph::build_dynamic_graph(*ws.net, spec.target, spec.observation_point, window, sampling);
    s.inputs = encoder::prepare_inputs(s.graph, *ws.table, *ws.net);
    out.push_back(std::move(s));
  }
  return out;
}

Dataset build_dataset(const Workspace& ws, const splits::SplitSet& s, const config::RunConfig& c) {
  Dataset d;
  d.train = build_samples(ws, s.train, c.window, c.sampling);
  d.val = build_samples(ws, s.val, c.window, c.sampling);
  d.test = build_samples(ws, s.test, c.window, c.sampling);
  if (d.train.empty()) return d;

  auto conformity = [&](Sample& x) {
    x.conformity_value =
        static_cast<double>(ws.net->citations_at(x.spec.target, x.spec.observation_point + c.split.delta));
  };
  std::vector<double> values;
  values.reserve(d.train.size());
  for (auto& x : d.train) {
    conformity(x);
    values.push_back(x.conformity_value);
  }
  auto fitted = disentangle::bin_labels(values, c.model.bins);
  d.edges = fitted.edges;
  d.warnings = fitted.warnings;
  for (std::size_t i = 0; i < d.train.size(); ++i) d.train[i].bin = fitted.bins[i];
  for (auto& x : d.val) {
    conformity(x);
    x.bin = d.edges.assign(x.conformity_value);
  }
  return d;
}

}  // namespace dppdcc::pipeline
