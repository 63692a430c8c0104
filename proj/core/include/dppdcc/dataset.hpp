#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dppdcc/config.hpp"
#include "dppdcc/corpus.hpp"
#include "dppdcc/disentangle.hpp"
#include "dppdcc/encoder.hpp"
#include "dppdcc/features.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/splits.hpp"

namespace dppdcc::pipeline {

// Network plus the feature table built on it. The table points into the
// network, so both live behind stable addresses.
struct Workspace {
  std::unique_ptr<corpus::GlobalCitationNetwork> net;
  std::unique_ptr<features::EmbeddingTable> table;
};

Workspace make_workspace(corpus::GlobalCitationNetwork net, features::Matrix paper_vectors);

// Resolves the network (store, synthetic corpus or raw corpus, in that
// order) and the paper vectors (store, else computed with the configured
// provider).
Workspace open_workspace(const config::RunConfig& c);

struct Sample {
  splits::SampleSpec spec;
  graph::DynamicHeteroGraph graph;
  encoder::GraphInputs inputs;
  double conformity_value = 0.0;  // citations at observation point + delta
  int bin = -1;                   // conformity class; -1 when not computed
};

struct Dataset {
  std::vector<Sample> train, val, test;
  disentangle::BinEdges edges;
  std::vector<std::string> warnings;
};

std::vector<Sample> build_samples(const Workspace& ws, std::span<const splits::SampleSpec> specs, int window,
                                  const graph::SamplingOptions& sampling);

// Graphs and inputs for every split. Conformity bins are fitted on training
// samples and applied to validation samples; test samples get none.
Dataset build_dataset(const Workspace& ws, const splits::SplitSet& s, const config::RunConfig& c);

}  // namespace dppdcc::pipeline
