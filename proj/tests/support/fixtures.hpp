#pragma once

// Shared helpers for unit and acceptance tests: hand-built corpora and a
// central finite-difference gradient checker.

#include <functional>
#include <string>
#include <vector>

#include "dppdcc/autograd.hpp"
#include "dppdcc/corpus.hpp"
#include "dppdcc/encoder.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/nn.hpp"

namespace dppdcc::fixtures {

corpus::PaperRecord paper(const std::string& id, corpus::TimeStep year, std::vector<std::string> refs = {},
                          std::vector<std::string> authors = {}, std::string venue = "V0");

corpus::GlobalCitationNetwork network(std::vector<corpus::PaperRecord> records);

// A dozen papers over 2000-2006 with a few authors and two venues, small
// enough that every snapshot stays under ten nodes of each type.
std::vector<corpus::PaperRecord> tiny_corpus();

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "name[i]"
  std::size_t checked = 0;
};

// Compares tape gradients of `loss` with central differences over every
// scalar of every parameter the loss touches. Relative error is
// |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(nn::ParameterStore& store, const std::function<ad::Var(nn::Binder&)>& loss,
                                double step, double floor);

// Straight-line GATv2 reference: per edge and head, the softmax over each
// destination's in-edges of a . LeakyReLU(W_l h_dst + W_r h_src).
ad::Matrix gatv2_attention(const nn::ParameterStore& store, const encoder::CompGatSpec& spec, const ad::Matrix& states,
                           const graph::EdgeList& edges, int heads, double slope);

// Straight-line CompGAT output states for a given mixed attention alpha.
ad::Matrix compgat_states(const nn::ParameterStore& store, const encoder::CompGatSpec& spec, const ad::Matrix& states,
                          const graph::EdgeList& edges, const ad::Matrix& alpha, int heads, double slope);

// Random directed edges without self loops over n nodes, with strengths
// normalized per destination.
struct RandomEdges {
  graph::EdgeList edges;
  std::vector<double> strengths;
};
RandomEdges random_edges(int n, int count, std::uint64_t seed);

ad::Matrix random_matrix(ad::Index rows, ad::Index cols, std::uint64_t seed, double scale = 1.0);

}  // namespace dppdcc::fixtures
