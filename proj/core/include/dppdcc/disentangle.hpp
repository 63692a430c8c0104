#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dppdcc/autograd.hpp"
#include "dppdcc/corpus.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/nn.hpp"

namespace dppdcc::disentangle {

using ad::Var;
using nn::Binder;
using nn::ParameterStore;

enum class OrthogonalMode { kSquaredCosine, kElementwise };

struct HeadConfig {
  int hidden_dim = 64;
  int bins = 5;          // conformity classes M
  double alpha = 0.5;    // weight of the disentanglement losses
  double tau = 0.4;      // contrastive temperature
  bool single_head = false;  // one predictor, no auxiliary losses
  OrthogonalMode orthogonal = OrthogonalMode::kSquaredCosine;

  void validate() const;
  bool auxiliary() const { return !single_head && alpha > 0.0; }
};

// Per-sample values. total is (dif + con) + contribution in that order.
struct PredictionBreakdown {
  double dif = 0.0;
  double con = 0.0;
  double contribution = 0.0;
  double total = 0.0;
};

struct PerspectiveOutput {
  Var dif, con, ctr;                       // B x hidden encodings
  Var dif_value, con_value, ctr_value;     // B x 1
  Var total;                               // B x 1
  std::vector<PredictionBreakdown> breakdown() const;
};

class PerspectiveHeads {
 public:
  // Registers parameters under "pdm." in `store`.
  PerspectiveHeads(HeadConfig config, ParameterStore& store, nn::Rng& rng);

  const HeadConfig& config() const { return config_; }
  PerspectiveOutput forward(Binder& b, const Var& o) const;
  // L2-normalized contrastive projection of diffusion encodings.
  Var project(Binder& b, const Var& dif) const;
  // B x M conformity logits.
  Var classify(Binder& b, const Var& con) const;

  nn::MlpSpec encoder_spec(int view) const { return enc_[static_cast<std::size_t>(view)]; }
  nn::MlpSpec predictor_spec(int view) const { return pred_[static_cast<std::size_t>(view)]; }

 private:
  HeadConfig config_;
  std::vector<nn::MlpSpec> enc_, pred_;
  nn::MlpSpec projection_, classifier_;
};

// Triplet InfoNCE with dot-product similarity, averaged over rows.
Var diffusion_loss(const Var& z_ori, const Var& z_pos, const Var& z_neg, double tau);
// Mean cross-entropy; labels in [0, logits.cols()).
Var conformity_loss(const Var& logits, std::span<const int> labels);
// Mean over rows of the pairwise measure averaged over the three pairs.
// Pairs involving a zero vector are skipped.
Var orthogonal_loss(const Var& a, const Var& b, const Var& c, OrthogonalMode mode = OrthogonalMode::kSquaredCosine);

struct AuxiliaryInputs {
  Var z_ori, z_pos, z_neg;  // projections of the three views
  Var con_logits;
  std::vector<int> bins;
};

struct LossComponents {
  Var total, reg, dif, con, ort;
};

// total = reg + alpha * (dif + con + ort); without auxiliary inputs the
// disentanglement terms are absent and total = reg.
LossComponents total_loss(const PerspectiveOutput& out, std::span<const double> labels, const AuxiliaryInputs* aux,
                          const HeadConfig& config);

// ---- conformity bins ----

struct BinEdges {
  // upper[k] is the largest training value assigned to bin k.
  std::vector<double> upper;
  bool degenerate = false;  // fewer distinct values than requested bins
  std::size_t bin_count() const { return upper.size(); }
  // Smallest k with value <= upper[k]; values above every edge go to the last bin.
  int assign(double value) const;
};

struct BinResult {
  BinEdges edges;
  std::vector<int> bins;
  std::vector<std::string> warnings;
};

// Equal-frequency bins over training values. Ranks follow (value, index);
// bin = floor(rank * M / N). With fewer than M distinct values, each distinct
// value becomes its own bin and a warning is recorded.
BinResult bin_labels(std::span<const double> training_values, int bins);

// ---- augmentation ----

enum class AugmentMode { kPositive, kNegative };

struct AugmentationSpec {
  AugmentMode mode = AugmentMode::kPositive;
  double drop_fraction = 0.1;
  std::uint64_t seed = 0;
  void validate() const;
};

// Drop weight of each local paper: citations at the snapshot time divided by
// the snapshot maximum (0 when every paper is uncited).
std::vector<double> citation_weights(const corpus::GlobalCitationNetwork& net, const graph::HeteroSnapshot& s);

// Removes non-target papers from every real snapshot, then metadata nodes
// left without edges. The target and the snapshot's own time node are kept.
graph::HeteroSnapshot augment_snapshot(const corpus::GlobalCitationNetwork& net, const graph::HeteroSnapshot& s,
                                       AugmentMode mode, double drop_fraction, nn::Rng& rng);
graph::DynamicHeteroGraph augment_views(const graph::DynamicHeteroGraph& g, const corpus::GlobalCitationNetwork& net,
                                        const AugmentationSpec& spec);

}  // namespace dppdcc::disentangle
