#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dppdcc/autograd.hpp"
#include "dppdcc/features.hpp"
#include "dppdcc/graph.hpp"
#include "dppdcc/nn.hpp"

namespace dppdcc::encoder {

using ad::Matrix;
using ad::RowVector;
using ad::Var;
using nn::Binder;
using nn::ParameterStore;

struct EncoderConfig {
  int input_dim = 384;
  int hidden_dim = 64;
  int layers = 4;
  double lambda = 0.5;  // weight of co-citation strengths in the attention mixture
  double xi = 0.0;      // GIN self weight
  int heads = 4;        // CompGAT heads
  int temporal_layers = 4;
  int temporal_heads = 4;
  int window = 5;  // snapshots per graph
  bool share_snapshot_params = false;
  bool softmax_over_c = false;
  features::GateMode gate = features::GateMode::kVector;
  // Lower bounds of the snapshot-age bins, ascending from 0: {0,1,2,3,6}
  // gives the bins 0, 1, 2, 3-5 and >5.
  std::vector<int> snapshot_bins{0, 1, 2, 3, 6};
  double slope = 0.2;

  // Throws std::invalid_argument.
  void validate() const;
  int snapshot_bin(int age) const;
};

// Node features of one snapshot, already looked up from the embedding table.
struct SnapshotInputs {
  graph::HeteroSnapshot snapshot;
  Matrix paper, author, venue, time;  // rows follow the snapshot's local order
  RowVector target;                   // the target paper's vector
  int age = 0;                        // time_step - target pub_time
};

struct GraphInputs {
  corpus::PaperIndex target = -1;
  std::vector<SnapshotInputs> snapshots;
  std::vector<bool> mask() const;  // true for real snapshots
};

SnapshotInputs prepare_snapshot(const graph::HeteroSnapshot& s, const features::EmbeddingTable& table,
                                const corpus::GlobalCitationNetwork& net);
GraphInputs prepare_inputs(const graph::DynamicHeteroGraph& g, const features::EmbeddingTable& table,
                           const corpus::GlobalCitationNetwork& net);

// ---- building blocks ----

struct CompGatSpec {
  std::string left, right, attention, message, output;
  std::string norm_gain, norm_bias;
};
CompGatSpec register_compgat(ParameterStore& store, const std::string& prefix, int hidden, nn::Rng& rng);

struct CompGatOutput {
  Var states;  // N x hidden
  Var alpha;   // E x heads, mixed attention per edge
  Var logits;  // E x heads
};

// Message passing along `edges` (src -> dst) between paper states. `strengths`
// are per-edge and already normalized per destination.
CompGatOutput compgat_layer(Binder& b, const CompGatSpec& spec, const Var& states, const graph::EdgeList& edges,
                            std::span<const double> strengths, double lambda, int heads, bool softmax_over_c,
                            double slope);

// f((1 + xi) * dst + sum of src over in-edges).
Var gin_layer(Binder& b, const nn::MlpSpec& f, const Var& src_states, const Var& dst_states,
              const graph::EdgeList& edges, double xi);

// Elementwise sum.
Var relation_aggregate(std::span<const Var> outputs);

struct ReadoutSpec {
  std::string state_proj, paper_proj, attention, type_attention, age_embedding, role_embedding;
};
ReadoutSpec register_readout(ParameterStore& store, const std::string& prefix, int hidden, int age_bins,
                             nn::Rng& rng);

struct ReadoutOutput {
  Var state;  // 1 x hidden
  Var alpha;  // members x 1
};

// Attention pooling of `members` (local paper rows) into the snapshot state.
ReadoutOutput snapshot_readout(Binder& b, const ReadoutSpec& spec, const Var& paper_states, const Var& state,
                               std::span<const std::int32_t> members, std::span<const graph::PaperRole> roles,
                               int age_bin, double slope);

struct TemporalBlockSpec {
  std::string query, key, value, out;
  std::string norm1_gain, norm1_bias, norm2_gain, norm2_bias;
  nn::LinearSpec ffn_in, ffn_out;
};
struct TemporalSpec {
  std::string position;  // window x hidden
  std::vector<TemporalBlockSpec> blocks;
};
TemporalSpec register_temporal(ParameterStore& store, const std::string& prefix, int hidden, int window,
                               int depth, nn::Rng& rng);

// Post-LN transformer encoder over the snapshot sequence. Masked positions
// are never attended to.
Var temporal_encode(Binder& b, const TemporalSpec& spec, const Var& sequence, const std::vector<bool>& mask,
                    int heads);

// ---- full encoder ----

struct LayerTrace {
  std::vector<CompGatOutput> cites, cited_by;  // per snapshot (empty Var for placeholders)
  std::vector<ReadoutOutput> readout;
  Var sequence;  // window x hidden after temporal encoding
};

struct EncodeTrace {
  std::vector<LayerTrace> layers;
};

class Encoder {
 public:
  // Registers every parameter under "enc." in `store`.
  Encoder(EncoderConfig config, ParameterStore& store, nn::Rng& rng);

  const EncoderConfig& config() const { return config_; }

  // Target representation, 1 x hidden.
  Var encode(Binder& b, const GraphInputs& inputs, EncodeTrace* trace = nullptr) const;

 private:
  struct SnapshotSpec {
    CompGatSpec cites, cited_by;
    std::array<nn::MlpSpec, 6> gin;  // writes, written_by, publishes, published_in, have, had_by
    ReadoutSpec readout;
  };
  struct LayerSpec {
    std::vector<SnapshotSpec> snapshots;  // one, or one per window position
    TemporalSpec temporal;
  };
  const SnapshotSpec& snapshot_spec(int layer, int position) const;

  EncoderConfig config_;
  std::array<nn::LinearSpec, graph::kNodeTypeCount> input_;
  std::string gate_time_, gate_target_;
  std::vector<LayerSpec> layers_;
};

}  // namespace dppdcc::encoder
