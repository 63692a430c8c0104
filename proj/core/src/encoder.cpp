#include "dppdcc/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace dppdcc::encoder {

using graph::NodeType;
using graph::Relation;
using corpus::TimeStep;

void EncoderConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("encoder config: " + what); };
  if (input_dim < 1) fail("input_dim must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (layers < 1) fail("layers must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!std::isfinite(xi)) fail("xi must be finite");
  if (heads < 1 || hidden_dim % heads != 0) fail("heads must divide hidden_dim");
  if (temporal_layers < 1) fail("temporal_layers must be >= 1");
  if (temporal_heads < 1 || hidden_dim % temporal_heads != 0) fail("temporal_heads must divide hidden_dim");
  if (window < 1) fail("window must be >= 1");
  if (snapshot_bins.empty() || snapshot_bins.front() != 0) fail("snapshot_bins must start at 0");
  for (std::size_t k = 1; k < snapshot_bins.size(); ++k) {
    if (snapshot_bins[k] <= snapshot_bins[k - 1]) fail("snapshot_bins must be strictly ascending");
  }
}

int EncoderConfig::snapshot_bin(int age) const {
  int bin = 0;
  for (std::size_t k = 0; k < snapshot_bins.size(); ++k) {
    if (snapshot_bins[k] <= age) bin = static_cast<int>(k);
  }
  return bin;
}

std::vector<bool> GraphInputs::mask() const {
  std::vector<bool> m;
  m.reserve(snapshots.size());
  for (const auto& s : snapshots) m.push_back(!s.snapshot.placeholder);
  return m;
}

SnapshotInputs prepare_snapshot(const graph::HeteroSnapshot& s, const features::EmbeddingTable& table,
                                const corpus::GlobalCitationNetwork& net) {
  SnapshotInputs in;
  in.snapshot = s;
  const auto d = static_cast<ad::Index>(table.dimension());
  const TimeStep t = s.time_step;
  in.paper.resize(static_cast<ad::Index>(s.papers.size()), d);
  for (std::size_t i = 0; i < s.papers.size(); ++i) in.paper.row(static_cast<ad::Index>(i)) = table.paper(s.papers[i]);
  in.author.resize(static_cast<ad::Index>(s.authors.size()), d);
  for (std::size_t i = 0; i < s.authors.size(); ++i) {
    in.author.row(static_cast<ad::Index>(i)) = table.author(s.authors[i], t);
  }
  in.venue.resize(static_cast<ad::Index>(s.venues.size()), d);
  for (std::size_t i = 0; i < s.venues.size(); ++i) in.venue.row(static_cast<ad::Index>(i)) = table.venue(s.venues[i], t);
  in.time.resize(static_cast<ad::Index>(s.times.size()), d);
  for (std::size_t i = 0; i < s.times.size(); ++i) in.time.row(static_cast<ad::Index>(i)) = table.time(s.times[i], t);
  in.target = table.paper(s.target);
  in.age = t - net.pub_time(s.target);
  return in;
}

GraphInputs prepare_inputs(const graph::DynamicHeteroGraph& g, const features::EmbeddingTable& table,
                           const corpus::GlobalCitationNetwork& net) {
  GraphInputs out;
  out.target = g.target;
  out.snapshots.reserve(g.snapshots.size());
  for (const auto& s : g.snapshots) out.snapshots.push_back(prepare_snapshot(s, table, net));
  return out;
}

namespace {

void register_norm(ParameterStore& store, const std::string& prefix, int hidden, std::string& gain,
                   std::string& bias) {
  gain = store.add_constant(prefix + ".gain", 1, hidden, 1.0);
  bias = store.add_constant(prefix + ".bias", 1, hidden, 0.0);
}

// hidden x heads indicator of which head each column belongs to.
Matrix head_blocks(ad::Index hidden, int heads) {
  const ad::Index width = hidden / heads;
  Matrix m = Matrix::Zero(hidden, heads);
  for (ad::Index c = 0; c < hidden; ++c) m(c, c / width) = 1.0;
  return m;
}

}  // namespace

CompGatSpec register_compgat(ParameterStore& store, const std::string& prefix, int hidden, nn::Rng& rng) {
  CompGatSpec s;
  s.left = store.add_xavier(prefix + ".left", hidden, hidden, rng);
  s.right = store.add_xavier(prefix + ".right", hidden, hidden, rng);
  s.attention = store.add_xavier(prefix + ".attention", 1, hidden, rng);
  s.message = store.add_xavier(prefix + ".message", 2 * hidden, hidden, rng);
  s.output = store.add_xavier(prefix + ".output", hidden, hidden, rng);
  register_norm(store, prefix + ".norm", hidden, s.norm_gain, s.norm_bias);
  return s;
}

CompGatOutput compgat_layer(Binder& b, const CompGatSpec& spec, const Var& states, const graph::EdgeList& edges,
                            std::span<const double> strengths, double lambda, int heads, bool softmax_over_c,
                            double slope) {
  if (strengths.size() != edges.size()) throw std::invalid_argument("compgat_layer: one strength per edge");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("compgat_layer: lambda outside [0, 1]");
  ad::Tape& tape = b.tape();
  const ad::Index n = states.rows();
  const ad::Index hidden = states.cols();
  if (hidden % heads != 0) throw std::invalid_argument("compgat_layer: heads must divide the state width");
  const auto e_count = static_cast<ad::Index>(edges.size());

  CompGatOutput out;
  if (e_count == 0) {
    out.logits = tape.constant(Matrix(0, heads));
    out.alpha = tape.constant(Matrix(0, heads));
    out.states = ad::leaky_relu(ad::layer_norm_rows(states, b(spec.norm_gain), b(spec.norm_bias)), slope);
    return out;
  }

  Var xl = ad::matmul(states, b(spec.left));
  Var xr = ad::matmul(states, b(spec.right));
  Var dst = ad::gather_rows(xl, edges.dst);
  Var src = ad::gather_rows(xr, edges.src);
  Var z = ad::leaky_relu(ad::add(dst, src), slope);
  Var blocks = tape.constant(head_blocks(hidden, heads));
  out.logits = ad::matmul(ad::mul(z, b(spec.attention)), blocks);
  Var attention = ad::segment_softmax(out.logits, edges.dst, n);

  Matrix c(e_count, heads);
  for (ad::Index e = 0; e < e_count; ++e) c.row(e).setConstant(strengths[e]);
  if (softmax_over_c) {
    ad::Tape scratch;
    c = ad::segment_softmax(scratch.constant(c), edges.dst, n).value();
  }
  out.alpha = ad::add(ad::scale(attention, 1.0 - lambda), tape.constant(lambda * c));

  const std::array<Var, 2> pair{dst, src};
  Var message = ad::matmul(ad::concat_cols(pair), b(spec.message));
  Var weighted = ad::mul(message, ad::matmul(out.alpha, tape.constant(head_blocks(hidden, heads).transpose())));
  Var incoming = ad::matmul(ad::scatter_add_rows(weighted, edges.dst, n), b(spec.output));
  out.states = ad::leaky_relu(ad::layer_norm_rows(ad::add(states, incoming), b(spec.norm_gain), b(spec.norm_bias)),
                              slope);
  return out;
}

Var gin_layer(Binder& b, const nn::MlpSpec& f, const Var& src_states, const Var& dst_states,
              const graph::EdgeList& edges, double xi) {
  Var pooled = ad::scale(dst_states, 1.0 + xi);
  if (edges.size() > 0) {
    pooled = ad::add(pooled, ad::scatter_add_rows(ad::gather_rows(src_states, edges.src), edges.dst, dst_states.rows()));
  }
  return nn::mlp(b, f, pooled);
}

Var relation_aggregate(std::span<const Var> outputs) {
  if (outputs.empty()) throw std::invalid_argument("relation_aggregate: no relation outputs");
  Var acc = outputs.front();
  for (std::size_t k = 1; k < outputs.size(); ++k) acc = ad::add(acc, outputs[k]);
  return acc;
}

ReadoutSpec register_readout(ParameterStore& store, const std::string& prefix, int hidden, int age_bins,
                             nn::Rng& rng) {
  ReadoutSpec s;
  s.state_proj = store.add_xavier(prefix + ".state", hidden, hidden, rng);
  s.paper_proj = store.add_xavier(prefix + ".paper", hidden, hidden, rng);
  s.attention = store.add_xavier(prefix + ".attention", hidden, 1, rng);
  s.type_attention = store.add_xavier(prefix + ".type_attention", hidden, 1, rng);
  s.age_embedding = store.add_xavier(prefix + ".age", age_bins, hidden, rng);
  s.role_embedding = store.add_xavier(prefix + ".role", static_cast<ad::Index>(graph::kPaperRoleCount), hidden, rng);
  return s;
}

ReadoutOutput snapshot_readout(Binder& b, const ReadoutSpec& spec, const Var& paper_states, const Var& state,
                               std::span<const std::int32_t> members, std::span<const graph::PaperRole> roles,
                               int age_bin, double slope) {
  if (members.size() != roles.size()) throw std::invalid_argument("snapshot_readout: one role per member");
  ReadoutOutput out;
  if (members.empty()) {
    out.state = state;
    out.alpha = b.tape().constant(Matrix(0, 1));
    return out;
  }
  Var projected = ad::matmul(ad::gather_rows(paper_states, members), b(spec.paper_proj));
  Var z = ad::leaky_relu(ad::add(projected, ad::matmul(state, b(spec.state_proj))), slope);
  Var content = ad::matmul(z, b(spec.attention));

  std::vector<std::int32_t> role_ids(roles.size());
  for (std::size_t k = 0; k < roles.size(); ++k) role_ids[k] = static_cast<std::int32_t>(roles[k]);
  Var types = ad::add(ad::gather_rows(b(spec.role_embedding), role_ids),
                      ad::slice_rows(b(spec.age_embedding), age_bin, 1));
  Var type_logit = ad::matmul(ad::leaky_relu(types, slope), b(spec.type_attention));

  const std::vector<std::int32_t> one_group(members.size(), 0);
  out.alpha = ad::segment_softmax(ad::add(content, type_logit), one_group, 1);
  out.state = ad::add(state, ad::matmul(ad::transpose(out.alpha), projected));
  return out;
}

TemporalSpec register_temporal(ParameterStore& store, const std::string& prefix, int hidden, int window,
                               int depth, nn::Rng& rng) {
  TemporalSpec spec;
  spec.position = store.add_xavier(prefix + ".position", window, hidden, rng);
  for (int k = 0; k < depth; ++k) {
    const std::string p = prefix + ".block" + std::to_string(k);
    TemporalBlockSpec blk;
    blk.query = store.add_xavier(p + ".query", hidden, hidden, rng);
    blk.key = store.add_xavier(p + ".key", hidden, hidden, rng);
    blk.value = store.add_xavier(p + ".value", hidden, hidden, rng);
    blk.out = store.add_xavier(p + ".out", hidden, hidden, rng);
    register_norm(store, p + ".norm1", hidden, blk.norm1_gain, blk.norm1_bias);
    register_norm(store, p + ".norm2", hidden, blk.norm2_gain, blk.norm2_bias);
    blk.ffn_in = nn::register_linear(store, p + ".ffn_in", hidden, 2 * hidden, rng);
    blk.ffn_out = nn::register_linear(store, p + ".ffn_out", 2 * hidden, hidden, rng);
    spec.blocks.push_back(std::move(blk));
  }
  return spec;
}

Var temporal_encode(Binder& b, const TemporalSpec& spec, const Var& sequence, const std::vector<bool>& mask,
                    int heads) {
  const ad::Index steps = sequence.rows();
  const ad::Index hidden = sequence.cols();
  if (static_cast<ad::Index>(mask.size()) != steps) throw std::invalid_argument("temporal_encode: mask length");
  if (hidden % heads != 0) throw std::invalid_argument("temporal_encode: heads must divide the state width");
  Var position = b(spec.position);
  if (position.rows() < steps) throw std::invalid_argument("temporal_encode: sequence longer than the window");
  Var x = ad::add(sequence, ad::slice_rows(position, 0, steps));
  const ad::Index width = hidden / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  for (const auto& blk : spec.blocks) {
    Var q = ad::matmul(x, b(blk.query));
    Var k = ad::matmul(x, b(blk.key));
    Var v = ad::matmul(x, b(blk.value));
    std::vector<Var> per_head;
    per_head.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Var qh = ad::slice_cols(q, h * width, width);
      Var kh = ad::slice_cols(k, h * width, width);
      Var vh = ad::slice_cols(v, h * width, width);
      Var p = ad::masked_softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), scale), mask);
      per_head.push_back(ad::matmul(p, vh));
    }
    Var attended = ad::matmul(heads == 1 ? per_head.front() : ad::concat_cols(per_head), b(blk.out));
    x = ad::layer_norm_rows(ad::add(x, attended), b(blk.norm1_gain), b(blk.norm1_bias));
    Var ffn = nn::linear(b, blk.ffn_out, ad::relu(nn::linear(b, blk.ffn_in, x)));
    x = ad::layer_norm_rows(ad::add(x, ffn), b(blk.norm2_gain), b(blk.norm2_bias));
  }
  return x;
}

Encoder::Encoder(EncoderConfig config, ParameterStore& store, nn::Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const int h = config_.hidden_dim;
  for (std::size_t t = 0; t < graph::kNodeTypeCount; ++t) {
    input_[t] = nn::register_linear(store, std::string("enc.in.") + graph::node_type_name(static_cast<NodeType>(t)),
                                    config_.input_dim, h, rng);
  }
  const int gate_cols = config_.gate == features::GateMode::kVector ? h : 1;
  gate_time_ = store.add_xavier("enc.gate.time", h, gate_cols, rng);
  gate_target_ = store.add_xavier("enc.gate.target", h, gate_cols, rng);

  const int positions = config_.share_snapshot_params ? 1 : config_.window;
  const int age_bins = static_cast<int>(config_.snapshot_bins.size());
  for (int l = 0; l < config_.layers; ++l) {
    LayerSpec layer;
    const std::string lp = "enc.l" + std::to_string(l);
    for (int s = 0; s < positions; ++s) {
      const std::string sp = lp + (config_.share_snapshot_params ? std::string(".shared") : ".s" + std::to_string(s));
      SnapshotSpec spec;
      spec.cites = register_compgat(store, sp + ".cites", h, rng);
      spec.cited_by = register_compgat(store, sp + ".cited_by", h, rng);
      for (std::size_t r = 0; r < spec.gin.size(); ++r) {
        const auto& info = graph::relation_info(static_cast<Relation>(r + 2));
        spec.gin[r] = nn::register_mlp(store, sp + "." + info.name, h, h, h, rng, config_.slope);
      }
      spec.readout = register_readout(store, sp + ".readout", h, age_bins, rng);
      layer.snapshots.push_back(std::move(spec));
    }
    layer.temporal = register_temporal(store, lp + ".temporal", h, config_.window, config_.temporal_layers, rng);
    layers_.push_back(std::move(layer));
  }
}

const Encoder::SnapshotSpec& Encoder::snapshot_spec(int layer, int position) const {
  const auto& specs = layers_[static_cast<std::size_t>(layer)].snapshots;
  return config_.share_snapshot_params ? specs.front() : specs[static_cast<std::size_t>(position)];
}

Var Encoder::encode(Binder& b, const GraphInputs& inputs, EncodeTrace* trace) const {
  ad::Tape& tape = b.tape();
  const int steps = static_cast<int>(inputs.snapshots.size());
  if (steps < 1 || steps > config_.window) {
    throw std::invalid_argument("encode: graph has " + std::to_string(steps) + " snapshots, window is " +
                                std::to_string(config_.window));
  }
  const std::vector<bool> mask = inputs.mask();

  struct NodeStates {
    std::array<Var, graph::kNodeTypeCount> by_type;
  };
  auto project = [&](NodeType type, const Matrix& feats) -> Var {
    if (feats.cols() != config_.input_dim) {
      throw std::invalid_argument("encode: feature width " + std::to_string(feats.cols()) + " != input_dim " +
                                  std::to_string(config_.input_dim));
    }
    if (feats.rows() == 0) return Var{};
    return nn::linear(b, input_[static_cast<std::size_t>(type)], tape.constant(feats));
  };

  std::vector<NodeStates> nodes(static_cast<std::size_t>(steps));
  std::vector<Var> states(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const SnapshotInputs& in = inputs.snapshots[static_cast<std::size_t>(s)];
    auto& ns = nodes[static_cast<std::size_t>(s)].by_type;
    ns[0] = project(NodeType::kPaper, in.paper);
    ns[1] = project(NodeType::kAuthor, in.author);
    ns[2] = project(NodeType::kVenue, in.venue);
    ns[3] = project(NodeType::kTime, in.time);
    if (!ns[3].valid()) throw std::invalid_argument("encode: snapshot without a time node");
    Var time_vec = ad::slice_rows(ns[3], in.snapshot.time_node(), 1);
    Var target_vec = nn::linear(b, input_[0], tape.constant(Matrix(in.target)));
    states[static_cast<std::size_t>(s)] =
        features::init_snapshot_state(time_vec, target_vec, b(gate_time_), b(gate_target_), config_.gate);
  }

  Var layer_sum;
  for (int l = 0; l < config_.layers; ++l) {
    LayerTrace lt;
    for (int s = 0; s < steps; ++s) {
      const SnapshotInputs& in = inputs.snapshots[static_cast<std::size_t>(s)];
      const graph::HeteroSnapshot& snap = in.snapshot;
      if (snap.placeholder) {
        if (trace) {
          lt.cites.emplace_back();
          lt.cited_by.emplace_back();
          lt.readout.push_back({states[static_cast<std::size_t>(s)], Var{}});
        }
        continue;
      }
      const SnapshotSpec& spec = snapshot_spec(l, s);
      auto& ns = nodes[static_cast<std::size_t>(s)].by_type;
      const Var paper = ns[0];

      CompGatOutput cites = compgat_layer(b, spec.cites, paper, snap.relation(Relation::kCites), snap.cites_strength,
                                          config_.lambda, config_.heads, config_.softmax_over_c, config_.slope);
      CompGatOutput cited_by =
          compgat_layer(b, spec.cited_by, paper, snap.relation(Relation::kCitedBy), snap.cited_by_strength,
                        config_.lambda, config_.heads, config_.softmax_over_c, config_.slope);

      auto gin = [&](Relation r, const Var& src, const Var& dst) -> Var {
        const auto& edges = snap.relation(r);
        return gin_layer(b, spec.gin[static_cast<std::size_t>(r) - 2], src.valid() ? src : dst, dst, edges,
                         config_.xi);
      };
      std::vector<Var> into_paper{cites.states, cited_by.states};
      into_paper.push_back(gin(Relation::kWrites, ns[1], paper));
      into_paper.push_back(gin(Relation::kPublishes, ns[2], paper));
      into_paper.push_back(gin(Relation::kHave, ns[3], paper));

      NodeStates next;
      next.by_type[0] = relation_aggregate(into_paper);
      if (ns[1].valid()) next.by_type[1] = gin(Relation::kWrittenBy, paper, ns[1]);
      if (ns[2].valid()) next.by_type[2] = gin(Relation::kPublishedIn, paper, ns[2]);
      next.by_type[3] = gin(Relation::kHadBy, paper, ns[3]);
      ns = next.by_type;

      std::vector<std::int32_t> members;
      std::vector<graph::PaperRole> roles;
      for (std::size_t i = 0; i < snap.papers.size(); ++i) {
        if (snap.hops[i] <= 1) {
          members.push_back(static_cast<std::int32_t>(i));
          roles.push_back(snap.roles[i]);
        }
      }
      ReadoutOutput ro = snapshot_readout(b, spec.readout, ns[0], states[static_cast<std::size_t>(s)], members, roles,
                                          config_.snapshot_bin(in.age), config_.slope);
      states[static_cast<std::size_t>(s)] = ro.state;
      if (trace) {
        lt.cites.push_back(std::move(cites));
        lt.cited_by.push_back(std::move(cited_by));
        lt.readout.push_back(std::move(ro));
      }
    }

    Var seq = steps == 1 ? states.front() : ad::concat_rows(states);
    seq = temporal_encode(b, layers_[static_cast<std::size_t>(l)].temporal, seq, mask, config_.temporal_heads);
    for (int s = 0; s < steps; ++s) states[static_cast<std::size_t>(s)] = ad::slice_rows(seq, s, 1);
    layer_sum = layer_sum.valid() ? ad::add(layer_sum, seq) : seq;
    if (trace) {
      lt.sequence = seq;
      trace->layers.push_back(std::move(lt));
    }
  }

  Matrix pool(1, steps);
  for (int s = 0; s < steps; ++s) pool(0, s) = mask[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
  return ad::matmul(tape.constant(std::move(pool)), ad::scale(layer_sum, 1.0 / config_.layers));
}

}  // namespace dppdcc::encoder
