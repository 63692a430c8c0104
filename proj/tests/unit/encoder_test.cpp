#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dppdcc/dataset.hpp"
#include "dppdcc/encoder.hpp"
#include "fixtures.hpp"

using namespace dppdcc;
using ad::Matrix;
using ad::Var;
using dppdcc::fixtures::random_edges;
using dppdcc::fixtures::random_matrix;

namespace {

constexpr int kHidden = 8;
constexpr int kHeads = 2;
constexpr double kSlope = 0.2;

struct GatFixture {
  nn::ParameterStore store;
  nn::Rng rng{3};
  encoder::CompGatSpec spec = encoder::register_compgat(store, "t", kHidden, rng);
  GatFixture() {
    store.at(spec.norm_gain) = random_matrix(1, kHidden, 41, 0.5).array() + 1.0;
    store.at(spec.norm_bias) = random_matrix(1, kHidden, 42, 0.1);
  }
};

encoder::CompGatOutput run(GatFixture& f, ad::Tape& tape, const Matrix& states, const fixtures::RandomEdges& g,
                           double lambda, bool softmax_over_c = false) {
  nn::Binder b(tape, f.store);
  return encoder::compgat_layer(b, f.spec, tape.constant(states), g.edges, g.strengths, lambda, kHeads, softmax_over_c,
                                kSlope);
}

pipeline::Workspace tiny_workspace(int dim = 6) {
  auto net = fixtures::network(fixtures::tiny_corpus());
  const auto n = static_cast<ad::Index>(net.paper_count());
  return pipeline::make_workspace(std::move(net), random_matrix(n, dim, 17));
}

encoder::EncoderConfig small_config(int dim = 6) {
  encoder::EncoderConfig c;
  c.input_dim = dim;
  c.hidden_dim = 4;
  c.layers = 2;
  c.heads = 2;
  c.temporal_layers = 1;
  c.temporal_heads = 2;
  c.window = 3;
  return c;
}

encoder::GraphInputs inputs_for(const pipeline::Workspace& ws, const std::string& id, corpus::TimeStep obs, int window) {
  auto g = graph::build_dynamic_graph(*ws.net, ws.net->index_of(id), obs, window);
  return encoder::prepare_inputs(g, *ws.table, *ws.net);
}

Matrix encode_value(const encoder::Encoder& enc, const nn::ParameterStore& store, const encoder::GraphInputs& in) {
  ad::Tape tape;
  nn::Binder b(tape, store);
  return enc.encode(b, in).value();
}

}  // namespace

TEST(CompGat, LambdaBoundaries) {
  GatFixture f;
  const Matrix states = random_matrix(7, kHidden, 1);
  const auto g = random_edges(7, 20, 2);
  ad::Tape tape;
  const Matrix want = fixtures::gatv2_attention(f.store, f.spec, states, g.edges, kHeads, kSlope);
  EXPECT_LT((run(f, tape, states, g, 0.0).alpha.value() - want).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix at_one = run(f, tape, states, g, 1.0).alpha.value();
  for (ad::Index e = 0; e < at_one.rows(); ++e) {
    for (int h = 0; h < kHeads; ++h) EXPECT_NEAR(at_one(e, h), g.strengths[e], 1e-12);
  }
}

TEST(CompGat, AttentionRowsSumToOne) {
  GatFixture f;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix states = random_matrix(9, kHidden, 100 + trial);
    const auto g = random_edges(9, 25, 200 + trial);
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      for (bool soft : {false, true}) {
        ad::Tape tape;
        const Matrix alpha = run(f, tape, states, g, lambda, soft).alpha.value();
        Matrix sums = Matrix::Zero(9, kHeads);
        for (ad::Index e = 0; e < alpha.rows(); ++e) sums.row(g.edges.dst[e]) += alpha.row(e);
        for (int i = 0; i < 9; ++i) {
          const bool has_in = std::count(g.edges.dst.begin(), g.edges.dst.end(), i) > 0;
          for (int h = 0; h < kHeads; ++h) EXPECT_NEAR(sums(i, h), has_in ? 1.0 : 0.0, 1e-12);
        }
      }
    }
  }
}

TEST(CompGat, SingleNeighbourGetsFullWeight) {
  GatFixture f;
  fixtures::RandomEdges g;
  g.edges.src = {1};
  g.edges.dst = {0};
  g.strengths = {1.0};
  ad::Tape tape;
  const Matrix alpha = run(f, tape, random_matrix(2, kHidden, 5), g, 0.5).alpha.value();
  EXPECT_DOUBLE_EQ(alpha(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(alpha(0, 1), 1.0);
}

TEST(CompGat, StatesMatchStraightLineOracle) {
  GatFixture f;
  const Matrix states = random_matrix(6, kHidden, 7);
  const auto g = random_edges(6, 14, 8);
  for (double lambda : {0.0, 0.3, 1.0}) {
    ad::Tape tape;
    auto out = run(f, tape, states, g, lambda);
    Matrix alpha = (1.0 - lambda) * fixtures::gatv2_attention(f.store, f.spec, states, g.edges, kHeads, kSlope);
    for (ad::Index e = 0; e < alpha.rows(); ++e) alpha.row(e).array() += lambda * g.strengths[e];
    const Matrix want = fixtures::compgat_states(f.store, f.spec, states, g.edges, alpha, kHeads, kSlope);
    EXPECT_LT((out.states.value() - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CompGat, IsolatedNodeKeepsResidualPath) {
  GatFixture f;
  const Matrix states = random_matrix(4, kHidden, 9);
  fixtures::RandomEdges g;
  g.edges.src = {1, 2};
  g.edges.dst = {0, 0};
  g.strengths = {0.5, 0.5};
  ad::Tape tape;
  auto out = run(f, tape, states, g, 0.5);
  fixtures::RandomEdges empty;
  ad::Tape tape2;
  auto bare = run(f, tape2, states, empty, 0.5);
  // node 3 has no in-edges in either case
  EXPECT_EQ(out.states.value().row(3), bare.states.value().row(3));
  EXPECT_NE(out.states.value().row(0), bare.states.value().row(0));
}

TEST(CompGat, PermutationEquivariant) {
  GatFixture f;
  const Matrix states = random_matrix(6, kHidden, 10);
  const auto g = random_edges(6, 15, 11);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};  // old node i becomes perm[i]
  Matrix moved(6, kHidden);
  for (int i = 0; i < 6; ++i) moved.row(perm[i]) = states.row(i);
  fixtures::RandomEdges h = g;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    h.edges.src[e] = perm[g.edges.src[e]];
    h.edges.dst[e] = perm[g.edges.dst[e]];
  }
  ad::Tape t1, t2;
  const Matrix a = run(f, t1, states, g, 0.5).states.value();
  const Matrix b = run(f, t2, moved, h, 0.5).states.value();
  for (int i = 0; i < 6; ++i) EXPECT_LT((a.row(i) - b.row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gin, HandSumAndPermutationInvariance) {
  nn::ParameterStore store;
  nn::Rng rng(4);
  auto mlp = nn::register_mlp(store, "g", kHidden, kHidden, kHidden, rng);
  const Matrix src = random_matrix(3, kHidden, 12), dst = random_matrix(2, kHidden, 13);
  graph::EdgeList edges{{0, 2}, {1, 1}};  // u = src 0 and v = src 2 into dst 1
  const double xi = 0.3;
  ad::Tape tape;
  nn::Binder b(tape, store);
  const Matrix got = encoder::gin_layer(b, mlp, tape.constant(src), tape.constant(dst), edges, xi).value();
  Matrix pooled = (1.0 + xi) * dst;
  pooled.row(1) += src.row(0) + src.row(2);
  const Matrix want = nn::mlp(b, mlp, tape.constant(pooled)).value();
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
  // no neighbours: f((1 + xi) dst)
  const Matrix lone = nn::mlp(b, mlp, tape.constant(Matrix((1.0 + xi) * dst.row(0)))).value();
  EXPECT_LT((got.row(0) - lone.row(0)).cwiseAbs().maxCoeff(), 1e-14);
  graph::EdgeList swapped{{2, 0}, {1, 1}};
  const Matrix again = encoder::gin_layer(b, mlp, tape.constant(src), tape.constant(dst), swapped, xi).value();
  EXPECT_LT((again - got).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RelationAggregate, SumAndIdentity) {
  ad::Tape tape;
  const Matrix x = random_matrix(3, 4, 1), y = random_matrix(3, 4, 2);
  std::vector<Var> one{tape.constant(x)};
  EXPECT_EQ(encoder::relation_aggregate(one).value(), x);
  std::vector<Var> two{tape.constant(x), tape.constant(y)};
  EXPECT_EQ(encoder::relation_aggregate(two).value(), Matrix(x + y));
  EXPECT_THROW(encoder::relation_aggregate(std::span<const Var>{}), std::invalid_argument);
}

TEST(Readout, SingleMemberAndSimplex) {
  nn::ParameterStore store;
  nn::Rng rng(6);
  auto spec = encoder::register_readout(store, "r", kHidden, 5, rng);
  const Matrix papers = random_matrix(5, kHidden, 20);
  const Matrix state = random_matrix(1, kHidden, 21);
  ad::Tape tape;
  nn::Binder b(tape, store);
  std::vector<std::int32_t> one{3};
  std::vector<graph::PaperRole> role{graph::PaperRole::kCitation};
  auto single = encoder::snapshot_readout(b, spec, tape.constant(papers), tape.constant(state), one, role, 2, kSlope);
  EXPECT_DOUBLE_EQ(single.alpha.value()(0, 0), 1.0);
  const Matrix want = state + papers.row(3) * store.at(spec.paper_proj);
  EXPECT_LT((single.state.value() - want).cwiseAbs().maxCoeff(), 1e-14);

  std::vector<std::int32_t> many{0, 1, 2, 4};
  std::vector<graph::PaperRole> roles{graph::PaperRole::kTarget, graph::PaperRole::kReference,
                                      graph::PaperRole::kCitation, graph::PaperRole::kReference};
  auto multi = encoder::snapshot_readout(b, spec, tape.constant(papers), tape.constant(state), many, roles, 0, kSlope);
  EXPECT_NEAR(multi.alpha.value().sum(), 1.0, 1e-14);

  auto empty = encoder::snapshot_readout(b, spec, tape.constant(papers), tape.constant(state), {}, {}, 0, kSlope);
  EXPECT_EQ(empty.state.value(), state);
}

TEST(Readout, LargerLogitRaisesWeight) {
  nn::ParameterStore store;
  nn::Rng rng(8);
  auto spec = encoder::register_readout(store, "r", kHidden, 5, rng);
  Matrix papers = random_matrix(3, kHidden, 30);
  const Matrix state = random_matrix(1, kHidden, 31);
  std::vector<std::int32_t> members{0, 1, 2};
  std::vector<graph::PaperRole> roles(3, graph::PaperRole::kReference);
  // Make the content logit linear in the paper state so scaling is monotone.
  store.at(spec.state_proj).setZero();
  store.at(spec.paper_proj).setIdentity();
  papers = papers.cwiseAbs();
  store.at(spec.attention) = Matrix::Ones(kHidden, 1);
  double last = -1.0;
  for (double scale : {1.0, 2.0, 4.0}) {
    Matrix p = papers;
    p.row(1) *= scale;
    ad::Tape tape;
    nn::Binder b(tape, store);
    auto out = encoder::snapshot_readout(b, spec, tape.constant(p), tape.constant(state), members, roles, 1, kSlope);
    EXPECT_GT(out.alpha.value()(1, 0), last);
    last = out.alpha.value()(1, 0);
  }
}

TEST(Temporal, MaskedPositionIsNeverAttended) {
  nn::ParameterStore store;
  nn::Rng rng(9);
  auto spec = encoder::register_temporal(store, "tm", kHidden, 4, 2, rng);
  Matrix seq = random_matrix(4, kHidden, 40);
  const std::vector<bool> mask{false, true, false, true};
  auto run_seq = [&](const Matrix& s) {
    ad::Tape tape;
    nn::Binder b(tape, store);
    return Matrix(encoder::temporal_encode(b, spec, tape.constant(s), mask, kHeads).value());
  };
  const Matrix base = run_seq(seq);
  seq.row(0) *= -3.0;
  seq.row(2).setConstant(7.0);
  const Matrix changed = run_seq(seq);
  EXPECT_EQ(base.row(1), changed.row(1));
  EXPECT_EQ(base.row(3), changed.row(3));
}

TEST(Temporal, PositionSensitiveAndDeterministic) {
  nn::ParameterStore store;
  nn::Rng rng(10);
  auto spec = encoder::register_temporal(store, "tm", kHidden, 2, 1, rng);
  const Matrix s1 = random_matrix(1, kHidden, 50), s2 = random_matrix(1, kHidden, 51);
  auto run_seq = [&](const Matrix& a, const Matrix& b2) {
    Matrix s(2, kHidden);
    s << a, b2;
    ad::Tape tape;
    nn::Binder b(tape, store);
    return Matrix(encoder::temporal_encode(b, spec, tape.constant(s), {true, true}, kHeads).value());
  };
  const Matrix fwd = run_seq(s1, s2), rev = run_seq(s2, s1);
  EXPECT_GT((fwd.row(0) - rev.row(1)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(run_seq(s1, s2), fwd);
}

TEST(Encoder, ImmediatePaperGivesFiniteOutput) {
  auto ws = tiny_workspace();
  nn::ParameterStore store;
  nn::Rng rng(1);
  encoder::Encoder enc(small_config(), store, rng);
  auto in = inputs_for(ws, "p10", 2006, 3);
  EXPECT_EQ(in.mask(), (std::vector<bool>{false, false, true}));
  const Matrix o = encode_value(enc, store, in);
  EXPECT_EQ(o.rows(), 1);
  EXPECT_EQ(o.cols(), 4);
  EXPECT_TRUE(o.allFinite());
  EXPECT_EQ(encode_value(enc, store, in), o);
}

TEST(Encoder, PlaceholderFeaturesDoNotReachOutput) {
  auto ws = tiny_workspace();
  nn::ParameterStore store;
  nn::Rng rng(2);
  encoder::Encoder enc(small_config(), store, rng);
  auto in = inputs_for(ws, "p08", 2006, 3);
  ASSERT_TRUE(in.snapshots[0].snapshot.placeholder);
  const Matrix base = encode_value(enc, store, in);
  in.snapshots[0].time.setConstant(123.0);
  in.snapshots[0].target *= -5.0;
  EXPECT_EQ(encode_value(enc, store, in), base);
}

TEST(Encoder, SingleLayerSumsSnapshotStates) {
  auto ws = tiny_workspace();
  auto c = small_config();
  c.layers = 1;
  nn::ParameterStore store;
  nn::Rng rng(3);
  encoder::Encoder enc(c, store, rng);
  auto in = inputs_for(ws, "p07", 2006, 3);
  ad::Tape tape;  // trace entries live on this tape
  nn::Binder b(tape, store);
  encoder::EncodeTrace trace;
  const Matrix o = enc.encode(b, in, &trace).value();
  ASSERT_EQ(trace.layers.size(), 1u);
  const Matrix& seq = trace.layers[0].sequence.value();
  EXPECT_LT((o - seq.colwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Encoder, ReadoutAttentionSumsToOne) {
  auto ws = tiny_workspace();
  nn::ParameterStore store;
  nn::Rng rng(4);
  encoder::Encoder enc(small_config(), store, rng);
  ad::Tape tape;
  nn::Binder b(tape, store);
  encoder::EncodeTrace trace;
  enc.encode(b, inputs_for(ws, "p07", 2006, 3), &trace);
  for (const auto& layer : trace.layers) {
    for (const auto& r : layer.readout) {
      if (r.alpha.valid()) EXPECT_NEAR(r.alpha.value().sum(), 1.0, 1e-12);
    }
  }
}

TEST(Encoder, SharedSnapshotParametersAreFewer) {
  auto c = small_config();
  nn::ParameterStore a, b;
  nn::Rng r1(1), r2(1);
  encoder::Encoder distinct(c, a, r1);
  c.share_snapshot_params = true;
  encoder::Encoder shared(c, b, r2);
  EXPECT_LT(b.scalar_count(), a.scalar_count());
  EXPECT_TRUE(a.contains("enc.l0.s2.cites.attention"));
  EXPECT_TRUE(b.contains("enc.l0.shared.cites.attention"));
}

TEST(Encoder, ConfigValidation) {
  auto c = small_config();
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.layers = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  EXPECT_EQ(c.snapshot_bin(0), 0);
  EXPECT_EQ(c.snapshot_bin(2), 2);
  EXPECT_EQ(c.snapshot_bin(5), 3);
  EXPECT_EQ(c.snapshot_bin(6), 4);
  EXPECT_EQ(c.snapshot_bin(40), 4);
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  auto ws = tiny_workspace();
  nn::ParameterStore store;
  nn::Rng rng(5);
  auto c = small_config();
  c.layers = 1;
  encoder::Encoder enc(c, store, rng);
  auto in = inputs_for(ws, "p05", 2005, 3);
  const Matrix probe = random_matrix(1, c.hidden_dim, 77);
  auto r = fixtures::check_gradients(
      store,
      [&](nn::Binder& b) {
        auto o = enc.encode(b, in);
        return ad::sum_all(ad::mul(o, b.tape().constant(probe)));
      },
      1e-6, 1e-6);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
}
