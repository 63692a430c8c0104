#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

#include "dppdcc/corpus.hpp"
#include "dppdcc/graph.hpp"
#include "fixtures.hpp"

using namespace dppdcc;
using dppdcc::fixtures::network;
using dppdcc::fixtures::paper;
using graph::Relation;

namespace {

std::size_t count_role(const graph::HeteroSnapshot& s, graph::PaperRole r) {
  return static_cast<std::size_t>(std::count(s.roles.begin(), s.roles.end(), r));
}

// Destination groups of a paper relation sum to one.
void expect_groups_normalized(const graph::EdgeList& e, const std::vector<double>& w) {
  std::map<std::int32_t, double> sums;
  for (std::size_t k = 0; k < e.size(); ++k) sums[e.dst[k]] += w[k];
  for (const auto& [dst, total] : sums) EXPECT_NEAR(total, 1.0, 1e-9) << "destination " << dst;
}

}  // namespace

TEST(Snapshot, ReferencesBelowLimits) {
  auto net = network({paper("T", 2005, {"r1", "r2", "r3"}), paper("r1", 2001, {"x"}), paper("r2", 2002),
                      paper("r3", 2003, {"x"}), paper("x", 2000)});
  auto s = graph::build_snapshot(net, net.index_of("T"), 2005);
  EXPECT_EQ(s.papers[0], net.index_of("T"));
  EXPECT_EQ(count_role(s, graph::PaperRole::kTarget), 1u);
  EXPECT_GE(count_role(s, graph::PaperRole::kReference), 3u);
  EXPECT_EQ(s.papers.size(), 5u);  // target, three references, x at hop 2
  std::set<corpus::PaperIndex> got(s.papers.begin(), s.papers.end());
  for (const char* id : {"r1", "r2", "r3", "x"}) EXPECT_TRUE(got.count(net.index_of(id))) << id;
  EXPECT_EQ(s.relation(Relation::kCites).size(), 5u);
  EXPECT_EQ(s.authors.size(), 5u);
  EXPECT_EQ(s.venues.size(), 1u);
}

TEST(Snapshot, ErrorsForUnknownAndUnpublished) {
  auto net = network({paper("A", 2003), paper("B", 2004, {"A"})});
  try {
    graph::build_snapshot(net, net.index_of("B"), 2003);
    FAIL();
  } catch (const graph::GraphError& e) {
    EXPECT_EQ(e.code(), graph::GraphError::Code::kNotYetPublished);
  }
  try {
    graph::build_snapshot(net, 17, 2004);
    FAIL();
  } catch (const graph::GraphError& e) {
    EXPECT_EQ(e.code(), graph::GraphError::Code::kUnknownTarget);
  }
}

TEST(Snapshot, NewestCitersKept) {
  std::vector<corpus::PaperRecord> records{paper("T", 0)};
  for (int i = 1; i <= 150; ++i) records.push_back(paper("c" + std::to_string(1000 + i), i, {"T"}));
  auto net = network(records);
  graph::SamplingOptions opts;
  opts.hops = 1;
  opts.limits = {100};
  auto s = graph::build_snapshot(net, net.index_of("T"), 200, opts);
  ASSERT_EQ(s.papers.size(), 101u);
  // brute-force oracle: sort every citer by pub_time descending
  std::vector<corpus::PaperIndex> all(net.citers(net.index_of("T")).begin(), net.citers(net.index_of("T")).end());
  std::sort(all.begin(), all.end(), [&](auto a, auto b) { return net.pub_time(a) > net.pub_time(b); });
  std::set<corpus::PaperIndex> want(all.begin(), all.begin() + 100);
  std::set<corpus::PaperIndex> got(s.papers.begin() + 1, s.papers.end());
  EXPECT_EQ(got, want);
  EXPECT_EQ(count_role(s, graph::PaperRole::kCitation), 100u);
}

TEST(Snapshot, TieBreakByCitationsThenId) {
  // Three references in the same year; z has two citations, x and y none.
  auto net = network({paper("T", 2005, {"x", "y", "z"}), paper("x", 2000), paper("y", 2000), paper("z", 2000),
                      paper("u", 2001, {"z"}), paper("w", 2001, {"z"})});
  graph::SamplingOptions opts;
  opts.hops = 1;
  opts.limits = {2};
  auto s = graph::build_snapshot(net, net.index_of("T"), 2005, opts);
  std::set<corpus::PaperIndex> got(s.papers.begin() + 1, s.papers.end());
  std::set<corpus::PaperIndex> want{net.index_of("z"), net.index_of("x")};
  // citing side: T has no citers, so only references are chosen
  EXPECT_EQ(got, want);
}

TEST(Snapshot, HopLimitsOnSynthCorpus) {
  auto net = network(corpus::synth_corpus(800, 3).records);
  graph::SamplingOptions opts;
  opts.limits = {5, 2};
  for (corpus::PaperIndex p = 0; p < 40; ++p) {
    const auto t = net.max_time();
    auto s = graph::build_snapshot(net, p, t, opts);
    const auto hop1 = static_cast<std::size_t>(std::count(s.hops.begin(), s.hops.end(), 1));
    const auto hop2 = static_cast<std::size_t>(std::count(s.hops.begin(), s.hops.end(), 2));
    EXPECT_LE(hop1, 10u);
    EXPECT_LE(hop2, hop1 * 4);
    for (auto q : s.papers) EXPECT_LE(net.pub_time(q), t);
  }
}

TEST(Cocitation, NormalizationExamples) {
  const std::vector<double> raw{3, 1, 0};
  const std::vector<std::int32_t> dst{0, 0, 1};
  auto w = graph::normalize_per_destination(raw, dst);
  EXPECT_DOUBLE_EQ(w[0], 0.75);
  EXPECT_DOUBLE_EQ(w[1], 0.25);
  EXPECT_DOUBLE_EQ(w[2], 1.0);  // lone in-edge with zero raw strength
  auto u = graph::normalize_per_destination(std::vector<double>{0, 0, 0, 0}, std::vector<std::int32_t>{2, 2, 2, 2});
  for (double x : u) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Cocitation, SharedReferenceCount) {
  // a and b both cite x and y; a cites b.
  auto net = network({paper("x", 2000), paper("y", 2000), paper("b", 2001, {"x", "y"}),
                      paper("a", 2002, {"b", "x", "y"})});
  auto s = graph::build_snapshot(net, net.index_of("a"), 2002);
  const auto& cites = s.relation(Relation::kCites);
  for (std::size_t e = 0; e < cites.size(); ++e) {
    const auto src = s.papers[cites.src[e]], dst = s.papers[cites.dst[e]];
    if (src == net.index_of("a") && dst == net.index_of("b")) EXPECT_DOUBLE_EQ(s.cites_raw[e], 2.0);
    if (dst == net.index_of("x")) EXPECT_DOUBLE_EQ(s.cites_raw[e], 0.0);
  }
  expect_groups_normalized(cites, s.cites_strength);
  expect_groups_normalized(s.relation(Relation::kCitedBy), s.cited_by_strength);
}

TEST(SnapshotProperties, InvariantsOnSynthCorpus) {
  auto net = network(corpus::synth_corpus(600, 9).records);
  graph::SamplingOptions opts;
  opts.limits = {8, 3};
  for (corpus::PaperIndex p = 0; p < static_cast<corpus::PaperIndex>(net.paper_count()); p += 13) {
    const auto t = std::max(net.pub_time(p), net.max_time() - 3);
    auto s = graph::build_snapshot(net, p, t, opts);
    EXPECT_EQ(s, graph::build_snapshot(net, p, t, opts));
    for (auto q : s.papers) EXPECT_LE(net.pub_time(q), t);
    for (std::size_t r = 0; r < graph::kRelationCount; ++r) {
      const auto& info = graph::relations()[r];
      const auto& fwd = s.relation(info.relation);
      const auto& rev = s.relation(info.reverse);
      std::multiset<std::pair<int, int>> a, b;
      for (std::size_t e = 0; e < fwd.size(); ++e) a.insert({fwd.src[e], fwd.dst[e]});
      for (std::size_t e = 0; e < rev.size(); ++e) b.insert({rev.dst[e], rev.src[e]});
      EXPECT_EQ(a, b) << info.name;
    }
    expect_groups_normalized(s.relation(Relation::kCites), s.cites_strength);
    expect_groups_normalized(s.relation(Relation::kCitedBy), s.cited_by_strength);
    // every hop-i paper is within i undirected paper hops of the target
    std::vector<std::vector<int>> adj(s.papers.size());
    const auto& c = s.relation(Relation::kCites);
    for (std::size_t e = 0; e < c.size(); ++e) {
      adj[c.src[e]].push_back(c.dst[e]);
      adj[c.dst[e]].push_back(c.src[e]);
    }
    std::vector<int> dist(s.papers.size(), -1);
    std::queue<int> q;
    dist[0] = 0;
    q.push(0);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    for (std::size_t i = 0; i < s.papers.size(); ++i) {
      ASSERT_GE(dist[i], 0);
      EXPECT_LE(dist[i], s.hops[i]);
    }
    EXPECT_EQ(s.times[s.time_node()], t);
  }
}

TEST(DynamicGraph, ImmediatePaperHasPlaceholders) {
  auto net = network({paper("A", 2000), paper("B", 2005, {"A"})});
  auto g = graph::build_dynamic_graph(net, net.index_of("B"), 2005, 5);
  ASSERT_EQ(g.snapshots.size(), 5u);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(g.snapshots[i].placeholder);
  EXPECT_FALSE(g.snapshots[4].placeholder);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(g.snapshots[i].time_step, 2001 + i);
  EXPECT_EQ(g.snapshots.back().time_step, g.observation_point);
}

TEST(DynamicGraph, OldTargetCitationCountsGrow) {
  auto net = network(corpus::synth_corpus(800, 2).records);
  for (corpus::PaperIndex p = 0; p < 30; ++p) {
    const auto obs = net.max_time();
    if (net.pub_time(p) > obs - 5) continue;
    graph::SamplingOptions opts;
    opts.limits = {1000, 1};
    auto g = graph::build_dynamic_graph(net, p, obs, 5, opts);
    std::size_t prev = 0;
    for (const auto& s : g.snapshots) {
      ASSERT_FALSE(s.placeholder);
      std::size_t in = 0;
      const auto& c = s.relation(Relation::kCites);
      for (std::size_t e = 0; e < c.size(); ++e) in += c.dst[e] == 0;
      EXPECT_EQ(in, net.citations_at(p, s.time_step));
      EXPECT_GE(in, prev);
      prev = in;
    }
  }
}

TEST(GraphIo, JsonRoundTrip) {
  auto net = network(corpus::synth_corpus(300, 8).records);
  graph::SamplingOptions opts;
  opts.limits = {6, 2};
  for (corpus::PaperIndex p = 0; p < 300; p += 37) {
    const auto obs = std::max(net.pub_time(p), net.max_time() - 2);
    auto g = graph::build_dynamic_graph(net, p, obs, 4, opts);
    const auto text = graph::to_json(g, net);
    EXPECT_EQ(graph::from_json(text, net), g);
    EXPECT_EQ(graph::to_json(graph::from_json(text, net), net), text);
  }
}
