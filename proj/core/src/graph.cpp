#include "dppdcc/graph.hpp"

#include <algorithm>
#include <unordered_map>

namespace dppdcc::graph {

namespace {

constexpr std::array<RelationInfo, kRelationCount> kRelations{{
    {Relation::kCites, NodeType::kPaper, NodeType::kPaper, Relation::kCitedBy, "cites"},
    {Relation::kCitedBy, NodeType::kPaper, NodeType::kPaper, Relation::kCites, "cited_by"},
    {Relation::kWrites, NodeType::kAuthor, NodeType::kPaper, Relation::kWrittenBy, "writes"},
    {Relation::kWrittenBy, NodeType::kPaper, NodeType::kAuthor, Relation::kWrites, "written_by"},
    {Relation::kPublishes, NodeType::kVenue, NodeType::kPaper, Relation::kPublishedIn, "publishes"},
    {Relation::kPublishedIn, NodeType::kPaper, NodeType::kVenue, Relation::kPublishes, "published_in"},
    {Relation::kHave, NodeType::kTime, NodeType::kPaper, Relation::kHadBy, "have"},
    {Relation::kHadBy, NodeType::kPaper, NodeType::kTime, Relation::kHave, "had_by"},
}};

enum class Direction { kNone, kCited, kCiting };

struct Candidate {
  PaperIndex paper;
  Direction direction;
};

}  // namespace

const RelationInfo& relation_info(Relation r) { return kRelations[static_cast<std::size_t>(r)]; }
const std::array<RelationInfo, kRelationCount>& relations() { return kRelations; }

const char* node_type_name(NodeType t) {
  switch (t) {
    case NodeType::kPaper: return "paper";
    case NodeType::kAuthor: return "author";
    case NodeType::kVenue: return "venue";
    case NodeType::kTime: return "time";
  }
  return "?";
}

const char* role_name(PaperRole r) {
  switch (r) {
    case PaperRole::kTarget: return "target";
    case PaperRole::kReference: return "reference";
    case PaperRole::kCitation: return "citation";
  }
  return "?";
}

std::size_t HeteroSnapshot::node_count(NodeType t) const {
  switch (t) {
    case NodeType::kPaper: return papers.size();
    case NodeType::kAuthor: return authors.size();
    case NodeType::kVenue: return venues.size();
    case NodeType::kTime: return times.size();
  }
  return 0;
}

std::int32_t HeteroSnapshot::time_node() const {
  auto it = std::lower_bound(times.begin(), times.end(), time_step);
  if (it == times.end() || *it != time_step) return -1;
  return static_cast<std::int32_t>(it - times.begin());
}

std::vector<double> normalize_per_destination(std::span<const double> raw, std::span<const std::int32_t> dst) {
  std::unordered_map<std::int32_t, std::pair<double, std::size_t>> group;
  for (std::size_t e = 0; e < raw.size(); ++e) {
    auto& g = group[dst[e]];
    g.first += raw[e];
    g.second += 1;
  }
  std::vector<double> out(raw.size());
  for (std::size_t e = 0; e < raw.size(); ++e) {
    const auto& [sum, count] = group[dst[e]];
    out[e] = sum > 0.0 ? raw[e] / sum : 1.0 / static_cast<double>(count);
  }
  return out;
}

Strengths cocitation_strengths(const GlobalCitationNetwork& net, std::span<const PaperIndex> papers,
                               const EdgeList& edges, Relation relation, TimeStep t) {
  if (relation != Relation::kCites && relation != Relation::kCitedBy) {
    throw GraphError(GraphError::Code::kInvalidArgument, "co-citation strengths only exist for paper relations");
  }
  std::unordered_map<PaperIndex, std::vector<PaperIndex>> cache;
  auto neighbours = [&](PaperIndex p) -> const std::vector<PaperIndex>& {
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    std::vector<PaperIndex> v;
    if (relation == Relation::kCites) {
      // A reference edge carries its citing paper's time, which is p's.
      if (net.pub_time(p) <= t) {
        auto refs = net.references(p);
        v.assign(refs.begin(), refs.end());
      }
    } else {
      auto citers = net.citers(p);
      auto times = net.citer_times(p);
      for (std::size_t k = 0; k < citers.size() && times[k] <= t; ++k) v.push_back(citers[k]);
      std::sort(v.begin(), v.end());
    }
    return cache.emplace(p, std::move(v)).first->second;
  };

  Strengths out;
  out.raw.resize(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& a = neighbours(papers[static_cast<std::size_t>(edges.src[e])]);
    const auto& b = neighbours(papers[static_cast<std::size_t>(edges.dst[e])]);
    std::size_t shared = 0;
    for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        ++shared;
        ++i;
        ++j;
      }
    }
    out.raw[e] = static_cast<double>(shared);
  }
  out.normalized = normalize_per_destination(out.raw, edges.dst);
  return out;
}

HeteroSnapshot placeholder_snapshot(PaperIndex target, TimeStep t) {
  HeteroSnapshot s;
  s.time_step = t;
  s.target = target;
  s.placeholder = true;
  s.times = {t};
  return s;
}

HeteroSnapshot build_snapshot(const GlobalCitationNetwork& net, PaperIndex target, TimeStep t,
                              const SamplingOptions& options) {
  if (target < 0 || static_cast<std::size_t>(target) >= net.paper_count()) {
    throw GraphError(GraphError::Code::kUnknownTarget, "unknown target paper index " + std::to_string(target));
  }
  if (net.pub_time(target) > t) {
    throw GraphError(GraphError::Code::kNotYetPublished, "not-yet-published: " + net.paper(target).paper_id +
                                                             " appears at " + std::to_string(net.pub_time(target)) +
                                                             ", after " + std::to_string(t));
  }
  if (options.hops < 1 || options.limits.size() != static_cast<std::size_t>(options.hops)) {
    throw GraphError(GraphError::Code::kInvalidArgument, "sampling needs hops >= 1 and one limit per hop");
  }

  // Newest first, then most cited at t, then paper id.
  std::unordered_map<PaperIndex, std::size_t> cites_at_t;
  auto cited_count = [&](PaperIndex p) {
    auto it = cites_at_t.find(p);
    if (it != cites_at_t.end()) return it->second;
    return cites_at_t.emplace(p, net.citations_at(p, t)).first->second;
  };
  auto before = [&](const Candidate& a, const Candidate& b) {
    const auto ta = net.pub_time(a.paper), tb = net.pub_time(b.paper);
    if (ta != tb) return ta > tb;
    const auto ca = cited_count(a.paper), cb = cited_count(b.paper);
    if (ca != cb) return ca > cb;
    return a.paper < b.paper;
  };
  auto top = [&](std::vector<Candidate> c, int limit) {
    std::sort(c.begin(), c.end(), before);
    if (c.size() > static_cast<std::size_t>(std::max(0, limit))) c.resize(static_cast<std::size_t>(std::max(0, limit)));
    return c;
  };

  std::vector<PaperIndex> papers{target};
  std::vector<PaperRole> roles{PaperRole::kTarget};
  std::vector<int> hops{0};
  std::unordered_map<PaperIndex, std::int32_t> local{{target, 0}};
  std::vector<Candidate> frontier{{target, Direction::kNone}};

  for (int h = 1; h <= options.hops; ++h) {
    const int limit = options.limits[static_cast<std::size_t>(h - 1)];
    std::vector<Candidate> next;
    for (const Candidate& u : frontier) {
      const bool go_cited = u.direction == Direction::kNone || options.expand_both_directions ||
                            u.direction == Direction::kCited;
      const bool go_citing = u.direction == Direction::kNone || options.expand_both_directions ||
                             u.direction == Direction::kCiting;
      std::vector<Candidate> cited, citing;
      if (go_cited) {
        for (PaperIndex q : net.references(u.paper)) {
          if (net.pub_time(q) <= t) cited.push_back({q, Direction::kCited});
        }
      }
      if (go_citing) {
        auto citers = net.citers(u.paper);
        auto times = net.citer_times(u.paper);
        for (std::size_t k = 0; k < citers.size() && times[k] <= t; ++k) citing.push_back({citers[k], Direction::kCiting});
      }
      std::vector<Candidate> chosen;
      if (options.limit_per_direction) {
        chosen = top(std::move(cited), limit);
        auto b = top(std::move(citing), limit);
        chosen.insert(chosen.end(), b.begin(), b.end());
      } else {
        cited.insert(cited.end(), citing.begin(), citing.end());
        chosen = top(std::move(cited), limit);
      }
      for (const Candidate& c : chosen) {
        if (local.count(c.paper)) continue;
        local.emplace(c.paper, static_cast<std::int32_t>(papers.size()));
        papers.push_back(c.paper);
        roles.push_back(c.direction == Direction::kCited ? PaperRole::kReference : PaperRole::kCitation);
        hops.push_back(h);
        next.push_back(c);
      }
    }
    frontier = std::move(next);
  }

  // Canonical order: target first, then ascending global index.
  std::vector<std::size_t> order(papers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin() + 1, order.end(), [&](std::size_t a, std::size_t b) { return papers[a] < papers[b]; });

  HeteroSnapshot s;
  s.time_step = t;
  s.target = target;
  local.clear();
  for (std::size_t i : order) {
    local.emplace(papers[i], static_cast<std::int32_t>(s.papers.size()));
    s.papers.push_back(papers[i]);
    s.roles.push_back(roles[i]);
    s.hops.push_back(hops[i]);
  }

  auto& cites = s.relation(Relation::kCites);
  auto& cited_by = s.relation(Relation::kCitedBy);
  for (std::size_t a = 0; a < s.papers.size(); ++a) {
    for (PaperIndex q : net.references(s.papers[a])) {
      auto it = local.find(q);
      if (it == local.end()) continue;
      cites.src.push_back(static_cast<std::int32_t>(a));
      cites.dst.push_back(it->second);
      cited_by.src.push_back(it->second);
      cited_by.dst.push_back(static_cast<std::int32_t>(a));
    }
  }

  std::vector<AuthorIndex> authors;
  std::vector<VenueIndex> venues;
  std::vector<TimeStep> times{t};
  for (PaperIndex p : s.papers) {
    for (AuthorIndex a : net.authors_of(p)) authors.push_back(a);
    if (auto v = net.venue_of(p)) venues.push_back(*v);
    times.push_back(net.pub_time(p));
  }
  auto uniq = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(authors);
  uniq(venues);
  uniq(times);
  s.authors = std::move(authors);
  s.venues = std::move(venues);
  s.times = std::move(times);

  auto local_of = [](const auto& v, auto x) {
    return static_cast<std::int32_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  for (std::size_t i = 0; i < s.papers.size(); ++i) {
    const auto p = static_cast<std::int32_t>(i);
    for (AuthorIndex a : net.authors_of(s.papers[i])) {
      const auto la = local_of(s.authors, a);
      s.relation(Relation::kWrites).src.push_back(la);
      s.relation(Relation::kWrites).dst.push_back(p);
      s.relation(Relation::kWrittenBy).src.push_back(p);
      s.relation(Relation::kWrittenBy).dst.push_back(la);
    }
    if (auto v = net.venue_of(s.papers[i])) {
      const auto lv = local_of(s.venues, *v);
      s.relation(Relation::kPublishes).src.push_back(lv);
      s.relation(Relation::kPublishes).dst.push_back(p);
      s.relation(Relation::kPublishedIn).src.push_back(p);
      s.relation(Relation::kPublishedIn).dst.push_back(lv);
    }
    const auto lt = local_of(s.times, net.pub_time(s.papers[i]));
    s.relation(Relation::kHave).src.push_back(lt);
    s.relation(Relation::kHave).dst.push_back(p);
    s.relation(Relation::kHadBy).src.push_back(p);
    s.relation(Relation::kHadBy).dst.push_back(lt);
  }

  auto sc = cocitation_strengths(net, s.papers, cites, Relation::kCites, t);
  s.cites_raw = std::move(sc.raw);
  s.cites_strength = std::move(sc.normalized);
  auto sb = cocitation_strengths(net, s.papers, cited_by, Relation::kCitedBy, t);
  s.cited_by_raw = std::move(sb.raw);
  s.cited_by_strength = std::move(sb.normalized);
  return s;
}

DynamicHeteroGraph build_dynamic_graph(const GlobalCitationNetwork& net, PaperIndex target,
                                       TimeStep observation_point, int window, const SamplingOptions& options) {
  if (window < 1) throw GraphError(GraphError::Code::kInvalidArgument, "window must be >= 1");
  if (target < 0 || static_cast<std::size_t>(target) >= net.paper_count()) {
    throw GraphError(GraphError::Code::kUnknownTarget, "unknown target paper index " + std::to_string(target));
  }
  const TimeStep published = net.pub_time(target);
  if (published > observation_point) {
    throw GraphError(GraphError::Code::kNotYetPublished,
                     "not-yet-published: " + net.paper(target).paper_id + " at observation point " +
                         std::to_string(observation_point));
  }
  DynamicHeteroGraph g;
  g.target = target;
  g.observation_point = observation_point;
  for (TimeStep t = observation_point - window + 1; t <= observation_point; ++t) {
    g.snapshots.push_back(t < published ? placeholder_snapshot(target, t) : build_snapshot(net, target, t, options));
  }
  return g;
}

}  // namespace dppdcc::graph
