#include <fstream>

#include "dppdcc/graph.hpp"
#include "json.hpp"

namespace dppdcc::graph {

using nlohmann::json;

namespace {

PaperRole parse_role(const std::string& s) {
  if (s == "target") return PaperRole::kTarget;
  if (s == "reference") return PaperRole::kReference;
  if (s == "citation") return PaperRole::kCitation;
  throw GraphError(GraphError::Code::kInvalidArgument, "unknown paper role '" + s + "'");
}

json snapshot_json(const HeteroSnapshot& s, const GlobalCitationNetwork& net) {
  json j;
  j["time_step"] = s.time_step;
  j["placeholder"] = s.placeholder;
  json papers = json::array(), roles = json::array(), authors = json::array(), venues = json::array();
  for (PaperIndex p : s.papers) papers.push_back(net.paper(p).paper_id);
  for (PaperRole r : s.roles) roles.push_back(role_name(r));
  for (AuthorIndex a : s.authors) authors.push_back(net.author_id(a));
  for (VenueIndex v : s.venues) venues.push_back(net.venue_id(v));
  j["papers"] = std::move(papers);
  j["roles"] = std::move(roles);
  j["hops"] = s.hops;
  j["authors"] = std::move(authors);
  j["venues"] = std::move(venues);
  j["times"] = s.times;
  json edges = json::object();
  for (const auto& info : relations()) {
    const EdgeList& e = s.relation(info.relation);
    json list = json::array();
    for (std::size_t k = 0; k < e.size(); ++k) list.push_back({e.src[k], e.dst[k]});
    edges[info.name] = std::move(list);
  }
  j["edges"] = std::move(edges);
  j["cites_raw"] = s.cites_raw;
  j["cites_strength"] = s.cites_strength;
  j["cited_by_raw"] = s.cited_by_raw;
  j["cited_by_strength"] = s.cited_by_strength;
  return j;
}

HeteroSnapshot snapshot_from(const json& j, PaperIndex target, const GlobalCitationNetwork& net) {
  HeteroSnapshot s;
  s.target = target;
  s.time_step = j.at("time_step").get<TimeStep>();
  s.placeholder = j.at("placeholder").get<bool>();
  for (const auto& id : j.at("papers")) s.papers.push_back(net.index_of(id.get<std::string>()));
  for (const auto& r : j.at("roles")) s.roles.push_back(parse_role(r.get<std::string>()));
  s.hops = j.at("hops").get<std::vector<int>>();
  for (const auto& id : j.at("authors")) {
    auto a = net.find_author(id.get<std::string>());
    if (!a) throw GraphError(GraphError::Code::kInvalidArgument, "unknown author " + id.get<std::string>());
    s.authors.push_back(*a);
  }
  for (const auto& id : j.at("venues")) {
    auto v = net.find_venue(id.get<std::string>());
    if (!v) throw GraphError(GraphError::Code::kInvalidArgument, "unknown venue " + id.get<std::string>());
    s.venues.push_back(*v);
  }
  s.times = j.at("times").get<std::vector<TimeStep>>();
  const json& edges = j.at("edges");
  for (const auto& info : relations()) {
    EdgeList& e = s.relation(info.relation);
    for (const auto& pair : edges.at(info.name)) {
      e.src.push_back(pair.at(0).get<std::int32_t>());
      e.dst.push_back(pair.at(1).get<std::int32_t>());
    }
  }
  s.cites_raw = j.at("cites_raw").get<std::vector<double>>();
  s.cites_strength = j.at("cites_strength").get<std::vector<double>>();
  s.cited_by_raw = j.at("cited_by_raw").get<std::vector<double>>();
  s.cited_by_strength = j.at("cited_by_strength").get<std::vector<double>>();
  return s;
}

}  // namespace

std::string to_json(const DynamicHeteroGraph& g, const GlobalCitationNetwork& net) {
  json j;
  j["format"] = "dppdcc-graph";
  j["version"] = 1;
  j["target"] = net.paper(g.target).paper_id;
  j["observation_point"] = g.observation_point;
  json snaps = json::array();
  for (const auto& s : g.snapshots) snaps.push_back(snapshot_json(s, net));
  j["snapshots"] = std::move(snaps);
  return j.dump();
}

DynamicHeteroGraph from_json(const std::string& text, const GlobalCitationNetwork& net) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "dppdcc-graph") {
    throw GraphError(GraphError::Code::kInvalidArgument, "not a serialized dynamic graph");
  }
  DynamicHeteroGraph g;
  g.target = net.index_of(j.at("target").get<std::string>());
  g.observation_point = j.at("observation_point").get<TimeStep>();
  for (const auto& s : j.at("snapshots")) g.snapshots.push_back(snapshot_from(s, g.target, net));
  return g;
}

void save_graphs(const std::vector<DynamicHeteroGraph>& graphs, const GlobalCitationNetwork& net,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "graphs.jsonl", std::ios::binary);
  if (!out) throw GraphError(GraphError::Code::kInvalidArgument, "cannot write " + (dir / "graphs.jsonl").string());
  for (const auto& g : graphs) out << to_json(g, net) << '\n';
}

std::vector<DynamicHeteroGraph> load_graphs(const std::filesystem::path& dir, const GlobalCitationNetwork& net) {
  std::ifstream in(dir / "graphs.jsonl", std::ios::binary);
  if (!in) throw GraphError(GraphError::Code::kInvalidArgument, "cannot read " + (dir / "graphs.jsonl").string());
  std::vector<DynamicHeteroGraph> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(from_json(line, net));
  }
  return out;
}

}  // namespace dppdcc::graph
