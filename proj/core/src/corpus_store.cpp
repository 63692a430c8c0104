#include <fstream>
#include <sstream>

#include "dppdcc/corpus.hpp"
#include "json.hpp"

namespace dppdcc::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kStoreVersion = 1;

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n\r") != std::string::npos) {
    throw CorpusError(std::string(what) + " '" + s + "' contains a tab or newline");
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + p.string());
  return in;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

json stats_to_json(const IngestStats& s) {
  return json{{"records_read", s.records_read},
              {"accepted", s.accepted},
              {"malformed", s.malformed},
              {"excluded_missing_venue", s.excluded_missing_venue},
              {"dangling_references", s.dangling_references},
              {"self_citations", s.self_citations},
              {"duplicate_references", s.duplicate_references}};
}

IngestStats stats_from_json(const json& j) {
  IngestStats s;
  s.records_read = j.at("records_read").get<std::size_t>();
  s.accepted = j.at("accepted").get<std::size_t>();
  s.malformed = j.at("malformed").get<std::size_t>();
  s.excluded_missing_venue = j.at("excluded_missing_venue").get<std::size_t>();
  s.dangling_references = j.at("dangling_references").get<std::size_t>();
  s.self_citations = j.at("self_citations").get<std::size_t>();
  s.duplicate_references = j.at("duplicate_references").get<std::size_t>();
  return s;
}

}  // namespace

void save_network(const GlobalCitationNetwork& net, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest{{"format", "dppdcc-network"},
                {"version", kStoreVersion},
                {"counts",
                 {{"papers", net.paper_count()},
                  {"authors", net.author_count()},
                  {"venues", net.venue_count()},
                  {"cites", net.cites_edge_count()},
                  {"writes", net.writes_edge_count()},
                  {"publishes", net.publishes_edge_count()},
                  {"have", net.have_edge_count()}}},
                {"time_range", {net.min_time(), net.max_time()}},
                {"ingest", stats_to_json(net.stats())}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';

  auto papers = open_out(dir / "papers.jsonl");
  auto cites = open_out(dir / "cites.tsv");
  auto writes = open_out(dir / "writes.tsv");
  auto publishes = open_out(dir / "publishes.tsv");
  auto have = open_out(dir / "have.tsv");
  for (std::size_t i = 0; i < net.paper_count(); ++i) {
    const auto p = static_cast<PaperIndex>(i);
    const PaperRecord& r = net.paper(p);
    check_field(r.paper_id, "paper_id");
    json node{{"paper_id", r.paper_id},
              {"title", r.title},
              {"abstract", r.abstract},
              {"author_ids", r.author_ids},
              {"venue_id", r.venue_id ? json(*r.venue_id) : json(nullptr)},
              {"pub_time", r.pub_time},
              {"high_impact", r.high_impact}};
    papers << node.dump() << '\n';
    for (PaperIndex q : net.references(p)) {
      cites << r.paper_id << '\t' << net.paper(q).paper_id << '\t' << r.pub_time << '\n';
    }
    for (AuthorIndex a : net.authors_of(p)) writes << net.author_id(a) << '\t' << r.paper_id << '\n';
    if (auto v = net.venue_of(p)) publishes << net.venue_id(*v) << '\t' << r.paper_id << '\n';
    have << r.pub_time << '\t' << r.paper_id << '\n';
  }
  auto authors = open_out(dir / "authors.tsv");
  for (std::size_t a = 0; a < net.author_count(); ++a) {
    check_field(net.author_id(static_cast<AuthorIndex>(a)), "author_id");
    authors << net.author_id(static_cast<AuthorIndex>(a)) << '\n';
  }
  auto venues = open_out(dir / "venues.tsv");
  for (std::size_t v = 0; v < net.venue_count(); ++v) {
    check_field(net.venue_id(static_cast<VenueIndex>(v)), "venue_id");
    venues << net.venue_id(static_cast<VenueIndex>(v)) << '\n';
  }
}

GlobalCitationNetwork load_network(const fs::path& dir) {
  json manifest;
  {
    auto in = open_in(dir / "manifest.json");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw CorpusError("corrupt manifest.json: " + std::string(e.what()));
    }
  }
  if (manifest.value("format", "") != "dppdcc-network") throw CorpusError("not a network store: " + dir.string());
  if (manifest.value("version", 0) != kStoreVersion) throw CorpusError("unsupported network store version");

  std::vector<PaperRecord> records;
  std::unordered_map<std::string, std::size_t> pos;
  {
    auto in = open_in(dir / "papers.jsonl");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw CorpusError("corrupt papers.jsonl", lineno);
      j["references"] = json::array();
      PaperRecord r = parse_record(j.dump());
      pos.emplace(r.paper_id, records.size());
      records.push_back(std::move(r));
    }
  }
  {
    auto in = open_in(dir / "cites.tsv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 3) throw CorpusError("cites.tsv: expected 3 columns", lineno);
      auto it = pos.find(f[0]);
      if (it == pos.end()) throw CorpusError("cites.tsv: unknown citing paper " + f[0], lineno);
      records[it->second].references.push_back(f[1]);
    }
  }
  GlobalCitationNetwork net = ingest_corpus(std::move(records), IngestOptions{true});
  net.stats_ = stats_from_json(manifest.at("ingest"));
  const auto& counts = manifest.at("counts");
  if (counts.at("papers").get<std::size_t>() != net.paper_count() ||
      counts.at("cites").get<std::size_t>() != net.cites_edge_count()) {
    throw CorpusError("network store counts do not match manifest: " + dir.string());
  }
  return net;
}

}  // namespace dppdcc::corpus
