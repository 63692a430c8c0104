#include "dppdcc/corpus.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"

namespace dppdcc::corpus {

using nlohmann::json;

std::optional<PaperIndex> GlobalCitationNetwork::find(std::string_view paper_id) const {
  auto it = index_.find(std::string(paper_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PaperIndex GlobalCitationNetwork::index_of(std::string_view paper_id) const {
  auto p = find(paper_id);
  if (!p) throw CorpusError("unknown paper_id '" + std::string(paper_id) + "'");
  return *p;
}

std::optional<VenueIndex> GlobalCitationNetwork::venue_of(PaperIndex p) const {
  const VenueIndex v = paper_venue_[static_cast<std::size_t>(p)];
  if (v < 0) return std::nullopt;
  return v;
}

std::span<const PaperIndex> GlobalCitationNetwork::papers_at_time(TimeStep y) const {
  if (papers_.empty() || y < min_time_ || y > max_time_) return {};
  return time_papers_[static_cast<std::size_t>(y - min_time_)];
}

std::optional<AuthorIndex> GlobalCitationNetwork::find_author(std::string_view id) const {
  auto it = author_index_.find(std::string(id));
  if (it == author_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<VenueIndex> GlobalCitationNetwork::find_venue(std::string_view id) const {
  auto it = venue_index_.find(std::string(id));
  if (it == venue_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t GlobalCitationNetwork::citations_at(PaperIndex p, TimeStep t) const {
  if (p < 0 || static_cast<std::size_t>(p) >= papers_.size()) {
    throw CorpusError("paper index out of range: " + std::to_string(p));
  }
  const auto& times = citer_times_[static_cast<std::size_t>(p)];
  return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

std::size_t GlobalCitationNetwork::citations_at(std::string_view paper_id, TimeStep t) const {
  return citations_at(index_of(paper_id), t);
}

std::vector<TimeStep> GlobalCitationNetwork::time_steps() const {
  std::vector<TimeStep> out;
  for (TimeStep y = min_time_; !papers_.empty() && y <= max_time_; ++y) {
    if (!papers_at_time(y).empty()) out.push_back(y);
  }
  return out;
}

GlobalCitationNetwork ingest_corpus(std::vector<PaperRecord> records, const IngestOptions& /*options*/,
                                    IngestStats stats) {
  std::sort(records.begin(), records.end(),
            [](const PaperRecord& a, const PaperRecord& b) { return a.paper_id < b.paper_id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].paper_id == records[i - 1].paper_id) {
      throw CorpusError("duplicate paper_id '" + records[i].paper_id + "'");
    }
  }

  GlobalCitationNetwork net;
  for (auto& r : records) {
    if (!r.venue_id && !r.high_impact) {
      ++stats.excluded_missing_venue;
      continue;
    }
    net.index_.emplace(r.paper_id, static_cast<PaperIndex>(net.papers_.size()));
    net.papers_.push_back(std::move(r));
  }
  const std::size_t n = net.papers_.size();
  stats.accepted = n;

  std::set<std::string> authors, venues;
  for (const auto& r : net.papers_) {
    authors.insert(r.author_ids.begin(), r.author_ids.end());
    if (r.venue_id) venues.insert(*r.venue_id);
  }
  net.author_ids_.assign(authors.begin(), authors.end());
  net.venue_ids_.assign(venues.begin(), venues.end());
  for (std::size_t i = 0; i < net.author_ids_.size(); ++i) {
    net.author_index_.emplace(net.author_ids_[i], static_cast<AuthorIndex>(i));
  }
  for (std::size_t i = 0; i < net.venue_ids_.size(); ++i) {
    net.venue_index_.emplace(net.venue_ids_[i], static_cast<VenueIndex>(i));
  }

  net.references_.assign(n, {});
  net.citers_.assign(n, {});
  net.citer_times_.assign(n, {});
  net.paper_authors_.assign(n, {});
  net.paper_venue_.assign(n, -1);
  net.author_papers_.assign(net.author_ids_.size(), {});
  net.venue_papers_.assign(net.venue_ids_.size(), {});

  if (n > 0) {
    net.min_time_ = net.papers_.front().pub_time;
    net.max_time_ = net.papers_.front().pub_time;
  }
  for (const auto& r : net.papers_) {
    net.min_time_ = std::min(net.min_time_, r.pub_time);
    net.max_time_ = std::max(net.max_time_, r.pub_time);
  }

  std::vector<std::vector<std::pair<TimeStep, PaperIndex>>> incoming(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = net.papers_[i];
    const auto p = static_cast<PaperIndex>(i);
    std::vector<PaperIndex> refs;
    for (const auto& ref : r.references) {
      if (ref == r.paper_id) {
        ++stats.self_citations;
        continue;
      }
      auto it = net.index_.find(ref);
      if (it == net.index_.end()) {
        ++stats.dangling_references;
        continue;
      }
      refs.push_back(it->second);
    }
    std::sort(refs.begin(), refs.end());
    const auto before = refs.size();
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
    stats.duplicate_references += before - refs.size();
    r.references.clear();
    for (PaperIndex q : refs) {
      r.references.push_back(net.papers_[static_cast<std::size_t>(q)].paper_id);
      incoming[static_cast<std::size_t>(q)].emplace_back(r.pub_time, p);
    }
    net.cites_edges_ += refs.size();
    net.references_[i] = std::move(refs);

    std::vector<AuthorIndex> as;
    std::vector<std::string> kept_authors;
    for (const auto& a : r.author_ids) {
      const AuthorIndex ai = net.author_index_.at(a);
      if (std::find(as.begin(), as.end(), ai) != as.end()) continue;
      as.push_back(ai);
      kept_authors.push_back(a);
      net.author_papers_[static_cast<std::size_t>(ai)].push_back(p);
    }
    r.author_ids = std::move(kept_authors);
    net.writes_edges_ += as.size();
    net.paper_authors_[i] = std::move(as);
    if (r.venue_id) {
      const VenueIndex v = net.venue_index_.at(*r.venue_id);
      net.paper_venue_[i] = v;
      net.venue_papers_[static_cast<std::size_t>(v)].push_back(p);
      ++net.publishes_edges_;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& in = incoming[i];
    std::sort(in.begin(), in.end());
    for (const auto& [t, c] : in) {
      net.citers_[i].push_back(c);
      net.citer_times_[i].push_back(t);
    }
  }

  auto by_time = [&net](PaperIndex a, PaperIndex b) {
    const auto ta = net.pub_time(a), tb = net.pub_time(b);
    return ta != tb ? ta < tb : a < b;
  };
  for (auto& v : net.author_papers_) std::sort(v.begin(), v.end(), by_time);
  for (auto& v : net.venue_papers_) std::sort(v.begin(), v.end(), by_time);
  if (n > 0) {
    net.time_papers_.assign(static_cast<std::size_t>(net.max_time_ - net.min_time_ + 1), {});
    for (std::size_t i = 0; i < n; ++i) {
      net.time_papers_[static_cast<std::size_t>(net.papers_[i].pub_time - net.min_time_)].push_back(
          static_cast<PaperIndex>(i));
    }
  }
  net.stats_ = std::move(stats);
  return net;
}

namespace {

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw CorpusError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw CorpusError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> require_string_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw CorpusError(std::string("missing field '") + key + "'");
  if (!it->is_array()) throw CorpusError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : *it) {
    if (!e.is_string()) throw CorpusError(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

PaperRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw CorpusError("record must be a JSON object");
  PaperRecord r;
  r.paper_id = require_string(j, "paper_id");
  if (r.paper_id.empty()) throw CorpusError("empty paper_id");
  r.title = require_string(j, "title");
  r.abstract = require_string(j, "abstract");
  r.author_ids = require_string_list(j, "author_ids");
  if (auto it = j.find("venue_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("field 'venue_id' must be a string or null");
    r.venue_id = it->get<std::string>();
    if (r.venue_id->empty()) r.venue_id.reset();
  }
  auto pt = j.find("pub_time");
  if (pt == j.end()) throw CorpusError("missing field 'pub_time'");
  if (!pt->is_number_integer()) throw CorpusError("field 'pub_time' must be an integer");
  r.pub_time = pt->get<TimeStep>();
  r.references = require_string_list(j, "references");
  if (auto it = j.find("high_impact"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw CorpusError("field 'high_impact' must be a boolean");
    r.high_impact = it->get<bool>();
  }
  return r;
}

std::string format_record(const PaperRecord& r) {
  json j = json::object();
  j["paper_id"] = r.paper_id;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  j["author_ids"] = r.author_ids;
  j["venue_id"] = r.venue_id ? json(*r.venue_id) : json(nullptr);
  j["pub_time"] = r.pub_time;
  j["references"] = r.references;
  if (r.high_impact) j["high_impact"] = true;
  return j.dump();
}

void write_records(std::ostream& out, std::span<const PaperRecord> records) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<PaperRecord> read_records(std::istream& in, const IngestOptions& options, IngestStats& stats) {
  std::vector<PaperRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++stats.records_read;
    try {
      out.push_back(parse_record(line));
    } catch (const CorpusError& e) {
      if (options.strict) throw CorpusError(e.what(), lineno);
      ++stats.malformed;
      stats.errors.push_back({lineno, e.what()});
    }
  }
  return out;
}

GlobalCitationNetwork ingest_corpus(std::istream& in, const IngestOptions& options) {
  IngestStats stats;
  auto records = read_records(in, options, stats);
  return ingest_corpus(std::move(records), options, std::move(stats));
}

}  // namespace dppdcc::corpus
