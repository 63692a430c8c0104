#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dppdcc::corpus {

using PaperIndex = std::int32_t;
using AuthorIndex = std::int32_t;
using VenueIndex = std::int32_t;
using TimeStep = int;

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string abstract;
  std::vector<std::string> author_ids;
  std::optional<std::string> venue_id;
  TimeStep pub_time = 0;
  std::vector<std::string> references;
  bool high_impact = false;

  bool operator==(const PaperRecord&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct IngestOptions {
  // Abort on the first malformed record instead of skipping it.
  bool strict = false;
};

struct IngestStats {
  std::size_t records_read = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t excluded_missing_venue = 0;
  std::size_t dangling_references = 0;
  std::size_t self_citations = 0;
  std::size_t duplicate_references = 0;
  std::vector<RecordError> errors;

  bool operator==(const IngestStats& o) const {
    return records_read == o.records_read && accepted == o.accepted && malformed == o.malformed &&
           excluded_missing_venue == o.excluded_missing_venue &&
           dangling_references == o.dangling_references && self_citations == o.self_citations &&
           duplicate_references == o.duplicate_references;
  }
};

// Immutable time-stamped citation network with author/venue/time metadata.
// Papers are indexed in ascending paper_id order, so the network does not
// depend on the order records were supplied in.
class GlobalCitationNetwork {
 public:
  std::size_t paper_count() const { return papers_.size(); }
  std::size_t author_count() const { return author_ids_.size(); }
  std::size_t venue_count() const { return venue_ids_.size(); }

  const PaperRecord& paper(PaperIndex p) const { return papers_.at(static_cast<std::size_t>(p)); }
  std::optional<PaperIndex> find(std::string_view paper_id) const;
  // Throws CorpusError for an unknown id.
  PaperIndex index_of(std::string_view paper_id) const;

  TimeStep pub_time(PaperIndex p) const { return papers_[static_cast<std::size_t>(p)].pub_time; }
  // Cited papers, ascending index.
  std::span<const PaperIndex> references(PaperIndex p) const { return references_[p]; }
  // Citing papers ordered by (citing time, index); times aligned.
  std::span<const PaperIndex> citers(PaperIndex p) const { return citers_[p]; }
  std::span<const TimeStep> citer_times(PaperIndex p) const { return citer_times_[p]; }
  std::span<const AuthorIndex> authors_of(PaperIndex p) const { return paper_authors_[p]; }
  std::optional<VenueIndex> venue_of(PaperIndex p) const;

  // Papers attached to a metadata node, ordered by (pub_time, index).
  std::span<const PaperIndex> papers_of_author(AuthorIndex a) const { return author_papers_[a]; }
  std::span<const PaperIndex> papers_of_venue(VenueIndex v) const { return venue_papers_[v]; }
  std::span<const PaperIndex> papers_at_time(TimeStep y) const;

  const std::string& author_id(AuthorIndex a) const { return author_ids_.at(static_cast<std::size_t>(a)); }
  const std::string& venue_id(VenueIndex v) const { return venue_ids_.at(static_cast<std::size_t>(v)); }
  std::optional<AuthorIndex> find_author(std::string_view id) const;
  std::optional<VenueIndex> find_venue(std::string_view id) const;

  // Number of cites edges into p whose time tag is <= t.
  std::size_t citations_at(PaperIndex p, TimeStep t) const;
  std::size_t citations_at(std::string_view paper_id, TimeStep t) const;

  std::size_t cites_edge_count() const { return cites_edges_; }
  std::size_t writes_edge_count() const { return writes_edges_; }
  std::size_t publishes_edge_count() const { return publishes_edges_; }
  std::size_t have_edge_count() const { return papers_.size(); }

  TimeStep min_time() const { return min_time_; }
  // Latest pub_time in the corpus; the horizon of observable events.
  TimeStep max_time() const { return max_time_; }
  std::vector<TimeStep> time_steps() const;

  const IngestStats& stats() const { return stats_; }

 private:
  friend GlobalCitationNetwork ingest_corpus(std::vector<PaperRecord> records, const IngestOptions& options,
                                             IngestStats stats);
  friend GlobalCitationNetwork load_network(const std::filesystem::path& dir);

  std::vector<PaperRecord> papers_;
  std::unordered_map<std::string, PaperIndex> index_;
  std::vector<std::vector<PaperIndex>> references_;
  std::vector<std::vector<PaperIndex>> citers_;
  std::vector<std::vector<TimeStep>> citer_times_;
  std::vector<std::vector<AuthorIndex>> paper_authors_;
  std::vector<VenueIndex> paper_venue_;  // -1 when absent
  std::vector<std::string> author_ids_;
  std::vector<std::string> venue_ids_;
  std::unordered_map<std::string, AuthorIndex> author_index_;
  std::unordered_map<std::string, VenueIndex> venue_index_;
  std::vector<std::vector<PaperIndex>> author_papers_;
  std::vector<std::vector<PaperIndex>> venue_papers_;
  std::vector<std::vector<PaperIndex>> time_papers_;  // offset by min_time_
  std::size_t cites_edges_ = 0;
  std::size_t writes_edges_ = 0;
  std::size_t publishes_edges_ = 0;
  TimeStep min_time_ = 0;
  TimeStep max_time_ = 0;
  IngestStats stats_;
};

// Builds the network from already-parsed records. Duplicate ids abort with
// CorpusError. References to ids outside the corpus and self-citations are
// dropped and counted. Papers without a venue are kept only when flagged
// high_impact. `stats` carries parse-stage counters forward.
GlobalCitationNetwork ingest_corpus(std::vector<PaperRecord> records, const IngestOptions& options = {},
                                    IngestStats stats = {});

// Parses line-delimited JSON records (one per line, blank lines ignored).
// Malformed lines are skipped and logged into `stats` unless options.strict.
std::vector<PaperRecord> read_records(std::istream& in, const IngestOptions& options, IngestStats& stats);
GlobalCitationNetwork ingest_corpus(std::istream& in, const IngestOptions& options = {});

PaperRecord parse_record(std::string_view line);
std::string format_record(const PaperRecord& r);
void write_records(std::ostream& out, std::span<const PaperRecord> records);

// Network store: a directory of node and edge tables.
//   manifest.json  format/version, counts, ingest statistics
//   papers.jsonl   one paper node per line (no references)
//   authors.tsv    author_id
//   venues.tsv     venue_id
//   cites.tsv      citing_id <TAB> cited_id <TAB> time
//   writes.tsv     author_id <TAB> paper_id
//   publishes.tsv  venue_id <TAB> paper_id
//   have.tsv       time <TAB> paper_id
void save_network(const GlobalCitationNetwork& net, const std::filesystem::path& dir);
GlobalCitationNetwork load_network(const std::filesystem::path& dir);

// ---- synthetic corpora ----

struct SynthParams {
  TimeStep start_year = 2000;
  int n_years = 16;
  // Yearly growth in output volume; 0 spreads papers evenly.
  double yearly_growth = 0.05;
  double mean_references = 6.0;
  // Probability that a reference target is drawn uniformly instead of by
  // preferential attachment.
  double uniform_mix = 0.2;
  double attachment_offset = 1.0;
  // Log-normal spread of latent paper fitness; 0 disables fitness.
  double fitness_sigma = 0.8;
  // Half-life of attractiveness in years; <= 0 disables aging.
  double aging_half_life = 4.0;
  std::size_t author_pool = 0;  // 0 -> n_papers / 2
  std::size_t venue_pool = 24;
  double zipf_exponent = 1.1;
  int max_authors = 4;
  std::size_t vocabulary = 600;
  int title_words = 8;
  int abstract_words = 40;
  // Share of words drawn from the fitness-tier vocabulary.
  double quality_word_share = 0.25;
  // Share of top-decile-fitness papers emitted without a venue. They are
  // flagged high_impact so ingestion admits them.
  double missing_venue_rate = 0.0;
};

struct SynthCounts {
  std::size_t papers = 0;
  std::size_t cites = 0;
  std::size_t writes = 0;
  std::size_t publishes = 0;
  std::size_t have = 0;
  std::size_t authors = 0;
  std::size_t venues = 0;
};

struct SynthCorpus {
  std::vector<PaperRecord> records;  // in pub_time order
  SynthCounts counts;
  std::vector<double> fitness;
};

SynthCorpus synth_corpus(std::size_t n_papers, std::uint64_t seed, const SynthParams& params = {});

}  // namespace dppdcc::corpus
