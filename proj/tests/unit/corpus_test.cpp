#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dppdcc/corpus.hpp"
#include "fixtures.hpp"

using namespace dppdcc;
using dppdcc::fixtures::network;
using dppdcc::fixtures::paper;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dppdcc_corpus_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Ingest, ChainOfThree) {
  auto net = network({paper("A", 2001, {"B"}), paper("B", 2000, {"C"}), paper("C", 1999)});
  EXPECT_EQ(net.paper_count(), 3u);
  EXPECT_EQ(net.cites_edge_count(), 2u);
  const auto a = net.index_of("A"), b = net.index_of("B"), c = net.index_of("C");
  ASSERT_EQ(net.references(a).size(), 1u);
  EXPECT_EQ(net.references(a)[0], b);
  ASSERT_EQ(net.citers(c).size(), 1u);
  EXPECT_EQ(net.citers(c)[0], b);
  EXPECT_EQ(net.citer_times(c)[0], 2000);
}

TEST(Ingest, DanglingReferenceDropped) {
  auto net = network({paper("A", 2001, {"B", "nowhere"}), paper("B", 2000)});
  EXPECT_EQ(net.cites_edge_count(), 1u);
  EXPECT_EQ(net.stats().dangling_references, 1u);
}

TEST(Ingest, SelfCitationAndDuplicateRefsDropped) {
  auto net = network({paper("A", 2001, {"A", "B", "B"}), paper("B", 2000)});
  EXPECT_EQ(net.cites_edge_count(), 1u);
  EXPECT_EQ(net.stats().self_citations, 1u);
  EXPECT_EQ(net.stats().duplicate_references, 1u);
}

TEST(Ingest, DuplicateIdAborts) {
  EXPECT_THROW(network({paper("A", 2001), paper("A", 2002)}), corpus::CorpusError);
}

TEST(Ingest, MissingVenueNeedsImpactFlag) {
  auto plain = paper("A", 2001, {}, {}, "");
  auto flagged = paper("B", 2001, {}, {}, "");
  flagged.high_impact = true;
  auto net = network({plain, flagged, paper("C", 2002, {"A", "B"})});
  EXPECT_FALSE(net.find("A").has_value());
  EXPECT_TRUE(net.find("B").has_value());
  EXPECT_EQ(net.stats().excluded_missing_venue, 1u);
  EXPECT_EQ(net.cites_edge_count(), 1u);
}

TEST(Ingest, LenientSkipsMalformedLineStrictAborts) {
  const std::string text = format_record(paper("A", 2000)) + "\n{not json\n" + format_record(paper("B", 2001, {"A"})) +
                           "\n";
  std::istringstream lenient(text);
  auto net = corpus::ingest_corpus(lenient);
  EXPECT_EQ(net.paper_count(), 2u);
  EXPECT_EQ(net.stats().malformed, 1u);
  ASSERT_EQ(net.stats().errors.size(), 1u);
  EXPECT_EQ(net.stats().errors[0].line, 2u);

  std::istringstream strict(text);
  corpus::IngestOptions opts;
  opts.strict = true;
  try {
    corpus::ingest_corpus(strict, opts);
    FAIL() << "strict ingestion accepted a malformed line";
  } catch (const corpus::CorpusError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Ingest, RecordFormatRoundTrip) {
  auto r = paper("X", 2003, {"Y", "Z"}, {"a", "b"}, "V9");
  r.high_impact = true;
  EXPECT_EQ(corpus::parse_record(corpus::format_record(r)), r);
}

TEST(CitationsAt, Examples) {
  auto net = network({paper("P", 1), paper("x", 3, {"P"}), paper("y", 5, {"P"}), paper("z", 5, {"P"})});
  const auto p = net.index_of("P");
  EXPECT_EQ(net.citations_at(p, 4), 1u);
  EXPECT_EQ(net.citations_at(p, net.max_time()), 3u);
  EXPECT_EQ(net.citations_at(net.index_of("x"), 5), 0u);
  EXPECT_THROW(net.citations_at("nope", 3), corpus::CorpusError);
}

TEST(Synth, SinglePaper) {
  auto s = corpus::synth_corpus(1, 3);
  ASSERT_EQ(s.records.size(), 1u);
  EXPECT_TRUE(s.records[0].references.empty());
}

TEST(Synth, SameSeedSameStream) {
  auto a = corpus::synth_corpus(300, 11), b = corpus::synth_corpus(300, 11);
  std::ostringstream sa, sb;
  corpus::write_records(sa, a.records);
  corpus::write_records(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
  auto c = corpus::synth_corpus(300, 12);
  std::ostringstream sc;
  corpus::write_records(sc, c.records);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synth, CountsMatchBookkeeping) {
  auto s = corpus::synth_corpus(1000, 7);
  auto net = network(s.records);
  EXPECT_EQ(net.paper_count(), s.counts.papers);
  EXPECT_EQ(net.cites_edge_count(), s.counts.cites);
  EXPECT_EQ(net.writes_edge_count(), s.counts.writes);
  EXPECT_EQ(net.publishes_edge_count(), s.counts.publishes);
  EXPECT_EQ(net.have_edge_count(), s.counts.have);
  EXPECT_EQ(net.author_count(), s.counts.authors);
  EXPECT_EQ(net.venue_count(), s.counts.venues);
  EXPECT_EQ(net.stats().dangling_references, 0u);
}

TEST(Synth, HeavyTailedInDegree) {
  auto net = network(corpus::synth_corpus(1000, 7).records);
  std::vector<std::size_t> deg;
  for (std::size_t p = 0; p < net.paper_count(); ++p) deg.push_back(net.citers(static_cast<corpus::PaperIndex>(p)).size());
  std::sort(deg.begin(), deg.end());
  const std::size_t median = deg[deg.size() / 2];
  EXPECT_GT(deg.back(), 0u);
  EXPECT_GE(deg.back(), 10 * median);
}

TEST(NetworkProperties, OrderIndependentIngestion) {
  auto records = corpus::synth_corpus(400, 5).records;
  auto a = network(records);
  std::mt19937_64 rng(99);
  std::shuffle(records.begin(), records.end(), rng);
  auto b = network(records);
  auto da = scratch("order_a"), db = scratch("order_b");
  corpus::save_network(a, da);
  corpus::save_network(b, db);
  for (const char* f : {"papers.jsonl", "authors.tsv", "venues.tsv", "cites.tsv", "writes.tsv", "publishes.tsv",
                        "have.tsv", "manifest.json"}) {
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
}

TEST(NetworkProperties, MonotoneCitationsAndEdgeTotal) {
  auto net = network(corpus::synth_corpus(500, 21).records);
  std::size_t total = 0;
  for (std::size_t i = 0; i < net.paper_count(); ++i) {
    const auto p = static_cast<corpus::PaperIndex>(i);
    std::size_t prev = 0;
    for (auto t = net.min_time() - 1; t <= net.max_time() + 1; ++t) {
      const auto c = net.citations_at(p, t);
      ASSERT_GE(c, prev);
      prev = c;
    }
    total += prev;
    // cites edges carry the citing paper's time
    auto citers = net.citers(p);
    auto times = net.citer_times(p);
    for (std::size_t k = 0; k < citers.size(); ++k) ASSERT_EQ(times[k], net.pub_time(citers[k]));
    for (auto q : net.references(p)) ASSERT_NE(q, p);
  }
  EXPECT_EQ(total, net.cites_edge_count());
}

TEST(NetworkStore, StoreLoadStoreIsStable) {
  auto net = network(corpus::synth_corpus(300, 4).records);
  auto d1 = scratch("store1"), d2 = scratch("store2");
  corpus::save_network(net, d1);
  auto back = corpus::load_network(d1);
  corpus::save_network(back, d2);
  for (const auto& entry : std::filesystem::directory_iterator(d1)) {
    EXPECT_EQ(slurp(entry.path()), slurp(d2 / entry.path().filename())) << entry.path().filename();
  }
  EXPECT_EQ(back.paper_count(), net.paper_count());
  EXPECT_EQ(back.cites_edge_count(), net.cites_edge_count());
  EXPECT_TRUE(back.stats() == net.stats());
}
