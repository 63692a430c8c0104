#include "dppdcc/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace dppdcc::splits {

const char* category_name(Category c) {
  switch (c) {
    case Category::kPrevious: return "previous";
    case Category::kFresh: return "fresh";
    case Category::kImmediate: return "immediate";
  }
  return "?";
}

Category parse_category(const std::string& s) {
  if (s == "previous") return Category::kPrevious;
  if (s == "fresh") return Category::kFresh;
  if (s == "immediate") return Category::kImmediate;
  throw SplitError("unknown category '" + s + "'");
}

double label_increment(const GlobalCitationNetwork& net, PaperIndex target, TimeStep observation_point, int delta,
                       const LabelOptions& options) {
  if (delta < 0) throw SplitError("negative prediction interval");
  if (observation_point + delta > net.max_time()) {
    throw SplitError("label horizon " + std::to_string(observation_point + delta) + " is beyond corpus coverage " +
                     std::to_string(net.max_time()));
  }
  const auto before = net.citations_at(target, observation_point);
  const auto after = net.citations_at(target, observation_point + delta);
  const double v = std::log1p(static_cast<double>(after - before));
  return options.log_base > 0.0 ? v / std::log(options.log_base) : v;
}

bool eligible(const GlobalCitationNetwork& net, PaperIndex p, TimeStep t) {
  const auto& r = net.paper(p);
  if (r.pub_time > t) return false;
  if (r.title.empty() || r.abstract.empty() || r.author_ids.empty()) return false;
  if (!r.venue_id && !r.high_impact) return false;
  for (PaperIndex q : net.references(p)) {
    if (net.pub_time(q) <= t) return true;
  }
  return false;
}

namespace {

std::vector<PaperIndex> eligible_at(const GlobalCitationNetwork& net, TimeStep t) {
  std::vector<PaperIndex> out;
  for (std::size_t i = 0; i < net.paper_count(); ++i) {
    if (eligible(net, static_cast<PaperIndex>(i), t)) out.push_back(static_cast<PaperIndex>(i));
  }
  return out;
}

std::vector<PaperIndex> sample(std::vector<PaperIndex> pool, std::size_t limit, std::uint64_t seed) {
  if (limit == 0 || limit >= pool.size()) return pool;
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(limit);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<SampleSpec> label_all(const GlobalCitationNetwork& net, const std::vector<PaperIndex>& papers,
                                  TimeStep t, const SplitConfig& c) {
  std::vector<SampleSpec> out;
  out.reserve(papers.size());
  for (PaperIndex p : papers) {
    SampleSpec s;
    s.target = p;
    s.observation_point = t;
    s.label = label_increment(net, p, t, c.delta, c.label);
    s.accumulated_citations = net.citations_at(p, t);
    out.push_back(s);
  }
  return out;
}

}  // namespace

SplitSet make_splits(const GlobalCitationNetwork& net, const SplitConfig& config) {
  const TimeStep train_pt = config.train(), val_pt = config.val(), test_pt = config.test_point;
  if (!(train_pt < val_pt && val_pt < test_pt)) {
    throw SplitError("observation points must satisfy train < val < test (got " + std::to_string(train_pt) + ", " +
                     std::to_string(val_pt) + ", " + std::to_string(test_pt) + ")");
  }
  if (config.delta < 1) throw SplitError("prediction interval must be >= 1");
  if (test_pt + config.delta > net.max_time()) {
    throw SplitError("test labels need coverage through " + std::to_string(test_pt + config.delta) +
                     " but the corpus ends at " + std::to_string(net.max_time()));
  }

  SplitSet out;
  const auto train_papers = sample(eligible_at(net, train_pt), config.max_train, config.seed ^ 0x747261696eULL);
  const auto val_papers = sample(eligible_at(net, val_pt), config.max_val, config.seed ^ 0x76616cULL);
  const auto test_pool = eligible_at(net, test_pt);
  const auto test_papers = sample(test_pool, std::min(config.n_test, test_pool.size()), config.seed);

  out.train = label_all(net, train_papers, train_pt, config);
  out.val = label_all(net, val_papers, val_pt, config);
  out.test = label_all(net, test_papers, test_pt, config);

  std::unordered_set<PaperIndex> in_train(train_papers.begin(), train_papers.end());
  for (auto& s : out.test) {
    if (net.pub_time(s.target) == test_pt) {
      s.category = Category::kImmediate;
    } else if (in_train.count(s.target)) {
      s.category = Category::kPrevious;
    } else {
      s.category = Category::kFresh;
    }
  }
  return out;
}

void write_samples(const std::filesystem::path& file, const std::vector<SampleSpec>& samples,
                   const GlobalCitationNetwork& net) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw SplitError("cannot write " + file.string());
  out << "paper_id\tobservation_point\tlabel\tcategory\taccumulated_citations\n";
  out.precision(17);
  for (const auto& s : samples) {
    out << net.paper(s.target).paper_id << '\t' << s.observation_point << '\t' << s.label << '\t'
        << category_name(s.category) << '\t' << s.accumulated_citations << '\n';
  }
}

std::vector<SampleSpec> read_samples(const std::filesystem::path& file, const GlobalCitationNetwork& net) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw SplitError("cannot read " + file.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<SampleSpec> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, category;
    SampleSpec s;
    if (!std::getline(fields, id, '\t') || !(fields >> s.observation_point >> s.label >> category >>
                                             s.accumulated_citations)) {
      throw SplitError(file.string() + ":" + std::to_string(lineno) + ": malformed sample row");
    }
    s.target = net.index_of(id);
    s.category = parse_category(category);
    out.push_back(s);
  }
  return out;
}

void save_splits(const SplitSet& s, const GlobalCitationNetwork& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_samples(dir / "train.tsv", s.train, net);
  write_samples(dir / "val.tsv", s.val, net);
  write_samples(dir / "test.tsv", s.test, net);
}

SplitSet load_splits(const std::filesystem::path& dir, const GlobalCitationNetwork& net) {
  return SplitSet{read_samples(dir / "train.tsv", net), read_samples(dir / "val.tsv", net),
                  read_samples(dir / "test.tsv", net)};
}

}  // namespace dppdcc::splits
