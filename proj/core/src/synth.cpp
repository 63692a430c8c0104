#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dppdcc/corpus.hpp"

namespace dppdcc::corpus {

namespace {

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cdf_[k] = acc;
    }
  }
  std::size_t operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, cdf_.back());
    const double x = u(rng);
    return std::min<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), x) - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::vector<std::size_t> papers_per_year(std::size_t n, int years, double growth) {
  years = std::max(1, std::min<int>(years, static_cast<int>(n)));
  std::vector<double> w(static_cast<std::size_t>(years));
  double total = 0.0;
  for (int y = 0; y < years; ++y) total += (w[y] = std::pow(1.0 + growth, y));
  std::vector<std::size_t> counts(w.size());
  std::vector<std::pair<double, int>> rem;
  std::size_t assigned = 0;
  for (int y = 0; y < years; ++y) {
    const double exact = static_cast<double>(n) * w[y] / total;
    counts[y] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[y];
    rem.emplace_back(-(exact - std::floor(exact)), y);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[rem[k % rem.size()].second];
  return counts;
}

std::string padded(char prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace

SynthCorpus synth_corpus(std::size_t n_papers, std::uint64_t seed, const SynthParams& params) {
  SynthCorpus out;
  if (n_papers == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t author_pool = params.author_pool ? params.author_pool : std::max<std::size_t>(1, n_papers / 2);
  const std::size_t venue_pool = std::max<std::size_t>(1, params.venue_pool);
  const ZipfSampler author_draw(author_pool, params.zipf_exponent);
  const ZipfSampler venue_draw(venue_pool, params.zipf_exponent);
  const std::size_t id_width = std::to_string(n_papers - 1).size();
  const std::size_t vocab = std::max<std::size_t>(1, params.vocabulary);
  constexpr int kTiers = 4;
  constexpr int kTierWords = 24;

  const auto per_year = papers_per_year(n_papers, params.n_years, params.yearly_growth);
  std::vector<double> indegree;
  std::vector<int> pub_time;
  std::set<std::size_t> authors_used, venues_used;
  out.records.reserve(n_papers);

  auto word = [&](int tier) -> std::string {
    if (unit(rng) < params.quality_word_share) {
      return "q" + std::to_string(tier) + "x" + std::to_string(static_cast<int>(unit(rng) * kTierWords));
    }
    return "w" + std::to_string(static_cast<std::size_t>(unit(rng) * static_cast<double>(vocab)));
  };

  std::size_t next = 0;
  for (std::size_t y = 0; y < per_year.size(); ++y) {
    const TimeStep year = params.start_year + static_cast<TimeStep>(y);
    const std::size_t available = next;  // papers from earlier years
    std::vector<double> cumulative(available);
    double acc = 0.0;
    for (std::size_t q = 0; q < available; ++q) {
      double w = (indegree[q] + params.attachment_offset) * out.fitness[q];
      if (params.aging_half_life > 0.0) {
        const double age = static_cast<double>(year - pub_time[q]);
        w *= std::pow(0.5, (age - 1.0) / params.aging_half_life);
      }
      acc += w;
      cumulative[q] = acc;
    }
    std::vector<double> new_citations(available, 0.0);

    for (std::size_t k = 0; k < per_year[y]; ++k, ++next) {
      PaperRecord r;
      r.paper_id = padded('P', next, id_width);
      r.pub_time = year;

      const std::size_t venue_rank = venue_draw(rng);
      const double venue_bias = venue_pool > 1 ? 0.5 - static_cast<double>(venue_rank) / (venue_pool - 1) : 0.0;
      const double log_fitness = params.fitness_sigma > 0.0 ? params.fitness_sigma * (normal(rng) + venue_bias) : 0.0;
      const double fitness = std::exp(log_fitness);
      const double z = params.fitness_sigma > 0.0 ? log_fitness / params.fitness_sigma : 0.0;
      const int tier = z < -0.6 ? 0 : (z < 0.0 ? 1 : (z < 0.9 ? 2 : 3));

      if (tier == kTiers - 1 && params.missing_venue_rate > 0.0 && unit(rng) < params.missing_venue_rate) {
        r.high_impact = true;
      } else {
        r.venue_id = padded('V', venue_rank, std::to_string(venue_pool - 1).size());
        venues_used.insert(venue_rank);
        ++out.counts.publishes;
      }

      const int n_authors = 1 + static_cast<int>(unit(rng) * std::max(1, params.max_authors));
      std::vector<std::size_t> picked;
      for (int a = 0; a < n_authors; ++a) {
        const std::size_t who = author_draw(rng);
        if (std::find(picked.begin(), picked.end(), who) != picked.end()) continue;
        picked.push_back(who);
        r.author_ids.push_back(padded('A', who, std::to_string(author_pool - 1).size()));
        authors_used.insert(who);
      }
      out.counts.writes += picked.size();

      for (int w = 0; w < params.title_words; ++w) r.title += (w ? " " : "") + word(tier);
      for (int w = 0; w < params.abstract_words; ++w) r.abstract += (w ? " " : "") + word(tier);

      if (available > 0) {
        std::poisson_distribution<int> extra(std::max(0.0, params.mean_references - 1.0));
        const std::size_t want = std::min<std::size_t>(available, 1 + static_cast<std::size_t>(extra(rng)));
        std::vector<std::size_t> refs;
        for (std::size_t attempt = 0; refs.size() < want && attempt < 20 * want; ++attempt) {
          std::size_t q;
          if (unit(rng) < params.uniform_mix || acc <= 0.0) {
            q = std::min(available - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(available)));
          } else {
            const double x = unit(rng) * acc;
            q = std::min<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin(),
                                      available - 1);
          }
          if (std::find(refs.begin(), refs.end(), q) != refs.end()) continue;
          refs.push_back(q);
        }
        std::sort(refs.begin(), refs.end());
        for (std::size_t q : refs) {
          r.references.push_back(out.records[q].paper_id);
          new_citations[q] += 1.0;
        }
        out.counts.cites += refs.size();
      }

      out.fitness.push_back(fitness);
      pub_time.push_back(year);
      out.records.push_back(std::move(r));
    }
    indegree.resize(next, 0.0);
    for (std::size_t q = 0; q < available; ++q) indegree[q] += new_citations[q];
  }

  out.counts.papers = out.records.size();
  out.counts.have = out.records.size();
  out.counts.authors = authors_used.size();
  out.counts.venues = venues_used.size();
  return out;
}

}  // namespace dppdcc::corpus
