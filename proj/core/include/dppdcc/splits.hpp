#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dppdcc/corpus.hpp"

namespace dppdcc::splits {

using corpus::GlobalCitationNetwork;
using corpus::PaperIndex;
using corpus::TimeStep;

enum class Category : std::uint8_t { kPrevious, kFresh, kImmediate };
inline constexpr std::size_t kCategoryCount = 3;
const char* category_name(Category c);
Category parse_category(const std::string& s);

struct SampleSpec {
  PaperIndex target = -1;
  TimeStep observation_point = 0;
  double label = 0.0;  // log(1 + citation increment)
  Category category = Category::kPrevious;
  std::size_t accumulated_citations = 0;  // at the observation point
  bool operator==(const SampleSpec&) const = default;
};

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabelOptions {
  // Logarithm base; e by default.
  double log_base = 0.0;
};

double label_increment(const GlobalCitationNetwork& net, PaperIndex target, TimeStep observation_point, int delta,
                       const LabelOptions& options = {});

// Complete metadata and >= 1 reference, published no later than t.
bool eligible(const GlobalCitationNetwork& net, PaperIndex p, TimeStep t);

struct SplitConfig {
  TimeStep test_point = 0;
  // Default to test_point - 5 and test_point - 3.
  std::optional<TimeStep> train_point;
  std::optional<TimeStep> val_point;
  int delta = 5;
  std::size_t n_test = 300000;
  std::uint64_t seed = 0;
  // 0 keeps every eligible paper.
  std::size_t max_train = 0;
  std::size_t max_val = 0;
  LabelOptions label;

  TimeStep train() const { return train_point.value_or(test_point - 5); }
  TimeStep val() const { return val_point.value_or(test_point - 3); }
};

struct SplitSet {
  std::vector<SampleSpec> train;
  std::vector<SampleSpec> val;
  std::vector<SampleSpec> test;
};

SplitSet make_splits(const GlobalCitationNetwork& net, const SplitConfig& config);

// Sample files: TSV with header
//   paper_id  observation_point  label  category  accumulated_citations
void write_samples(const std::filesystem::path& file, const std::vector<SampleSpec>& samples,
                   const GlobalCitationNetwork& net);
std::vector<SampleSpec> read_samples(const std::filesystem::path& file, const GlobalCitationNetwork& net);
void save_splits(const SplitSet& s, const GlobalCitationNetwork& net, const std::filesystem::path& dir);
SplitSet load_splits(const std::filesystem::path& dir, const GlobalCitationNetwork& net);

}  // namespace dppdcc::splits
