#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dppdcc/autograd.hpp"
#include "dppdcc/corpus.hpp"

namespace dppdcc::features {

using ad::Matrix;
using ad::RowVector;
using corpus::AuthorIndex;
using corpus::GlobalCitationNetwork;
using corpus::PaperIndex;
using corpus::TimeStep;
using corpus::VenueIndex;

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TextEmbeddingProvider {
 public:
  virtual ~TextEmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual bool deterministic() const = 0;
  // One row per text. Throws EmbeddingError when any text cannot be embedded.
  virtual Matrix embed(std::span<const std::string> texts) const = 0;
};

// Signed feature hashing over lower-cased alphanumeric tokens, L2-normalized.
class HashingEmbeddingProvider final : public TextEmbeddingProvider {
 public:
  explicit HashingEmbeddingProvider(std::size_t dimension, std::uint64_t salt = 0);
  std::size_t dimension() const override { return dimension_; }
  bool deterministic() const override { return true; }
  Matrix embed(std::span<const std::string> texts) const override;

 private:
  std::size_t dimension_;
  std::uint64_t salt_;
};

// Serves vectors produced by an external sentence encoder. The artifact is
// JSON lines of {"text": ..., "vector": [...]}; lookups are by exact text.
class ExternalEmbeddingProvider final : public TextEmbeddingProvider {
 public:
  explicit ExternalEmbeddingProvider(const std::filesystem::path& artifact);
  std::size_t dimension() const override { return dimension_; }
  bool deterministic() const override { return true; }
  Matrix embed(std::span<const std::string> texts) const override;
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, RowVector> vectors_;
};

std::unique_ptr<TextEmbeddingProvider> make_provider(const std::string& kind, std::size_t dimension,
                                                     const std::filesystem::path& artifact = {});

// "title. abstract", or the title alone for an empty abstract.
std::string paper_text(const corpus::PaperRecord& r);

// Paper vectors in paper-index order.
Matrix embed_papers(const TextEmbeddingProvider& provider, const GlobalCitationNetwork& net);

// Initial node features. Paper rows are time-invariant; an author, venue or
// time node at time t is the mean of its papers published at or before t
// (zero when it has none yet).
class EmbeddingTable {
 public:
  EmbeddingTable(const GlobalCitationNetwork& net, Matrix paper_vectors);

  std::size_t dimension() const { return static_cast<std::size_t>(papers_.cols()); }
  const Matrix& paper_vectors() const { return papers_; }
  RowVector paper(PaperIndex p) const { return papers_.row(p); }
  RowVector author(AuthorIndex a, TimeStep t) const;
  RowVector venue(VenueIndex v, TimeStep t) const;
  RowVector time(TimeStep year, TimeStep t) const;

 private:
  struct Prefix {
    std::vector<TimeStep> times;  // ascending
    Matrix sums;                  // row k = sum of the first k+1 papers
  };
  static Prefix build(const GlobalCitationNetwork& net, std::span<const PaperIndex> papers, const Matrix& vectors);
  RowVector mean_upto(const Prefix& p, TimeStep t) const;

  const GlobalCitationNetwork* net_;
  Matrix papers_;
  std::vector<Prefix> authors_;
  std::vector<Prefix> venues_;
  std::vector<Prefix> times_;
};

enum class MetadataKind { kAuthor, kVenue, kTime };
// Every node of one metadata type at time t, in index order (years ascending
// from net.min_time() for kTime).
Matrix embed_metadata(const GlobalCitationNetwork& net, const Matrix& paper_vectors, MetadataKind kind, TimeStep t);

enum class GateMode { kVector, kScalar };

// a = sigmoid(time W_ipt + target W_tgt); returns a * time elementwise. With
// kScalar the weights are Nx1 and a is broadcast.
ad::Var init_snapshot_state(const ad::Var& time_vec, const ad::Var& target_vec, const ad::Var& w_time,
                            const ad::Var& w_target, GateMode mode = GateMode::kVector);
RowVector init_snapshot_state(const RowVector& time_vec, const RowVector& target_vec, const Matrix& w_time,
                              const Matrix& w_target, GateMode mode = GateMode::kVector);

// Embedding store: paper_embeddings.tsv with paper_id then the vector.
void save_paper_vectors(const std::filesystem::path& dir, const GlobalCitationNetwork& net, const Matrix& vectors);
Matrix load_paper_vectors(const std::filesystem::path& dir, const GlobalCitationNetwork& net);

}  // namespace dppdcc::features
