#include "dppdcc/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dppdcc::features {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dimension, std::uint64_t salt)
    : dimension_(dimension), salt_(salt) {
  if (dimension == 0) throw EmbeddingError("embedding dimension must be positive");
}

Matrix HashingEmbeddingProvider::embed(std::span<const std::string> texts) const {
  Matrix out = Matrix::Zero(static_cast<ad::Index>(texts.size()), static_cast<ad::Index>(dimension_));
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      const std::uint64_t h = fnv1a(token, salt_);
      const auto bucket = static_cast<ad::Index>(h % dimension_);
      out(static_cast<ad::Index>(i), bucket) += (h >> 63) ? -1.0 : 1.0;
      token.clear();
    };
    for (unsigned char c : texts[i]) {
      if (std::isalnum(c)) {
        token.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
    }
    flush();
    const double n = out.row(static_cast<ad::Index>(i)).norm();
    if (n > 0.0) out.row(static_cast<ad::Index>(i)) /= n;
  }
  return out;
}

ExternalEmbeddingProvider::ExternalEmbeddingProvider(const std::filesystem::path& artifact) {
  std::ifstream in(artifact, std::ios::binary);
  if (!in) throw EmbeddingError("cannot read embedding artifact " + artifact.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("text") || !j.contains("vector")) {
      throw EmbeddingError(artifact.string() + ":" + std::to_string(lineno) + ": expected {text, vector}");
    }
    auto v = j.at("vector").get<std::vector<double>>();
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_ || v.empty()) {
      throw EmbeddingError(artifact.string() + ":" + std::to_string(lineno) + ": inconsistent vector length");
    }
    RowVector row = Eigen::Map<const RowVector>(v.data(), static_cast<ad::Index>(v.size()));
    vectors_.insert_or_assign(j.at("text").get<std::string>(), std::move(row));
  }
  if (dimension_ == 0) throw EmbeddingError("embedding artifact is empty: " + artifact.string());
}

Matrix ExternalEmbeddingProvider::embed(std::span<const std::string> texts) const {
  Matrix out(static_cast<ad::Index>(texts.size()), static_cast<ad::Index>(dimension_));
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto it = vectors_.find(texts[i]);
    if (it == vectors_.end()) {
      throw EmbeddingError("external encoder has no vector for text: " + texts[i].substr(0, 60));
    }
    out.row(static_cast<ad::Index>(i)) = it->second;
  }
  return out;
}

std::unique_ptr<TextEmbeddingProvider> make_provider(const std::string& kind, std::size_t dimension,
                                                     const std::filesystem::path& artifact) {
  if (kind == "hashing") return std::make_unique<HashingEmbeddingProvider>(dimension);
  if (kind == "external") {
    auto p = std::make_unique<ExternalEmbeddingProvider>(artifact);
    if (dimension != 0 && p->dimension() != dimension) {
      throw EmbeddingError("external artifact has dimension " + std::to_string(p->dimension()) + ", expected " +
                           std::to_string(dimension));
    }
    return p;
  }
  throw EmbeddingError("unknown embedding provider '" + kind + "'");
}

std::string paper_text(const corpus::PaperRecord& r) {
  if (r.abstract.empty()) return r.title;
  return r.title + ". " + r.abstract;
}

Matrix embed_papers(const TextEmbeddingProvider& provider, const GlobalCitationNetwork& net) {
  std::vector<std::string> texts;
  texts.reserve(net.paper_count());
  for (std::size_t i = 0; i < net.paper_count(); ++i) texts.push_back(paper_text(net.paper(static_cast<PaperIndex>(i))));
  Matrix out = provider.embed(texts);
  if (out.rows() != static_cast<ad::Index>(texts.size()) || out.cols() != static_cast<ad::Index>(provider.dimension())) {
    throw EmbeddingError("provider returned a matrix of the wrong shape");
  }
  if (!out.allFinite()) throw EmbeddingError("provider returned non-finite values");
  return out;
}

EmbeddingTable::Prefix EmbeddingTable::build(const GlobalCitationNetwork& net, std::span<const PaperIndex> papers,
                                             const Matrix& vectors) {
  Prefix p;
  p.sums.resize(static_cast<ad::Index>(papers.size()), vectors.cols());
  RowVector acc = RowVector::Zero(vectors.cols());
  for (std::size_t k = 0; k < papers.size(); ++k) {
    acc += vectors.row(papers[k]);
    p.sums.row(static_cast<ad::Index>(k)) = acc;
    p.times.push_back(net.pub_time(papers[k]));
  }
  return p;
}

EmbeddingTable::EmbeddingTable(const GlobalCitationNetwork& net, Matrix paper_vectors)
    : net_(&net), papers_(std::move(paper_vectors)) {
  if (papers_.rows() != static_cast<ad::Index>(net.paper_count())) {
    throw EmbeddingError("paper vector count does not match the network");
  }
  for (std::size_t a = 0; a < net.author_count(); ++a) {
    authors_.push_back(build(net, net.papers_of_author(static_cast<AuthorIndex>(a)), papers_));
  }
  for (std::size_t v = 0; v < net.venue_count(); ++v) {
    venues_.push_back(build(net, net.papers_of_venue(static_cast<VenueIndex>(v)), papers_));
  }
  if (net.paper_count() > 0) {
    for (TimeStep y = net.min_time(); y <= net.max_time(); ++y) times_.push_back(build(net, net.papers_at_time(y), papers_));
  }
}

RowVector EmbeddingTable::mean_upto(const Prefix& p, TimeStep t) const {
  const auto n = static_cast<ad::Index>(std::upper_bound(p.times.begin(), p.times.end(), t) - p.times.begin());
  if (n == 0) return RowVector::Zero(papers_.cols());
  return p.sums.row(n - 1) / static_cast<double>(n);
}

RowVector EmbeddingTable::author(AuthorIndex a, TimeStep t) const { return mean_upto(authors_.at(a), t); }
RowVector EmbeddingTable::venue(VenueIndex v, TimeStep t) const { return mean_upto(venues_.at(v), t); }

RowVector EmbeddingTable::time(TimeStep year, TimeStep t) const {
  if (times_.empty() || year < net_->min_time() || year > net_->max_time()) return RowVector::Zero(papers_.cols());
  return mean_upto(times_[static_cast<std::size_t>(year - net_->min_time())], t);
}

Matrix embed_metadata(const GlobalCitationNetwork& net, const Matrix& paper_vectors, MetadataKind kind, TimeStep t) {
  EmbeddingTable table(net, paper_vectors);
  Matrix out;
  switch (kind) {
    case MetadataKind::kAuthor:
      out.resize(static_cast<ad::Index>(net.author_count()), paper_vectors.cols());
      for (ad::Index a = 0; a < out.rows(); ++a) out.row(a) = table.author(static_cast<AuthorIndex>(a), t);
      break;
    case MetadataKind::kVenue:
      out.resize(static_cast<ad::Index>(net.venue_count()), paper_vectors.cols());
      for (ad::Index v = 0; v < out.rows(); ++v) out.row(v) = table.venue(static_cast<VenueIndex>(v), t);
      break;
    case MetadataKind::kTime: {
      const ad::Index years = net.paper_count() ? net.max_time() - net.min_time() + 1 : 0;
      out.resize(years, paper_vectors.cols());
      for (ad::Index y = 0; y < years; ++y) out.row(y) = table.time(net.min_time() + static_cast<TimeStep>(y), t);
      break;
    }
  }
  return out;
}

ad::Var init_snapshot_state(const ad::Var& time_vec, const ad::Var& target_vec, const ad::Var& w_time,
                            const ad::Var& w_target, GateMode mode) {
  if (time_vec.cols() != target_vec.cols() || w_time.rows() != time_vec.cols() ||
      w_target.rows() != target_vec.cols()) {
    throw std::invalid_argument("init_snapshot_state: dimension mismatch");
  }
  const ad::Index want_cols = mode == GateMode::kVector ? time_vec.cols() : 1;
  if (w_time.cols() != want_cols || w_target.cols() != want_cols) {
    throw std::invalid_argument("init_snapshot_state: gate weight has the wrong width");
  }
  ad::Var gate = ad::sigmoid(ad::add(ad::matmul(time_vec, w_time), ad::matmul(target_vec, w_target)));
  return ad::mul(time_vec, gate);
}

RowVector init_snapshot_state(const RowVector& time_vec, const RowVector& target_vec, const Matrix& w_time,
                              const Matrix& w_target, GateMode mode) {
  ad::Tape tape;
  auto out = init_snapshot_state(tape.constant(time_vec), tape.constant(target_vec), tape.constant(w_time),
                                 tape.constant(w_target), mode);
  return out.value().row(0);
}

void save_paper_vectors(const std::filesystem::path& dir, const GlobalCitationNetwork& net, const Matrix& vectors) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "paper_embeddings.tsv", std::ios::binary);
  if (!out) throw EmbeddingError("cannot write " + (dir / "paper_embeddings.tsv").string());
  out.precision(17);
  for (ad::Index i = 0; i < vectors.rows(); ++i) {
    out << net.paper(static_cast<PaperIndex>(i)).paper_id;
    for (ad::Index c = 0; c < vectors.cols(); ++c) out << '\t' << vectors(i, c);
    out << '\n';
  }
}

Matrix load_paper_vectors(const std::filesystem::path& dir, const GlobalCitationNetwork& net) {
  std::ifstream in(dir / "paper_embeddings.tsv", std::ios::binary);
  if (!in) throw EmbeddingError("cannot read " + (dir / "paper_embeddings.tsv").string());
  std::vector<std::vector<double>> rows(net.paper_count());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id;
    std::getline(fields, id, '\t');
    std::vector<double> v;
    double x;
    while (fields >> x) v.push_back(x);
    rows.at(static_cast<std::size_t>(net.index_of(id))) = std::move(v);
  }
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  Matrix out(static_cast<ad::Index>(rows.size()), static_cast<ad::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw EmbeddingError("embedding store is missing or has ragged rows");
    for (std::size_t c = 0; c < d; ++c) out(static_cast<ad::Index>(i), static_cast<ad::Index>(c)) = rows[i][c];
  }
  return out;
}

}  // namespace dppdcc::features
