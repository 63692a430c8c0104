#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dppdcc/corpus.hpp"

namespace dppdcc::graph {

using corpus::AuthorIndex;
using corpus::GlobalCitationNetwork;
using corpus::PaperIndex;
using corpus::TimeStep;
using corpus::VenueIndex;

enum class NodeType : std::uint8_t { kPaper, kAuthor, kVenue, kTime };
inline constexpr std::size_t kNodeTypeCount = 4;

// Every relation appears together with its reverse.
enum class Relation : std::uint8_t {
  kCites,        // citing paper -> cited paper
  kCitedBy,      // cited paper -> citing paper
  kWrites,       // author -> paper
  kWrittenBy,    // paper -> author
  kPublishes,    // venue -> paper
  kPublishedIn,  // paper -> venue
  kHave,         // time -> paper
  kHadBy,        // paper -> time
};
inline constexpr std::size_t kRelationCount = 8;

struct RelationInfo {
  Relation relation;
  NodeType src;
  NodeType dst;
  Relation reverse;
  const char* name;
};

const RelationInfo& relation_info(Relation r);
const std::array<RelationInfo, kRelationCount>& relations();
const char* node_type_name(NodeType t);

enum class PaperRole : std::uint8_t { kTarget, kReference, kCitation };
inline constexpr std::size_t kPaperRoleCount = 3;
const char* role_name(PaperRole r);

struct EdgeList {
  std::vector<std::int32_t> src;
  std::vector<std::int32_t> dst;
  std::size_t size() const { return src.size(); }
  bool operator==(const EdgeList&) const = default;
};

// One heterogeneous subgraph around a target paper, frozen at time_step.
// Node ids are local indices into the per-type vectors below. The target is
// always local paper 0 unless the snapshot is a placeholder.
struct HeteroSnapshot {
  TimeStep time_step = 0;
  PaperIndex target = -1;
  bool placeholder = false;

  std::vector<PaperIndex> papers;
  std::vector<AuthorIndex> authors;
  std::vector<VenueIndex> venues;
  std::vector<TimeStep> times;  // ascending; always contains time_step

  std::vector<PaperRole> roles;  // per local paper
  std::vector<int> hops;         // per local paper, 0 for the target

  std::array<EdgeList, kRelationCount> edges;
  // Aligned with edges[kCites] / edges[kCitedBy].
  std::vector<double> cites_raw, cites_strength;
  std::vector<double> cited_by_raw, cited_by_strength;

  const EdgeList& relation(Relation r) const { return edges[static_cast<std::size_t>(r)]; }
  EdgeList& relation(Relation r) { return edges[static_cast<std::size_t>(r)]; }
  std::size_t node_count(NodeType t) const;
  std::int32_t time_node() const;  // local index of time_step
  bool operator==(const HeteroSnapshot&) const = default;
};

struct DynamicHeteroGraph {
  PaperIndex target = -1;
  TimeStep observation_point = 0;
  std::vector<HeteroSnapshot> snapshots;
  bool operator==(const DynamicHeteroGraph&) const = default;
};

class GraphError : public std::runtime_error {
 public:
  enum class Code { kUnknownTarget, kNotYetPublished, kInvalidArgument };
  GraphError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct SamplingOptions {
  int hops = 2;                    // k
  std::vector<int> limits{100, 20};  // K_i, one per hop
  // Apply K_i to cited and citing neighbours separately; otherwise jointly.
  bool limit_per_direction = true;
  // Expand hop >= 2 in both directions from every frontier paper; otherwise
  // continue only in the direction that reached it.
  bool expand_both_directions = true;
};

HeteroSnapshot build_snapshot(const GlobalCitationNetwork& net, PaperIndex target, TimeStep t,
                              const SamplingOptions& options = {});

// Raw co-reference (for kCites) or co-citation (for kCitedBy) counts at time
// t in the global network for every edge, normalized per destination so each
// destination's in-edges sum to 1. All-zero groups become uniform.
struct Strengths {
  std::vector<double> raw;
  std::vector<double> normalized;
};
Strengths cocitation_strengths(const GlobalCitationNetwork& net, std::span<const PaperIndex> papers,
                               const EdgeList& edges, Relation relation, TimeStep t);
std::vector<double> normalize_per_destination(std::span<const double> raw, std::span<const std::int32_t> dst);

DynamicHeteroGraph build_dynamic_graph(const GlobalCitationNetwork& net, PaperIndex target,
                                       TimeStep observation_point, int window,
                                       const SamplingOptions& options = {});

// Placeholder snapshot for years before the target was published: only the
// snapshot's time node.
HeteroSnapshot placeholder_snapshot(PaperIndex target, TimeStep t);

// Serialization: one JSON document per dynamic graph with global string
// ids, documented in README.md. Loading resolves ids against `net`.
std::string to_json(const DynamicHeteroGraph& g, const GlobalCitationNetwork& net);
DynamicHeteroGraph from_json(const std::string& text, const GlobalCitationNetwork& net);
void save_graphs(const std::vector<DynamicHeteroGraph>& graphs, const GlobalCitationNetwork& net,
                 const std::filesystem::path& dir);
std::vector<DynamicHeteroGraph> load_graphs(const std::filesystem::path& dir, const GlobalCitationNetwork& net);

}  // namespace dppdcc::graph
