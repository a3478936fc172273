#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "textwalk/graph.hpp"
#include "textwalk/rng.hpp"

namespace textwalk {

struct WalkConfig {
  double p = 1.0;               // return parameter
  double q = 1.0;               // in-out parameter
  std::size_t walks_per_node = 5;
  std::size_t walk_length = 40;  // nodes per walk
  std::size_t window = 10;       // context window length in nodes

  // Human-readable problems, empty when valid.
  std::vector<std::string> validate() const;
};

struct Walk {
  std::vector<NodeId> nodes;
  NodeId start() const { return nodes.front(); }
  bool operator==(const Walk&) const = default;
};

// Focus/context training pair.
struct ContextPair {
  NodeId focus;
  NodeId context;
  bool operator==(const ContextPair&) const = default;
};

// Vose alias sampler over a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const noexcept { return accept_.size(); }
  std::size_t sample(Rng& rng) const;
  // Exact distribution encoded by the table, reconstructed from accept/alias.
  std::vector<double> probabilities() const;

 private:
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

// Unnormalized node2vec transition weight for stepping cur -> next having
// arrived from prev. Throws NotNeighbor when next is not adjacent to cur.
double second_order_weight(const Graph& g, NodeId prev, NodeId cur, NodeId next, double p,
                           double q);

// One alias sampler per directed edge (prev -> cur) over neighbors(cur).
// With p == q == 1 every sampler is uniform and none are materialized.
class TransitionTables {
 public:
  TransitionTables(const Graph& g, double p, double q);

  // Position within neighbors(cur) of the next node, having come from the
  // neighbor at position prev_pos in neighbors(cur).
  std::size_t sample_next(NodeId cur, std::size_t prev_pos_in_cur, Rng& rng) const;
  // Normalized probability of next_pos given (prev -> cur).
  std::vector<double> distribution(NodeId prev, NodeId cur) const;

  bool uniform() const noexcept { return uniform_; }

 private:
  const Graph* graph_;
  bool uniform_;
  // offsets_[v] is the first directed-edge slot for edges (v -> *); the slot
  // for (neighbors(v)[i] -> v) is offsets_[v] + i.
  std::vector<std::size_t> offsets_;
  std::vector<AliasTable> tables_;
};

// Throws IsolatedNode if any node has no neighbors.
TransitionTables build_alias_tables(const Graph& g, const WalkConfig& cfg);

// walks_per_node walks from every node, ordered round-major then by start
// node. Each walk draws from its own stream keyed by (seed, node, round), so
// the output does not depend on `threads`.
std::vector<Walk> generate_walks(const Graph& g, const TransitionTables& tables,
                                 const WalkConfig& cfg, std::uint64_t seed,
                                 std::size_t threads = 1);

// Sliding window: for every position t, pairs (t, t+j) for j in [1, window).
std::vector<ContextPair> extract_pairs(std::span<const Walk> walks, std::size_t window);

// Closed-form count of extract_pairs output for one walk.
std::size_t pair_count(std::size_t walk_length, std::size_t window);

// One walk per line, space-separated external keys.
void write_walks(const Graph& g, std::span<const Walk> walks, const std::filesystem::path& path);

}  // namespace textwalk
