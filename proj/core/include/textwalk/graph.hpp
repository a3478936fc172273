#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace textwalk {

// Dense node index in [0, |V|), assigned in order of first appearance in the
// edge file.
using NodeId = std::uint32_t;

// Token indices into a Vocabulary; never empty for a loaded node.
using Descriptor = std::vector<std::uint32_t>;

struct NodePair {
  NodeId first;
  NodeId second;
  bool operator==(const NodePair&) const = default;
  auto operator<=>(const NodePair&) const = default;
};

class Vocabulary {
 public:
  std::uint32_t intern(const std::string& word);
  std::optional<std::uint32_t> find(std::string_view word) const;
  const std::string& word(std::uint32_t index) const { return words_[index]; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Lowercase, split on whitespace, strip punctuation from token edges.
// Throws DescriptorEmpty when nothing survives.
std::vector<std::string> tokenize(std::string_view text);

// One edge as read from input: child key first, parent key second.
struct KeyedEdge {
  std::string child;
  std::string parent;
};

// Undirected text-attributed graph that remembers the child->parent
// direction of every input edge. Immutable once built.
class Graph {
 public:
  // Builds from keyed edges; node ids follow first appearance. Every key
  // needs a descriptor. Duplicate undirected edges are collapsed and counted.
  static Graph build(std::span<const KeyedEdge> edges,
                     const std::unordered_map<std::string, std::string>& descriptor_text);

  std::size_t node_count() const noexcept { return keys_.size(); }
  std::size_t edge_count() const noexcept { return hierarchy_.size(); }
  std::size_t duplicate_edges() const noexcept { return duplicates_; }

  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }
  bool has_edge(NodeId a, NodeId b) const;

  std::span<const NodeId> parents(NodeId v) const { return parents_[v]; }
  std::span<const NodeId> children(NodeId v) const { return children_[v]; }
  // Directed (child, parent) pairs in input order.
  const std::vector<NodePair>& hierarchy_edges() const noexcept { return hierarchy_; }

  const Descriptor& descriptor(NodeId v) const { return descriptors_[v]; }
  const std::string& key(NodeId v) const { return keys_[v]; }
  std::optional<NodeId> find(std::string_view key) const;
  NodeId require(std::string_view key) const;
  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  // Descriptor tokens joined with single spaces.
  std::string descriptor_text(NodeId v) const;

  // Same nodes, ids and vocabulary with the given undirected edges dropped.
  Graph without_edges(std::span<const NodePair> removed) const;

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, NodeId> key_index_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodePair> hierarchy_;
  std::vector<Descriptor> descriptors_;
  Vocabulary vocabulary_;
  std::size_t duplicates_ = 0;
};

Graph load_graph(const std::filesystem::path& edges_path,
                 const std::filesystem::path& descriptors_path);

// Reads `key<TAB>text` lines.
std::unordered_map<std::string, std::string> read_descriptors(const std::filesystem::path& path);
// Reads `child<TAB>parent` lines, skipping blanks and '#' comments.
std::vector<KeyedEdge> read_edges(const std::filesystem::path& path);

// Writes the graph back out in the loader's formats.
void save_graph(const Graph& g, const std::filesystem::path& edges_path,
                const std::filesystem::path& descriptors_path);

// Shortest undirected path length, or nullopt when longer than cap or
// unreachable.
std::optional<std::size_t> hop_distance(const Graph& g, NodeId a, NodeId b, std::size_t cap);

bool is_connected(const Graph& g);

// True iff b is an ancestor or descendant of a within max_depth directed
// hierarchy steps.
bool is_hierarchy_relative(const Graph& g, NodeId a, NodeId b, std::size_t max_depth);

// Ancestors at shortest directed distance in [min_depth, max_depth], sorted.
std::vector<NodeId> ancestors_between(const Graph& g, NodeId v, std::size_t min_depth,
                                      std::size_t max_depth);

// Undirected bridges as (min id, max id) pairs, sorted.
std::vector<NodePair> find_bridges(const Graph& g);

}  // namespace textwalk
