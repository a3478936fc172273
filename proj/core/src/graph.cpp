#include "textwalk/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <unordered_set>

#include "textwalk/error.hpp"
#include "textwalk/log.hpp"

namespace textwalk {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::uint64_t undirected_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::uint32_t Vocabulary::intern(const std::string& word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<std::uint32_t>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (auto& ch : token) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  if (tokens.empty()) throw Error(ErrorCode::DescriptorEmpty, "'" + std::string(text) + "'");
  return tokens;
}

Graph Graph::build(std::span<const KeyedEdge> edges,
                   const std::unordered_map<std::string, std::string>& descriptor_text) {
  Graph g;
  auto intern_node = [&g](const std::string& key) {
    auto [it, inserted] = g.key_index_.try_emplace(key, static_cast<NodeId>(g.keys_.size()));
    if (inserted) g.keys_.push_back(key);
    return it->second;
  };

  std::unordered_set<std::uint64_t> seen;
  for (const auto& e : edges) {
    if (e.child == e.parent) throw Error(ErrorCode::SelfLoop, e.child);
    const NodeId c = intern_node(e.child);
    const NodeId p = intern_node(e.parent);
    if (!seen.insert(undirected_key(c, p)).second) {
      ++g.duplicates_;
      continue;
    }
    g.hierarchy_.push_back({c, p});
  }
  if (g.duplicates_ > 0) log().warn("collapsed {} duplicate edges", g.duplicates_);

  const std::size_t n = g.keys_.size();
  g.adjacency_.resize(n);
  g.parents_.resize(n);
  g.children_.resize(n);
  for (const auto& [c, p] : g.hierarchy_) {
    g.adjacency_[c].push_back(p);
    g.adjacency_[p].push_back(c);
    g.parents_[c].push_back(p);
    g.children_[p].push_back(c);
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(g.adjacency_[v].begin(), g.adjacency_[v].end());
    std::sort(g.parents_[v].begin(), g.parents_[v].end());
    std::sort(g.children_[v].begin(), g.children_[v].end());
  }

  g.descriptors_.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto it = descriptor_text.find(g.keys_[v]);
    if (it == descriptor_text.end()) throw Error(ErrorCode::MissingDescriptor, g.keys_[v]);
    for (const auto& token : tokenize(it->second)) {
      g.descriptors_[v].push_back(g.vocabulary_.intern(token));
    }
  }
  return g;
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  const auto& adj = adjacency_[a];
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::optional<NodeId> Graph::find(std::string_view key) const {
  auto it = key_index_.find(std::string(key));
  if (it == key_index_.end()) return std::nullopt;
  return it->second;
}

NodeId Graph::require(std::string_view key) const {
  if (auto id = find(key)) return *id;
  throw Error(ErrorCode::UnknownNode, std::string(key));
}

std::string Graph::descriptor_text(NodeId v) const {
  std::string out;
  for (auto t : descriptors_[v]) {
    if (!out.empty()) out += ' ';
    out += vocabulary_.word(t);
  }
  return out;
}

Graph Graph::without_edges(std::span<const NodePair> removed) const {
  std::unordered_set<std::uint64_t> drop;
  for (const auto& e : removed) drop.insert(undirected_key(e.first, e.second));

  Graph g = *this;
  g.hierarchy_.clear();
  for (const auto& e : hierarchy_) {
    if (!drop.contains(undirected_key(e.first, e.second))) g.hierarchy_.push_back(e);
  }
  auto keep = [&drop](NodeId v, std::vector<NodeId>& list) {
    std::erase_if(list, [&](NodeId u) { return drop.contains(undirected_key(u, v)); });
  };
  for (NodeId v = 0; v < g.node_count(); ++v) {
    keep(v, g.adjacency_[v]);
    keep(v, g.parents_[v]);
    keep(v, g.children_[v]);
  }
  return g;
}

std::unordered_map<std::string, std::string> read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::unordered_map<std::string, std::string> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw Error(ErrorCode::MalformedLine, path.filename().string() + ":" + std::to_string(line_no));
    }
    out.insert_or_assign(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  }
  return out;
}

std::vector<KeyedEdge> read_edges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<KeyedEdge> edges;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, path.filename().string() + ":" + std::to_string(line_no));
    }
    edges.push_back({std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))});
  }
  return edges;
}

Graph load_graph(const std::filesystem::path& edges_path,
                 const std::filesystem::path& descriptors_path) {
  const auto edges = read_edges(edges_path);
  const auto descriptors = read_descriptors(descriptors_path);
  return Graph::build(edges, descriptors);
}

void save_graph(const Graph& g, const std::filesystem::path& edges_path,
                const std::filesystem::path& descriptors_path) {
  std::ofstream edges(edges_path, std::ios::binary);
  std::ofstream descriptors(descriptors_path, std::ios::binary);
  if (!edges || !descriptors) throw Error(ErrorCode::Io, "cannot write graph files");
  for (const auto& [c, p] : g.hierarchy_edges()) edges << g.key(c) << '\t' << g.key(p) << '\n';
  for (NodeId v = 0; v < g.node_count(); ++v) {
    descriptors << g.key(v) << '\t' << g.descriptor_text(v) << '\n';
  }
}

std::optional<std::size_t> hop_distance(const Graph& g, NodeId a, NodeId b, std::size_t cap) {
  if (a == b) return 0;
  std::vector<std::uint32_t> dist(g.node_count(), UINT32_MAX);
  std::deque<NodeId> frontier{a};
  dist[a] = 0;
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    if (dist[v] >= cap) break;
    for (NodeId u : g.neighbors(v)) {
      if (dist[u] != UINT32_MAX) continue;
      dist[u] = dist[v] + 1;
      if (u == b) return dist[u];
      frontier.push_back(u);
    }
  }
  return std::nullopt;
}

bool is_connected(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (NodeId u : g.neighbors(v)) {
      if (!seen[u]) {
        seen[u] = true;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n;
}

namespace {

// Directed BFS along parents() from `from`, looking for `target`.
bool reaches_upward(const Graph& g, NodeId from, NodeId target, std::size_t max_depth) {
  std::unordered_map<NodeId, std::size_t> depth{{from, 0}};
  std::deque<NodeId> frontier{from};
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    const std::size_t d = depth[v];
    if (d >= max_depth) continue;
    for (NodeId p : g.parents(v)) {
      if (p == target) return true;
      if (depth.try_emplace(p, d + 1).second) frontier.push_back(p);
    }
  }
  return false;
}

}  // namespace

bool is_hierarchy_relative(const Graph& g, NodeId a, NodeId b, std::size_t max_depth) {
  if (a == b) return false;
  return reaches_upward(g, a, b, max_depth) || reaches_upward(g, b, a, max_depth);
}

std::vector<NodeId> ancestors_between(const Graph& g, NodeId v, std::size_t min_depth,
                                      std::size_t max_depth) {
  std::unordered_map<NodeId, std::size_t> depth{{v, 0}};
  std::deque<NodeId> frontier{v};
  std::vector<NodeId> out;
  while (!frontier.empty()) {
    const NodeId x = frontier.front();
    frontier.pop_front();
    const std::size_t d = depth[x];
    if (d >= min_depth) out.push_back(x);
    if (d >= max_depth) continue;
    for (NodeId p : g.parents(x)) {
      if (depth.try_emplace(p, d + 1).second) frontier.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodePair> find_bridges(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> order(n, UINT32_MAX), low(n, 0);
  std::vector<NodePair> bridges;
  std::uint32_t timer = 0;

  struct Frame {
    NodeId v;
    NodeId parent;
    std::size_t next;
    bool skipped_parent;
  };
  std::vector<Frame> stack;
  for (NodeId root = 0; root < n; ++root) {
    if (order[root] != UINT32_MAX) continue;
    order[root] = low[root] = timer++;
    stack.push_back({root, root, 0, false});
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto adj = g.neighbors(f.v);
      if (f.next < adj.size()) {
        const NodeId u = adj[f.next++];
        if (u == f.parent && !f.skipped_parent && f.v != root) {
          f.skipped_parent = true;
          continue;
        }
        if (order[u] == UINT32_MAX) {
          order[u] = low[u] = timer++;
          stack.push_back({u, f.v, 0, false});
        } else {
          low[f.v] = std::min(low[f.v], order[u]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const NodeId p = stack.back().v;
          low[p] = std::min(low[p], low[done.v]);
          if (low[done.v] > order[p]) {
            bridges.push_back({std::min(p, done.v), std::max(p, done.v)});
          }
        }
      }
    }
  }
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

}  // namespace textwalk
