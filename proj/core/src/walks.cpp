#include "textwalk/walks.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <thread>

#include "textwalk/error.hpp"

namespace textwalk {

std::vector<std::string> WalkConfig::validate() const {
  std::vector<std::string> problems;
  if (!(p > 0.0)) problems.push_back("p must be > 0");
  if (!(q > 0.0)) problems.push_back("q must be > 0");
  if (walks_per_node < 1) problems.push_back("walks-per-node must be >= 1");
  if (window < 2) problems.push_back("window must be >= 2");
  if (walk_length < window) problems.push_back("walk-length must be >= window");
  return problems;
}

AliasTable::AliasTable(std::span<const double> weights)
    : accept_(weights.size(), 1.0), alias_(weights.size()) {
  const std::size_t n = weights.size();
  double total = 0.0;
  for (double w : weights) total += w;

  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    alias_[i] = static_cast<std::uint32_t>(i);
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : small) accept_[i] = 1.0;
  for (auto i : large) accept_[i] = 1.0;
}

std::size_t AliasTable::sample(Rng& rng) const {
  const auto i = static_cast<std::size_t>(rng.below(accept_.size()));
  return rng.uniform() < accept_[i] ? i : alias_[i];
}

std::vector<double> AliasTable::probabilities() const {
  const std::size_t n = accept_.size();
  std::vector<double> probs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] += accept_[i] / static_cast<double>(n);
    probs[alias_[i]] += (1.0 - accept_[i]) / static_cast<double>(n);
  }
  return probs;
}

double second_order_weight(const Graph& g, NodeId prev, NodeId cur, NodeId next, double p,
                           double q) {
  if (!g.has_edge(cur, next)) {
    throw Error(ErrorCode::NotNeighbor, g.key(next) + " is not adjacent to " + g.key(cur));
  }
  if (next == prev) return 1.0 / p;
  if (g.has_edge(prev, next)) return 1.0;
  return 1.0 / q;
}

TransitionTables::TransitionTables(const Graph& g, double p, double q)
    : graph_(&g), uniform_(p == 1.0 && q == 1.0) {
  const std::size_t n = g.node_count();
  for (NodeId v = 0; v < n; ++v) {
    if (g.degree(v) == 0) throw Error(ErrorCode::IsolatedNode, g.key(v));
  }
  if (uniform_) return;

  offsets_.resize(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + g.degree(v);
  tables_.resize(offsets_[n]);
  std::vector<double> weights;
  for (NodeId cur = 0; cur < n; ++cur) {
    const auto adj = g.neighbors(cur);
    weights.resize(adj.size());
    for (std::size_t i = 0; i < adj.size(); ++i) {
      const NodeId prev = adj[i];
      for (std::size_t j = 0; j < adj.size(); ++j) {
        weights[j] = second_order_weight(g, prev, cur, adj[j], p, q);
      }
      tables_[offsets_[cur] + i] = AliasTable(weights);
    }
  }
}

std::size_t TransitionTables::sample_next(NodeId cur, std::size_t prev_pos_in_cur, Rng& rng) const {
  if (uniform_) return static_cast<std::size_t>(rng.below(graph_->degree(cur)));
  return tables_[offsets_[cur] + prev_pos_in_cur].sample(rng);
}

std::vector<double> TransitionTables::distribution(NodeId prev, NodeId cur) const {
  const auto adj = graph_->neighbors(cur);
  const auto it = std::lower_bound(adj.begin(), adj.end(), prev);
  if (it == adj.end() || *it != prev) {
    throw Error(ErrorCode::NotNeighbor, graph_->key(prev) + " is not adjacent to " + graph_->key(cur));
  }
  if (uniform_) return std::vector<double>(adj.size(), 1.0 / static_cast<double>(adj.size()));
  return tables_[offsets_[cur] + static_cast<std::size_t>(it - adj.begin())].probabilities();
}

TransitionTables build_alias_tables(const Graph& g, const WalkConfig& cfg) {
  return TransitionTables(g, cfg.p, cfg.q);
}

namespace {

Walk walk_from(const Graph& g, const TransitionTables& tables, NodeId start, std::size_t length,
               Rng& rng) {
  Walk w;
  w.nodes.reserve(length);
  w.nodes.push_back(start);
  if (length < 2) return w;
  auto adj = g.neighbors(start);
  NodeId prev = start;
  NodeId cur = adj[rng.below(adj.size())];
  w.nodes.push_back(cur);
  while (w.nodes.size() < length) {
    const auto cur_adj = g.neighbors(cur);
    const auto prev_pos = static_cast<std::size_t>(
        std::lower_bound(cur_adj.begin(), cur_adj.end(), prev) - cur_adj.begin());
    const NodeId next = cur_adj[tables.sample_next(cur, prev_pos, rng)];
    w.nodes.push_back(next);
    prev = cur;
    cur = next;
  }
  return w;
}

}  // namespace

std::vector<Walk> generate_walks(const Graph& g, const TransitionTables& tables,
                                 const WalkConfig& cfg, std::uint64_t seed, std::size_t threads) {
  const std::size_t n = g.node_count();
  const std::size_t total = n * cfg.walks_per_node;
  std::vector<Walk> walks(total);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t slot = begin; slot < end; ++slot) {
      const std::size_t round = slot / n;
      const auto v = static_cast<NodeId>(slot % n);
      Rng rng = Rng::stream(seed, v, round);
      walks[slot] = walk_from(g, tables, v, cfg.walk_length, rng);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, total));
  if (threads == 1) {
    work(0, total);
    return walks;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (total + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  return walks;
}

std::size_t pair_count(std::size_t walk_length, std::size_t window) {
  std::size_t count = 0;
  for (std::size_t t = 0; t < walk_length; ++t) count += std::min(window - 1, walk_length - 1 - t);
  return count;
}

std::vector<ContextPair> extract_pairs(std::span<const Walk> walks, std::size_t window) {
  std::vector<ContextPair> pairs;
  std::size_t expected = 0;
  for (const auto& w : walks) expected += pair_count(w.nodes.size(), window);
  pairs.reserve(expected);
  for (const auto& w : walks) {
    const auto& nodes = w.nodes;
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      for (std::size_t j = 1; j < window && t + j < nodes.size(); ++j) {
        pairs.push_back({nodes[t], nodes[t + j]});
      }
    }
  }
  return pairs;
}

void write_walks(const Graph& g, std::span<const Walk> walks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& w : walks) {
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
      if (i) out << ' ';
      out << g.key(w.nodes[i]);
    }
    out << '\n';
  }
}

}  // namespace textwalk
