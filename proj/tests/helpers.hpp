#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <unistd.h>

#include "textwalk/graph.hpp"
#include "textwalk/rng.hpp"

namespace testing {

using textwalk::Graph;
using textwalk::KeyedEdge;

// Edges as (child, parent) keys; every node gets its own key as descriptor
// unless a descriptor is supplied.
inline Graph make_graph(const std::vector<std::pair<std::string, std::string>>& edges,
                        std::unordered_map<std::string, std::string> text = {}) {
  std::vector<KeyedEdge> keyed;
  for (const auto& [c, p] : edges) {
    keyed.push_back({c, p});
    text.try_emplace(c, c);
    text.try_emplace(p, p);
  }
  return Graph::build(keyed, text);
}

inline std::string n(std::size_t i) { return "n" + std::to_string(i); }

inline Graph path_graph(std::size_t nodes) {
  std::vector<std::pair<std::string, std::string>> e;
  for (std::size_t i = 1; i < nodes; ++i) e.emplace_back(n(i), n(i - 1));
  return make_graph(e);
}

inline Graph cycle_graph(std::size_t nodes) {
  std::vector<std::pair<std::string, std::string>> e;
  for (std::size_t i = 1; i < nodes; ++i) e.emplace_back(n(i), n(i - 1));
  e.emplace_back(n(0), n(nodes - 1));
  return make_graph(e);
}

inline Graph star_graph(std::size_t leaves) {
  std::vector<std::pair<std::string, std::string>> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.emplace_back(n(i), n(0));
  return make_graph(e);
}

// Perfect binary tree; node i has children 2i+1 and 2i+2. `depth` counts
// edge levels, so there are 2^(depth+1) - 1 nodes.
inline Graph binary_tree(std::size_t depth) {
  std::vector<std::pair<std::string, std::string>> e;
  const std::size_t count = (std::size_t{1} << (depth + 1)) - 1;
  for (std::size_t i = 1; i < count; ++i) e.emplace_back(n(i), n((i - 1) / 2));
  return make_graph(e);
}

// Connected random graph: random tree plus extra edges, no duplicates.
inline Graph random_connected(std::size_t nodes, std::size_t extra, std::uint64_t seed) {
  textwalk::Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> e;
  std::vector<std::vector<bool>> used(nodes, std::vector<bool>(nodes, false));
  for (std::size_t i = 1; i < nodes; ++i) {
    const auto p = rng.below(i);
    e.emplace_back(n(i), n(p));
    used[i][p] = used[p][i] = true;
  }
  for (std::size_t k = 0; k < extra; ++k) {
    const auto a = rng.below(nodes), b = rng.below(nodes);
    if (a == b || used[a][b]) continue;
    used[a][b] = used[b][a] = true;
    e.emplace_back(n(std::max(a, b)), n(std::min(a, b)));
  }
  return make_graph(e);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("textwalk-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace testing
