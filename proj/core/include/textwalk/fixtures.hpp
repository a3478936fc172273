#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textwalk/graph.hpp"

namespace textwalk {

std::vector<std::string> default_modifiers();

struct FixtureSpec {
  std::size_t base_concepts = 400;
  std::vector<std::string> modifiers = default_modifiers();
  std::size_t depth = 5;  // hierarchy levels, base concepts included
  std::size_t cross_links = 200;
  std::uint64_t seed = 0;
  // Share of fresh descriptors shaped "x of y" rather than a single lexeme.
  // At 1 "of" is a pure stop word; below 1 its presence marks a subtree.
  double of_phrase_fraction = 1.0;
  // Share of cross links that point at an ancestor two to four levels up;
  // the rest point at a random node on a shallower level.
  double shortcut_fraction = 0.5;

  std::vector<std::string> validate() const;
};

struct CompositionalChild {
  std::string child;
  std::string parent;
  std::string modifier;
};

struct FixtureManifest {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t base_links = 0;  // base concept -> earlier base concept
  std::size_t compositional_children = 0;
  std::size_t noncompositional_children = 0;
  std::size_t cross_links = 0;
  std::size_t shortcut_links = 0;  // cross links to an ancestor
  std::size_t lexeme_count = 0;
  std::vector<CompositionalChild> compositional;
  std::vector<KeyedEdge> bridges;

  std::string to_json(const FixtureSpec& spec) const;
};

// Synthetic IS-A style hierarchy. Level 1 holds base concepts chained under
// earlier base concepts; each deeper level adds base_concepts nodes under
// random parents one level up. Four in five of those children are named
// "<modifier> <parent descriptor>", the rest get fresh lexemes. Cross links
// add extra child -> shallower-node edges, which are never bridges; a share
// of them are shortcuts to an existing ancestor.
struct Fixture {
  FixtureSpec spec;
  std::vector<KeyedEdge> edges;
  std::vector<std::pair<std::string, std::string>> descriptors;  // key, text
  FixtureManifest manifest;

  Graph graph() const;
  // Writes edges.tsv, descriptors.tsv and manifest.json into `dir`.
  void write(const std::filesystem::path& dir) const;
};

Fixture generate_fixture(const FixtureSpec& spec);

}  // namespace textwalk
