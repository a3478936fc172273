#include "textwalk/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "textwalk/atomic_file.hpp"
#include "textwalk/error.hpp"
#include "textwalk/rng.hpp"

namespace textwalk {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

class LexemePool {
 public:
  LexemePool(Rng& rng, const std::vector<std::string>& reserved) : rng_(rng) {
    used_.insert("of");
    used_.insert(reserved.begin(), reserved.end());
  }

  std::string fresh() {
    for (;;) {
      std::string word;
      const auto syllables = 2 + rng_.below(2);
      for (std::uint64_t s = 0; s < syllables; ++s) {
        word += kConsonants[rng_.below(kConsonants.size())];
        word += kVowels[rng_.below(kVowels.size())];
      }
      if (used_.insert(word).second) {
        ++count_;
        return word;
      }
    }
  }

  std::size_t count() const { return count_; }

 private:
  Rng& rng_;
  std::unordered_set<std::string> used_;
  std::size_t count_ = 0;
};

std::string key_for(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "N%05zu", i);
  return buf;
}

}  // namespace

std::vector<std::string> default_modifiers() {
  return {"acute",    "chronic", "severe",   "mild",  "congenital", "primary",
          "secondary", "malignant", "benign", "recurrent", "left", "right",
          "upper",    "lower",   "posterior", "anterior"};
}

std::vector<std::string> FixtureSpec::validate() const {
  std::vector<std::string> problems;
  if (base_concepts < 10) problems.push_back("base-concepts must be >= 10");
  if (depth < 2) problems.push_back("depth must be >= 2");
  if (modifiers.empty()) problems.push_back("at least one modifier is required");
  if (!(of_phrase_fraction >= 0.0 && of_phrase_fraction <= 1.0)) {
    problems.push_back("of-phrase fraction must be in [0, 1]");
  }
  if (!(shortcut_fraction >= 0.0 && shortcut_fraction <= 1.0)) {
    problems.push_back("shortcut fraction must be in [0, 1]");
  }
  return problems;
}

Fixture generate_fixture(const FixtureSpec& spec) {
  if (auto problems = spec.validate(); !problems.empty()) {
    throw Error(ErrorCode::InvalidConfig, problems.front());
  }
  Fixture fx;
  fx.spec = spec;
  Rng rng(spec.seed);
  LexemePool lexemes(rng, spec.modifiers);

  std::vector<std::string> text;        // per node
  std::vector<std::vector<std::size_t>> levels(spec.depth + 1);
  std::unordered_set<std::uint64_t> linked;
  auto link = [&](std::size_t child, std::size_t parent) {
    fx.edges.push_back({key_for(child), key_for(parent)});
    linked.insert((static_cast<std::uint64_t>(std::min(child, parent)) << 32) | std::max(child, parent));
  };
  auto fresh_text = [&] {
    if (rng.uniform() < spec.of_phrase_fraction) return lexemes.fresh() + " of " + lexemes.fresh();
    return lexemes.fresh();
  };
  auto add_node = [&](std::string t, std::size_t level) {
    text.push_back(std::move(t));
    levels[level].push_back(text.size() - 1);
    return text.size() - 1;
  };

  for (std::size_t i = 0; i < spec.base_concepts; ++i) {
    const auto v = add_node(fresh_text(), 1);
    if (i > 0) {
      link(v, levels[1][rng.below(i)]);
      ++fx.manifest.base_links;
    }
  }

  const auto compositional_per_level =
      static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(spec.base_concepts)));
  for (std::size_t level = 2; level <= spec.depth; ++level) {
    std::vector<std::uint8_t> compositional(spec.base_concepts, 0);
    std::fill_n(compositional.begin(), compositional_per_level, 1);
    rng.shuffle(std::span<std::uint8_t>(compositional));
    for (std::size_t i = 0; i < spec.base_concepts; ++i) {
      const auto& above = levels[level - 1];
      const std::size_t parent = above[rng.below(above.size())];
      std::size_t child;
      if (compositional[i]) {
        std::istringstream parent_words(text[parent]);
        std::unordered_set<std::string> present;
        for (std::string w; parent_words >> w;) present.insert(w);
        std::vector<const std::string*> options;
        for (const auto& m : spec.modifiers) {
          if (!present.contains(m)) options.push_back(&m);
        }
        const std::string& modifier = options.empty()
                                          ? spec.modifiers[rng.below(spec.modifiers.size())]
                                          : *options[rng.below(options.size())];
        child = add_node(modifier + " " + text[parent], level);
        fx.manifest.compositional.push_back({key_for(child), key_for(parent), modifier});
        ++fx.manifest.compositional_children;
      } else {
        child = add_node(fresh_text(), level);
        ++fx.manifest.noncompositional_children;
      }
      link(child, parent);
    }
  }

  // Cross links. Shortcuts point at an ancestor two or more levels up, the
  // redundant transitive links real ontologies carry; the others point at a
  // random node on a shallower level. Either way the edge closes a cycle.
  std::vector<std::vector<std::size_t>> parents_of(text.size());
  for (const auto& e : fx.edges) {
    parents_of[std::stoul(e.child.substr(1))].push_back(std::stoul(e.parent.substr(1)));
  }
  const auto shortcut_target = static_cast<std::size_t>(
      std::llround(spec.shortcut_fraction * static_cast<double>(spec.cross_links)));
  const std::size_t max_attempts = 100 * spec.cross_links + 100;
  for (std::size_t attempt = 0; attempt < max_attempts && fx.manifest.cross_links < spec.cross_links;
       ++attempt) {
    const bool shortcut = fx.manifest.shortcut_links < shortcut_target;
    std::size_t child, target;
    if (shortcut) {
      child = rng.below(text.size());
      target = child;
      const std::size_t hops = 2 + rng.below(3);
      for (std::size_t h = 0; h < hops && target != SIZE_MAX; ++h) {
        const auto& ps = parents_of[target];
        target = ps.empty() ? SIZE_MAX : ps[rng.below(ps.size())];
      }
      if (target == SIZE_MAX) continue;
    } else {
      const std::size_t level = 2 + rng.below(spec.depth - 1);
      child = levels[level][rng.below(levels[level].size())];
      const std::size_t up = 1 + rng.below(level - 1);
      target = levels[up][rng.below(levels[up].size())];
    }
    const std::uint64_t key =
        (static_cast<std::uint64_t>(std::min(child, target)) << 32) | std::max(child, target);
    if (linked.contains(key)) continue;
    link(child, target);
    parents_of[child].push_back(target);
    ++fx.manifest.cross_links;
    if (shortcut) ++fx.manifest.shortcut_links;
  }

  for (std::size_t v = 0; v < text.size(); ++v) fx.descriptors.emplace_back(key_for(v), text[v]);
  fx.manifest.lexeme_count = lexemes.count();

  const Graph g = fx.graph();
  fx.manifest.node_count = g.node_count();
  fx.manifest.edge_count = g.edge_count();
  for (const auto& b : find_bridges(g)) fx.manifest.bridges.push_back({g.key(b.first), g.key(b.second)});
  return fx;
}

Graph Fixture::graph() const {
  std::unordered_map<std::string, std::string> text(descriptors.begin(), descriptors.end());
  return Graph::build(edges, text);
}

std::string FixtureManifest::to_json(const FixtureSpec& spec) const {
  nlohmann::ordered_json j;
  j["format"] = "textwalk-fixture";
  j["version"] = 1;
  j["seed"] = spec.seed;
  j["base_concepts"] = spec.base_concepts;
  j["depth"] = spec.depth;
  j["modifiers"] = spec.modifiers;
  j["of_phrase_fraction"] = spec.of_phrase_fraction;
  j["shortcut_fraction"] = spec.shortcut_fraction;
  j["compositional_ratio"] = "4:1";
  j["node_count"] = node_count;
  j["edge_count"] = edge_count;
  j["base_links"] = base_links;
  j["compositional_children"] = compositional_children;
  j["noncompositional_children"] = noncompositional_children;
  j["cross_links"] = cross_links;
  j["shortcut_links"] = shortcut_links;
  j["lexeme_count"] = lexeme_count;
  auto& comp = j["compositional"] = nlohmann::ordered_json::array();
  for (const auto& c : compositional) comp.push_back({c.child, c.parent, c.modifier});
  auto& br = j["bridges"] = nlohmann::ordered_json::array();
  for (const auto& b : bridges) br.push_back({b.child, b.parent});
  return j.dump(1) + "\n";
}

void Fixture::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string e = "# child\tparent\n";
  for (const auto& edge : edges) e += edge.child + "\t" + edge.parent + "\n";
  std::string d;
  for (const auto& [key, t] : descriptors) d += key + "\t" + t + "\n";
  write_text_atomically(dir / "edges.tsv", e);
  write_text_atomically(dir / "descriptors.tsv", d);
  write_text_atomically(dir / "manifest.json", manifest.to_json(spec));
}

}  // namespace textwalk
