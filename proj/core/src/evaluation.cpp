#include "textwalk/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "textwalk/atomic_file.hpp"
#include "textwalk/error.hpp"
#include "textwalk/log.hpp"
#include "textwalk/rng.hpp"

namespace textwalk {

namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::string_view to_string(NegativeStrategy s) {
  return s == NegativeStrategy::Random ? "random" : "close-proximity";
}

std::optional<NegativeStrategy> parse_strategy(std::string_view name) {
  if (name == "random") return NegativeStrategy::Random;
  if (name == "close-proximity") return NegativeStrategy::CloseProximity;
  return std::nullopt;
}

RemovedEdges split_edges(const Graph& g, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "fraction must be in (0, 1)");
  }
  const auto& edges = g.hierarchy_edges();
  const auto target = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(edges.size())));

  // Random spanning forest: Kruskal over a shuffled edge order.
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<NodeId> parent(g.node_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&parent](NodeId v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::vector<std::size_t> removable;
  for (auto idx : order) {
    const NodeId a = root(edges[idx].first);
    const NodeId b = root(edges[idx].second);
    if (a == b) {
      removable.push_back(idx);
    } else {
      parent[a] = b;
    }
  }
  if (removable.empty() || removable.size() < target) {
    throw Error(ErrorCode::SplitInfeasible,
                "achievable " + std::to_string(removable.size()) + " of " + std::to_string(target));
  }
  // `removable` is already in shuffled order; a prefix is a uniform subset.
  removable.resize(std::max<std::size_t>(target, 1));
  std::sort(removable.begin(), removable.end());
  RemovedEdges out;
  for (auto idx : removable) out.removed.push_back(edges[idx]);
  out.train_graph = g.without_edges(out.removed);
  return out;
}

std::vector<NodePair> sample_random_negatives(const Graph& g, std::size_t count,
                                              std::uint64_t seed) {
  const std::size_t n = g.node_count();
  const std::size_t all_pairs = n * (n - 1) / 2;
  const std::size_t available = all_pairs - g.edge_count();
  if (count > available) {
    throw Error(ErrorCode::NotEnoughNegatives,
                "found " + std::to_string(available) + " of " + std::to_string(count));
  }
  Rng rng(seed);
  std::vector<NodePair> out;
  if (available <= 2 * count) {
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (!g.has_edge(a, b)) out.push_back({a, b});
      }
    }
    rng.shuffle(std::span<NodePair>(out));
    out.resize(count);
    return out;
  }
  std::unordered_set<std::uint64_t> seen;
  while (out.size() < count) {
    auto a = static_cast<NodeId>(rng.below(n));
    auto b = static_cast<NodeId>(rng.below(n));
    if (a == b || g.has_edge(a, b)) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert(pair_key(a, b)).second) out.push_back({a, b});
  }
  return out;
}

std::vector<NodePair> sample_close_proximity_negatives(const Graph& g, std::size_t count,
                                                       std::uint64_t seed) {
  constexpr std::size_t kMaxPasses = 64;
  const std::size_t n = g.node_count();
  Rng rng(seed);
  std::vector<NodeId> foci(n);
  std::iota(foci.begin(), foci.end(), 0);
  rng.shuffle(std::span<NodeId>(foci));

  std::vector<std::vector<NodeId>> ancestors(n);
  std::vector<std::uint8_t> known(n, 0);
  std::unordered_set<std::uint64_t> seen;
  std::vector<NodePair> pool;
  bool any_candidates = false;
  for (std::size_t pass = 0; pass < kMaxPasses && pool.size() < count; ++pass) {
    for (NodeId v : foci) {
      if (!known[v]) {
        ancestors[v] = ancestors_between(g, v, 2, 5);
        known[v] = 1;
      }
      const auto& candidates = ancestors[v];
      if (candidates.empty()) continue;
      any_candidates = true;
      const NodeId ancestor = candidates[rng.below(candidates.size())];
      const auto kids = g.children(ancestor);
      const NodeId u = kids[rng.below(kids.size())];
      if (u == v || g.has_edge(v, u) || is_hierarchy_relative(g, v, u, kRelativeDepthCap)) continue;
      if (seen.insert(pair_key(v, u)).second) pool.push_back({v, u});
    }
    if (!any_candidates) break;
  }
  if (pool.size() < count) {
    throw Error(ErrorCode::NotEnoughNegatives,
                "found " + std::to_string(pool.size()) + " of " + std::to_string(count));
  }
  rng.shuffle(std::span<NodePair>(pool));
  pool.resize(count);
  return pool;
}

EdgeSplit build_split(const Graph& g, double fraction, NegativeStrategy strategy,
                      std::uint64_t seed) {
  if (!is_connected(g)) throw Error(ErrorCode::SplitInfeasible, "input graph is not connected");
  auto removed = split_edges(g, fraction, Rng::stream(seed, 1).next());
  EdgeSplit split;
  split.strategy = strategy;
  split.fraction = fraction;
  split.seed = seed;
  split.test_positives = std::move(removed.removed);
  split.train_graph = std::move(removed.train_graph);
  split.lr_train_positives = split.train_graph.hierarchy_edges();

  const std::size_t test_count = split.test_positives.size();
  const std::size_t total = test_count + split.lr_train_positives.size();
  const std::uint64_t neg_seed = Rng::stream(seed, 2).next();
  auto pool = strategy == NegativeStrategy::Random
                  ? sample_random_negatives(g, total, neg_seed)
                  : sample_close_proximity_negatives(g, total, neg_seed);
  split.test_negatives.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(test_count));
  split.lr_train_negatives.assign(pool.begin() + static_cast<std::ptrdiff_t>(test_count), pool.end());
  return split;
}

double cs_score(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::max(0.0, dot(a, b) / (na * nb));
}

std::vector<double> hadamard(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double LinkPredictor::probability(std::span<const double> features) const {
  return sigmoid(dot(weights, features) + bias);
}

LinkPredictor fit_logistic(std::span<const Vector> features, std::span<const int> labels,
                           const LogisticOptions& options) {
  const std::size_t n = features.size();
  const std::size_t d = n ? features.front().size() : 0;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto objective = [&](const Vector& w, double b) {
    double j = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dot(w, features[i]) + b;
      j += softplus(z) - labels[i] * z;
    }
    return j * inv_n + 0.5 * options.l2 * dot(w, w);
  };
  auto gradient = [&](const Vector& w, double b, Vector& gw, double& gb) {
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = sigmoid(dot(w, features[i]) + b) - labels[i];
      for (std::size_t k = 0; k < d; ++k) gw[k] += r * features[i][k];
      gb += r;
    }
    for (std::size_t k = 0; k < d; ++k) gw[k] = gw[k] * inv_n + options.l2 * w[k];
    gb *= inv_n;
  };

  // Diagonal scaling by feature second moments keeps tiny embedding products
  // and the bias on comparable footing; the objective is unchanged.
  Vector scale(d, 0.0);
  for (const auto& x : features) {
    for (std::size_t k = 0; k < d; ++k) scale[k] += x[k] * x[k] * inv_n;
  }
  for (auto& s : scale) s = 1.0 / (s + options.l2 + 1e-12);

  LinkPredictor model;
  model.weights.assign(d, 0.0);
  Vector gw(d), trial(d);
  double gb = 0.0;
  double current = objective(model.weights, model.bias);
  double step = 1.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    gradient(model.weights, model.bias, gw, gb);
    double decrease = gb * gb;
    for (std::size_t k = 0; k < d; ++k) decrease += scale[k] * gw[k] * gw[k];
    if (decrease == 0.0) break;
    double next = current;
    double trial_bias = model.bias;
    while (step > 1e-20) {
      for (std::size_t k = 0; k < d; ++k) trial[k] = model.weights[k] - step * scale[k] * gw[k];
      trial_bias = model.bias - step * gb;
      next = objective(trial, trial_bias);
      if (next <= current - 0.5 * step * decrease) break;
      step *= 0.5;
    }
    model.iterations = it + 1;
    if (next > current) break;
    model.weights = trial;
    model.bias = trial_bias;
    const double change = current - next;
    current = next;
    if (change < options.tolerance) break;
    step *= 2.0;
  }
  return model;
}

double auc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) {
    throw Error(ErrorCode::EmptyScores, "auc needs positive and negative scores");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positive.size() + negative.size());
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });

  // Count, per positive, the negatives below it plus half the tied ones.
  double wins = 0.0;
  std::size_t negatives_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos = 0, neg = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].positive ? pos : neg) += 1;
      ++j;
    }
    wins += static_cast<double>(pos) * (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(neg));
    negatives_below += neg;
    i = j;
  }
  return wins / (static_cast<double>(positive.size()) * static_cast<double>(negative.size()));
}

std::vector<Vector> embed_all(const EncoderModel& model, const NodeInputs& inputs,
                              std::size_t threads) {
  const std::size_t n = inputs.rows.size();
  std::vector<Vector> out(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      out[v] = node_embedding(model, inputs, static_cast<NodeId>(v), Side::Focus);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t * chunk < n; ++t) pool.emplace_back(work, t * chunk, std::min(n, (t + 1) * chunk));
  return out;
}

LinkPredictor lr_train(std::span<const Vector> embeddings, std::span<const NodePair> positives,
                       std::span<const NodePair> negatives, const LogisticOptions& options) {
  std::vector<Vector> features;
  std::vector<int> labels;
  features.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) {
    features.push_back(hadamard(embeddings[p.first], embeddings[p.second]));
    labels.push_back(1);
  }
  for (const auto& p : negatives) {
    features.push_back(hadamard(embeddings[p.first], embeddings[p.second]));
    labels.push_back(0);
  }
  return fit_logistic(features, labels, options);
}

EvalReport evaluate(const EncoderModel& model, const EdgeSplit& split, std::size_t threads) {
  const auto started = std::chrono::steady_clock::now();
  const NodeInputs inputs = bind_inputs(model, split.train_graph);
  const auto embeddings = embed_all(model, inputs, threads);

  auto cs_scores = [&](std::span<const NodePair> pairs) {
    std::vector<double> out;
    for (const auto& p : pairs) out.push_back(cs_score(embeddings[p.first], embeddings[p.second]));
    return out;
  };
  const std::string encoder(to_string(model.kind));
  const std::string strategy(to_string(split.strategy));

  EvalReport report;
  report.dataset_fingerprint = fingerprint(split);
  report.split_seed = split.seed;
  report.fraction = split.fraction;
  report.test_positives = split.test_positives.size();
  report.test_negatives = split.test_negatives.size();
  report.entries.push_back(
      {encoder, "cs", strategy, auc(cs_scores(split.test_positives), cs_scores(split.test_negatives))});

  const auto predictor =
      lr_train(embeddings, split.lr_train_positives, split.lr_train_negatives);
  auto lr_scores = [&](std::span<const NodePair> pairs) {
    std::vector<double> out;
    for (const auto& p : pairs) {
      out.push_back(predictor.probability(hadamard(embeddings[p.first], embeddings[p.second])));
    }
    return out;
  };
  report.entries.push_back(
      {encoder, "lr", strategy, auc(lr_scores(split.test_positives), lr_scores(split.test_negatives))});
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string report_to_json(const EvalReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  j["format"] = "textwalk-eval";
  j["version"] = 1;
  j["dataset_fingerprint"] = report.dataset_fingerprint;
  j["split_seed"] = report.split_seed;
  j["fraction"] = report.fraction;
  j["test_positives"] = report.test_positives;
  j["test_negatives"] = report.test_negatives;
  auto& results = j["results"] = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    results.push_back({{"encoder", e.encoder},
                       {"predictor", e.predictor},
                       {"strategy", e.strategy},
                       {"auc", e.auc}});
  }
  if (include_timings) j["seconds"] = report.seconds;
  return j.dump(2) + "\n";
}

namespace {

nlohmann::ordered_json pairs_json(const Graph& g, std::span<const NodePair> pairs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : pairs) arr.push_back({g.key(p.first), g.key(p.second)});
  return arr;
}

}  // namespace

std::string split_to_json(const EdgeSplit& split) {
  const Graph& g = split.train_graph;
  nlohmann::ordered_json j;
  j["format"] = "textwalk-split";
  j["version"] = 1;
  j["strategy"] = std::string(to_string(split.strategy));
  j["fraction"] = split.fraction;
  j["seed"] = split.seed;
  j["train_edges"] = pairs_json(g, split.lr_train_positives);
  j["test_positives"] = pairs_json(g, split.test_positives);
  j["test_negatives"] = pairs_json(g, split.test_negatives);
  j["lr_negatives"] = pairs_json(g, split.lr_train_negatives);
  // One pair per line keeps the file diffable without pretty-printing every token.
  std::string out = "{\n";
  bool first = true;
  for (const auto& [key, value] : j.items()) {
    if (!first) out += ",\n";
    first = false;
    out += "  " + nlohmann::json(key).dump() + ": ";
    if (value.is_array()) {
      out += "[";
      for (std::size_t i = 0; i < value.size(); ++i) out += (i ? ",\n    " : "\n    ") + value[i].dump();
      out += value.empty() ? "]" : "\n  ]";
    } else {
      out += value.dump();
    }
  }
  out += "\n}\n";
  return out;
}

std::string fingerprint(const EdgeSplit& split) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : split_to_json(split)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_split(const EdgeSplit& split, const std::filesystem::path& path) {
  write_text_atomically(path, split_to_json(split));
}

EdgeSplit load_split(const std::filesystem::path& path,
                     const std::unordered_map<std::string, std::string>& descriptors) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadSplitFile, e.what());
  }
  if (j.value("format", "") != "textwalk-split" || j.value("version", 0) != 1) {
    throw Error(ErrorCode::BadSplitFile, "not a textwalk-split v1 file");
  }
  EdgeSplit split;
  try {
    auto strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (!strategy) throw Error(ErrorCode::BadSplitFile, "unknown strategy");
    split.strategy = *strategy;
    split.fraction = j.at("fraction").get<double>();
    split.seed = j.at("seed").get<std::uint64_t>();
    std::vector<KeyedEdge> edges;
    for (const auto& e : j.at("train_edges")) edges.push_back({e.at(0), e.at(1)});
    split.train_graph = Graph::build(edges, descriptors);
    auto read_pairs = [&](const char* field) {
      std::vector<NodePair> out;
      for (const auto& e : j.at(field)) {
        out.push_back({split.train_graph.require(e.at(0).get<std::string>()),
                       split.train_graph.require(e.at(1).get<std::string>())});
      }
      return out;
    };
    split.lr_train_positives = split.train_graph.hierarchy_edges();
    split.test_positives = read_pairs("test_positives");
    split.test_negatives = read_pairs("test_negatives");
    split.lr_train_negatives = read_pairs("lr_negatives");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadSplitFile, e.what());
  }
  return split;
}

}  // namespace textwalk
