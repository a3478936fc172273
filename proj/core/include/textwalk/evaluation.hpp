#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textwalk/encoders.hpp"
#include "textwalk/graph.hpp"

namespace textwalk {

enum class NegativeStrategy { Random, CloseProximity };

std::string_view to_string(NegativeStrategy s);
// random | close-proximity
std::optional<NegativeStrategy> parse_strategy(std::string_view name);

// Ancestor/descendant checks give up beyond this many directed hops.
inline constexpr std::size_t kRelativeDepthCap = 10;

struct EdgeSplit {
  Graph train_graph;
  std::vector<NodePair> test_positives;  // removed (child, parent) edges
  std::vector<NodePair> test_negatives;
  std::vector<NodePair> lr_train_positives;  // edges of train_graph
  std::vector<NodePair> lr_train_negatives;
  NegativeStrategy strategy = NegativeStrategy::Random;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

struct RemovedEdges {
  Graph train_graph;
  std::vector<NodePair> removed;
};

// Removes floor(fraction * |E|) edges, all outside a seeded random spanning
// tree, so the remaining graph stays connected. Throws SplitInfeasible with
// the achievable count when too few non-tree edges exist.
RemovedEdges split_edges(const Graph& g, double fraction, std::uint64_t seed);

// Distinct unordered non-edges of g, as (smaller id, larger id).
std::vector<NodePair> sample_random_negatives(const Graph& g, std::size_t count,
                                              std::uint64_t seed);

// Hard negatives (v, u): u is a hierarchy child of an ancestor 2-5 directed
// hops above v, is not adjacent to v and not an ancestor or descendant of v.
// Foci are visited in a seeded order, repeatedly, until `count` distinct
// pairs exist; the result is a uniform subsample of that pool.
std::vector<NodePair> sample_close_proximity_negatives(const Graph& g, std::size_t count,
                                                       std::uint64_t seed);

// Full link-prediction dataset: edge removal plus test and LR-train negatives
// drawn from one pool so they are disjoint.
EdgeSplit build_split(const Graph& g, double fraction, NegativeStrategy strategy,
                      std::uint64_t seed);

// max(0, cos(a, b)). Throws ZeroVector.
double cs_score(std::span<const double> a, std::span<const double> b);

std::vector<double> hadamard(std::span<const double> a, std::span<const double> b);

struct LogisticOptions {
  double l2 = 1e-4;
  double tolerance = 1e-7;  // stop when the objective changes less than this
  std::size_t max_iterations = 5000;
};

// Logistic regression on Hadamard features, trained by full-batch gradient
// descent with backtracking on
//   mean(log(1 + e^z) - y z) + l2/2 |w|^2,  z = w.x + b.
struct LinkPredictor {
  Vector weights;
  double bias = 0.0;
  std::size_t iterations = 0;

  double probability(std::span<const double> features) const;
};

LinkPredictor fit_logistic(std::span<const Vector> features, std::span<const int> labels,
                           const LogisticOptions& options = {});

// Mann-Whitney: (#{p > n} + 0.5 #{p == n}) / (|pos| |neg|). Throws EmptyScores.
double auc(std::span<const double> positive, std::span<const double> negative);

// Focus-side embeddings of every node.
std::vector<Vector> embed_all(const EncoderModel& model, const NodeInputs& inputs,
                              std::size_t threads = 1);

LinkPredictor lr_train(std::span<const Vector> embeddings, std::span<const NodePair> positives,
                       std::span<const NodePair> negatives, const LogisticOptions& options = {});

struct AucEntry {
  std::string encoder;
  std::string predictor;  // cs | lr
  std::string strategy;
  double auc = 0.0;
};

struct EvalReport {
  std::vector<AucEntry> entries;
  std::string dataset_fingerprint;
  std::uint64_t split_seed = 0;
  double fraction = 0.0;
  std::size_t test_positives = 0;
  std::size_t test_negatives = 0;
  double seconds = 0.0;  // only serialized when asked for
};

// Scores the split's test pairs with CS and with LR trained on the split's
// LR sets. `model` must have been trained on split.train_graph.
EvalReport evaluate(const EncoderModel& model, const EdgeSplit& split, std::size_t threads = 1);

// Fixed field names and order, so two reports diff cleanly.
std::string report_to_json(const EvalReport& report, bool include_timings = false);

// Header (format, strategy, fraction, seed), then train_edges, test_positives,
// test_negatives, lr_negatives as lists of [key, key].
std::string split_to_json(const EdgeSplit& split);
void save_split(const EdgeSplit& split, const std::filesystem::path& path);
// Rebuilds the split against descriptor text; train graph ids follow the
// order of train_edges.
EdgeSplit load_split(const std::filesystem::path& path,
                     const std::unordered_map<std::string, std::string>& descriptors);

// FNV-1a of the serialized split.
std::string fingerprint(const EdgeSplit& split);

}  // namespace textwalk
