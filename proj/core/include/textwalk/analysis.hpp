#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textwalk/encoders.hpp"
#include "textwalk/graph.hpp"

namespace textwalk {

// Hop distances are searched up to this many edges; farther pairs report
// no distance.
inline constexpr std::size_t kHopSearchCap = 64;

struct Neighbor {
  NodeId node;
  double cosine;
  std::optional<std::size_t> hops;
};

struct NeighborResult {
  NodeId target;
  std::vector<Neighbor> neighbors;  // cosine non-increasing, ties by node id
};

// Raw cosine between focus embeddings (no clamping).
double cosine(std::span<const double> a, std::span<const double> b);

NeighborResult nearest_neighbors(const EncoderModel& model, const NodeInputs& inputs,
                                 const Graph& g, NodeId target, std::size_t top_n);

// rank,key,descriptor,cosine,hops
std::string neighbors_csv(const Graph& g, const NeighborResult& result);

struct HeatmapRow {
  NodeId node;
  std::vector<double> scores;  // one per descriptor token, in [0, 1]
};

// Per side, counts how many max-pooled dimensions each token position wins,
// divides by that side's largest count, then averages focus and context.
// Throws UnsupportedEncoder unless the model is BiGruMaxRes.
HeatmapRow importance_scores(const EncoderModel& model, const NodeInputs& inputs, NodeId v);

// key,position,token,score
std::string heatmap_csv(const Graph& g, std::span<const HeatmapRow> rows);
// One row of shaded cells per node, darker for more important tokens.
std::string heatmap_svg(const Graph& g, std::span<const HeatmapRow> rows);

struct SimilarityRow {
  NodeId a;
  NodeId b;
  double cosine;
  std::optional<std::size_t> hops;
};

std::vector<SimilarityRow> similarity_case(const EncoderModel& model, const NodeInputs& inputs,
                                           const Graph& g, std::span<const NodePair> pairs);

// descriptor_a,descriptor_b,cosine,hops
std::string similarity_csv(const Graph& g, std::span<const SimilarityRow> rows);

}  // namespace textwalk
