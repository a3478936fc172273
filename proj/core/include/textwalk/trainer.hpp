#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "textwalk/encoders.hpp"
#include "textwalk/graph.hpp"
#include "textwalk/optim.hpp"
#include "textwalk/rng.hpp"
#include "textwalk/walks.hpp"

namespace textwalk {

struct TrainConfig {
  std::size_t dim = 30;
  std::size_t batch_size = 128;
  std::size_t negatives_per_pair = 2;
  std::size_t epochs = 1;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  WalkConfig walk;
  // Used for walk generation, whose output does not depend on it. Batches
  // are always processed by a single writer.
  std::size_t threads = 1;

  std::vector<std::string> validate() const;
};

// p(u | v) = exp(f'(u) . f(v)) / sum over u' in nodes of exp(f'(u') . f(v)).
// Exhaustive; meant for small graphs and tests.
double softmax_prob(const EncoderModel& model, const NodeInputs& inputs, NodeId u, NodeId v,
                    std::span<const NodeId> nodes);

// `count` nodes drawn uniformly (with replacement) from [0, node_count)
// minus `exclude`. Throws NotEnoughNodes when nothing can be drawn.
std::vector<NodeId> sample_negatives(Rng& rng, std::size_t node_count, std::size_t count,
                                     std::span<const NodeId> exclude);

struct PairLoss {
  double loss = 0.0;
  Vector grad_focus;
  Vector grad_context;
  std::vector<Vector> grad_negatives;
};

// -log s(f'_u . f_v) - sum_n log s(-f'_n . f_v) with analytic gradients.
PairLoss pair_loss(std::span<const double> focus, std::span<const double> context,
                   std::span<const Vector> negatives);

struct BatchReport {
  double mean_loss = 0.0;
  // Per parameter slot, rows that received gradient this batch.
  std::vector<std::vector<std::uint32_t>> touched_rows;
};

// Owns a model while it is being optimized. One step = one batch of pairs,
// gradients summed over pairs, one Adam update.
class Trainer {
 public:
  Trainer(const Graph& g, EncoderModel model, const TrainConfig& cfg);

  BatchReport step(std::span<const ContextPair> batch, Rng& rng);

  const EncoderModel& model() const noexcept { return model_; }
  EncoderModel release() { return std::move(model_); }

 private:
  void accumulate(std::span<const NodeId> nodes, Side side,
                  const std::vector<Vector>& upstream);

  const Graph* graph_;
  TrainConfig cfg_;
  EncoderModel model_;
  NodeInputs inputs_;
  AdamState adam_;
  ModelGradients grads_;
  EncoderWorkspace workspace_;
};

struct TrainStats {
  std::size_t walk_count = 0;
  std::size_t pair_count = 0;
  std::size_t batch_count = 0;
  std::vector<double> batch_losses;
  double final_mean_loss = 0.0;  // mean over the last 10% of batches
  double wall_seconds = 0.0;
};

struct TrainResult {
  EncoderModel model;
  TrainStats stats;
};

// Walks, pairs, one seeded shuffle per epoch, batches. Requires a connected
// graph.
TrainResult train(const Graph& g, EncoderKind kind, const TrainConfig& cfg);
TrainResult train(const Graph& g, EncoderModel initial, const TrainConfig& cfg);

// JSON manifest with every config field, seed, counts, wall time and final
// mean loss.
std::string train_manifest(const TrainConfig& cfg, EncoderKind kind, const TrainStats& stats);

}  // namespace textwalk
