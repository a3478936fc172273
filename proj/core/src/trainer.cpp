#include "textwalk/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "textwalk/error.hpp"
#include "textwalk/log.hpp"

namespace textwalk {

namespace {

double log_sigmoid(double x) {
  // log s(x) = -softplus(-x)
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

enum StreamTag : std::uint64_t { kInit = 1, kWalks = 2, kShuffle = 3, kNegatives = 4 };

}  // namespace

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> problems = walk.validate();
  if (dim < 1) problems.push_back("dim must be >= 1");
  if (batch_size < 1) problems.push_back("batch must be >= 1");
  if (epochs < 1) problems.push_back("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    problems.push_back("learning-rate must be > 0");
  }
  if (threads < 1) problems.push_back("threads must be >= 1");
  return problems;
}

double softmax_prob(const EncoderModel& model, const NodeInputs& inputs, NodeId u, NodeId v,
                    std::span<const NodeId> nodes) {
  const Vector focus = node_embedding(model, inputs, v, Side::Focus);
  std::vector<double> logits;
  logits.reserve(nodes.size());
  double target = 0.0;
  for (NodeId w : nodes) {
    const double s = dot(node_embedding(model, inputs, w, Side::Context), focus);
    logits.push_back(s);
    if (w == u) target = s;
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double s : logits) total += std::exp(s - shift);
  return std::exp(target - shift) / total;
}

std::vector<NodeId> sample_negatives(Rng& rng, std::size_t node_count, std::size_t count,
                                     std::span<const NodeId> exclude) {
  std::vector<NodeId> excluded(exclude.begin(), exclude.end());
  std::sort(excluded.begin(), excluded.end());
  excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
  std::erase_if(excluded, [node_count](NodeId v) { return v >= node_count; });
  if (count > 0 && excluded.size() >= node_count) {
    throw Error(ErrorCode::NotEnoughNodes, std::to_string(node_count) + " nodes, " +
                                               std::to_string(excluded.size()) + " excluded");
  }
  std::vector<NodeId> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto v = static_cast<NodeId>(rng.below(node_count));
    if (!std::binary_search(excluded.begin(), excluded.end(), v)) out.push_back(v);
  }
  return out;
}

PairLoss pair_loss(std::span<const double> focus, std::span<const double> context,
                   std::span<const Vector> negatives) {
  const std::size_t d = focus.size();
  PairLoss out;
  out.grad_focus.assign(d, 0.0);
  const double s_pos = dot(context, focus);
  out.loss = -log_sigmoid(s_pos);
  const double g_pos = sigmoid(s_pos) - 1.0;
  axpy(g_pos, context, out.grad_focus);
  out.grad_context.assign(d, 0.0);
  axpy(g_pos, focus, out.grad_context);
  for (const auto& neg : negatives) {
    const double s_neg = dot(neg, focus);
    out.loss -= log_sigmoid(-s_neg);
    const double g_neg = sigmoid(s_neg);
    axpy(g_neg, neg, out.grad_focus);
    Vector gn(d, 0.0);
    axpy(g_neg, focus, gn);
    out.grad_negatives.push_back(std::move(gn));
  }
  return out;
}

Trainer::Trainer(const Graph& g, EncoderModel model, const TrainConfig& cfg)
    : graph_(&g),
      cfg_(cfg),
      model_(std::move(model)),
      inputs_(bind_inputs(model_, g)),
      adam_(AdamState::like(std::as_const(model_).parameters())),
      grads_(ModelGradients::like(model_)) {}

void Trainer::accumulate(std::span<const NodeId> nodes, Side side,
                         const std::vector<Vector>& upstream) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    workspace_.backward(model_, nodes[i], side, upstream[i], grads_);
  }
}

BatchReport Trainer::step(std::span<const ContextPair> batch, Rng& rng) {
  const std::size_t d = model_.dim;
  const std::size_t n = graph_->node_count();

  // Unique nodes per side, in first-appearance order.
  std::vector<NodeId> focus_nodes, context_nodes;
  std::unordered_map<NodeId, std::size_t> focus_slot, context_slot;
  auto slot_of = [](NodeId v, std::vector<NodeId>& nodes,
                    std::unordered_map<NodeId, std::size_t>& slots) {
    auto [it, inserted] = slots.try_emplace(v, nodes.size());
    if (inserted) nodes.push_back(v);
    return it->second;
  };

  struct Row {
    std::size_t focus, context;
    std::vector<std::size_t> negatives;
  };
  std::vector<Row> rows;
  rows.reserve(batch.size());
  for (const auto& pair : batch) {
    Row row{slot_of(pair.focus, focus_nodes, focus_slot),
            slot_of(pair.context, context_nodes, context_slot),
            {}};
    const NodeId exclude[2] = {pair.focus, pair.context};
    for (NodeId neg : sample_negatives(rng, n, cfg_.negatives_per_pair, exclude)) {
      row.negatives.push_back(slot_of(neg, context_nodes, context_slot));
    }
    rows.push_back(std::move(row));
  }

  std::vector<Vector> focus_vecs, context_vecs;
  for (NodeId v : focus_nodes) focus_vecs.push_back(workspace_.forward(model_, inputs_, v, Side::Focus));
  for (NodeId v : context_nodes) {
    context_vecs.push_back(workspace_.forward(model_, inputs_, v, Side::Context));
  }

  std::vector<Vector> focus_up(focus_nodes.size(), Vector(d, 0.0));
  std::vector<Vector> context_up(context_nodes.size(), Vector(d, 0.0));
  double total_loss = 0.0;
  std::vector<Vector> negs;
  for (const auto& row : rows) {
    negs.clear();
    for (auto k : row.negatives) negs.push_back(context_vecs[k]);
    const PairLoss pl = pair_loss(focus_vecs[row.focus], context_vecs[row.context], negs);
    if (!std::isfinite(pl.loss)) throw Error(ErrorCode::NonFinite, "pair loss");
    total_loss += pl.loss;
    axpy(1.0, pl.grad_focus, focus_up[row.focus]);
    axpy(1.0, pl.grad_context, context_up[row.context]);
    for (std::size_t k = 0; k < row.negatives.size(); ++k) {
      axpy(1.0, pl.grad_negatives[k], context_up[row.negatives[k]]);
    }
  }

  accumulate(focus_nodes, Side::Focus, focus_up);
  accumulate(context_nodes, Side::Context, context_up);

  BatchReport report;
  report.mean_loss = batch.empty() ? 0.0 : total_loss / static_cast<double>(batch.size());
  for (const auto& s : grads_.slots) report.touched_rows.push_back(s.touched_rows);

  auto params = model_.parameters();
  adam_step(adam_, params, grads_.slots, cfg_.learning_rate);
  ++model_.version;
  return report;
}

TrainResult train(const Graph& g, EncoderKind kind, const TrainConfig& cfg) {
  return train(g, init_model(g, kind, cfg.dim, Rng::stream(cfg.seed, kInit).next()), cfg);
}

TrainResult train(const Graph& g, EncoderModel initial, const TrainConfig& cfg) {
  if (auto problems = cfg.validate(); !problems.empty()) {
    throw Error(ErrorCode::InvalidConfig, problems.front());
  }
  const auto started = std::chrono::steady_clock::now();
  const TransitionTables tables = build_alias_tables(g, cfg.walk);
  const auto walks = generate_walks(g, tables, cfg.walk, Rng::stream(cfg.seed, kWalks).next(),
                                    cfg.threads);
  std::vector<ContextPair> pairs = extract_pairs(walks, cfg.walk.window);
  log().info("{} walks, {} pairs", walks.size(), pairs.size());

  TrainResult result;
  result.stats.walk_count = walks.size();
  result.stats.pair_count = pairs.size();

  Trainer trainer(g, std::move(initial), cfg);
  Rng negatives = Rng::stream(cfg.seed, kNegatives);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffler = Rng::stream(cfg.seed, kShuffle, epoch);
    shuffler.shuffle(std::span<ContextPair>(pairs));
    for (std::size_t begin = 0; begin < pairs.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(pairs.size(), begin + cfg.batch_size);
      const auto report = trainer.step(std::span(pairs).subspan(begin, end - begin), negatives);
      result.stats.batch_losses.push_back(report.mean_loss);
      if (result.stats.batch_losses.size() % 1000 == 0) {
        log().debug("batch {} loss {:.4f}", result.stats.batch_losses.size(), report.mean_loss);
      }
    }
  }
  const auto& losses = result.stats.batch_losses;
  result.stats.batch_count = losses.size();
  if (!losses.empty()) {
    const std::size_t tail = std::max<std::size_t>(1, losses.size() / 10);
    double sum = 0.0;
    for (std::size_t i = losses.size() - tail; i < losses.size(); ++i) sum += losses[i];
    result.stats.final_mean_loss = sum / static_cast<double>(tail);
  }
  result.model = trainer.release();
  result.model.version = 0;
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string train_manifest(const TrainConfig& cfg, EncoderKind kind, const TrainStats& stats) {
  nlohmann::ordered_json j;
  j["encoder"] = std::string(to_string(kind));
  j["dim"] = cfg.dim;
  j["batch_size"] = cfg.batch_size;
  j["negatives_per_pair"] = cfg.negatives_per_pair;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["seed"] = cfg.seed;
  j["walk"] = {{"p", cfg.walk.p},
               {"q", cfg.walk.q},
               {"walks_per_node", cfg.walk.walks_per_node},
               {"walk_length", cfg.walk.walk_length},
               {"window", cfg.walk.window}};
  j["threads"] = cfg.threads;
  j["walk_count"] = stats.walk_count;
  j["pair_count"] = stats.pair_count;
  j["batch_count"] = stats.batch_count;
  j["final_mean_loss"] = stats.final_mean_loss;
  j["wall_seconds"] = stats.wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace textwalk
