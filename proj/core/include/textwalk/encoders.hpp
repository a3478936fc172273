#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textwalk/graph.hpp"
#include "textwalk/matrix.hpp"
#include "textwalk/rng.hpp"

namespace textwalk {

enum class EncoderKind : std::uint32_t { Lookup = 0, Avg = 1, Gru = 2, BiGruMaxRes = 3 };

enum class Side { Focus, Context };

std::string_view to_string(EncoderKind kind);
// Accepts the CLI spellings: lookup, avg, gru, bigru-max-res.
std::optional<EncoderKind> parse_encoder_kind(std::string_view name);

// z = sigmoid(W_z x + U_z h + b_z)
// r = sigmoid(W_r x + U_r h + b_r)
// c = tanh(W_h x + U_h (r * h) + b_h)
// h' = (1 - z) * h + z * c
struct GruCellParams {
  Matrix w_z, w_r, w_h;
  Matrix u_z, u_r, u_h;
  Matrix b_z, b_r, b_h;  // 1 x d

  static constexpr std::size_t kTensorCount = 9;

  static GruCellParams zeros(std::size_t dim);
  // Matrices uniform in [-1/sqrt(d), 1/sqrt(d)], biases zero.
  static GruCellParams random(std::size_t dim, Rng& rng);

  std::array<Matrix*, kTensorCount> tensors();
  std::array<const Matrix*, kTensorCount> tensors() const;
  bool operator==(const GruCellParams&) const = default;
};

// Parameters of one embedding side (f or f').
struct EncoderSide {
  Matrix table;              // |W| x d word rows, or |V| x d node rows for Lookup
  GruCellParams forward;     // Gru and BiGruMaxRes
  GruCellParams backward;    // BiGruMaxRes only
  bool operator==(const EncoderSide&) const = default;
};

struct EncoderModel {
  EncoderKind kind = EncoderKind::Avg;
  std::size_t dim = 0;
  // Words for content encoders, node keys for Lookup; row i of each table.
  std::vector<std::string> vocabulary;
  EncoderSide focus;
  EncoderSide context;
  // Bumped on every optimizer step; invalidates cached forward passes.
  std::uint64_t version = 0;

  EncoderSide& side(Side s) { return s == Side::Focus ? focus : context; }
  const EncoderSide& side(Side s) const { return s == Side::Focus ? focus : context; }

  // Slot layout, per side: table, 9 forward-cell tensors, 9 backward-cell
  // tensors; focus side first. Unused tensors are 0 x 0.
  static constexpr std::size_t kSlotsPerSide = 1 + 2 * GruCellParams::kTensorCount;
  static constexpr std::size_t kSlotCount = 2 * kSlotsPerSide;
  std::array<Matrix*, kSlotCount> parameters();
  std::array<const Matrix*, kSlotCount> parameters() const;

  bool operator==(const EncoderModel& o) const {
    return kind == o.kind && dim == o.dim && vocabulary == o.vocabulary && focus == o.focus &&
           context == o.context;
  }
};

// Tables uniform in [-0.5/d, 0.5/d]; GRU cells as GruCellParams::random.
EncoderModel init_model(EncoderKind kind, std::size_t dim, std::vector<std::string> vocabulary,
                        std::uint64_t seed);
// Vocabulary taken from the graph (node keys for Lookup).
EncoderModel init_model(const Graph& g, EncoderKind kind, std::size_t dim, std::uint64_t seed);

// Per-node input rows into the model's tables: descriptor word indices for
// content encoders, the single node row for Lookup.
struct NodeInputs {
  std::vector<Descriptor> rows;
};

// Maps the graph's nodes onto the model vocabulary by string. Throws
// OutOfVocabulary when a word or node key is unknown to the model.
NodeInputs bind_inputs(const EncoderModel& model, const Graph& g);

Vector encode_avg(std::span<const std::uint32_t> tokens, const Matrix& table);
Vector gru_cell(std::span<const double> x, std::span<const double> h_prev,
                const GruCellParams& params);
Vector encode_gru(std::span<const std::uint32_t> tokens, const Matrix& table,
                  const GruCellParams& cell);

struct MaxPoolOutput {
  Vector value;
  // Per dimension, the token position whose state won; lowest index on ties.
  std::vector<std::uint32_t> argmax;
};
MaxPoolOutput encode_bigru_max_res(std::span<const std::uint32_t> tokens, const Matrix& table,
                                   const GruCellParams& forward, const GruCellParams& backward);

Vector node_embedding(const EncoderModel& model, const NodeInputs& inputs, NodeId v, Side side);

// Everything a backward pass needs from one forward pass.
struct GruStep {
  Vector h_prev, z, r, candidate, h;
};
struct EncodeTrace {
  std::vector<std::uint32_t> tokens;
  std::vector<GruStep> forward;   // position order
  std::vector<GruStep> backward;  // position order (step t saw token t)
  std::vector<std::uint32_t> argmax;
  Vector output;
};

EncodeTrace trace_encode(EncoderKind kind, std::span<const std::uint32_t> tokens,
                         const EncoderSide& params);

struct ModelGradients {
  std::vector<TensorGrad> slots;  // same layout as EncoderModel::parameters()

  static ModelGradients like(const EncoderModel& model);
  TensorGrad& slot(Side side, std::size_t index) {
    return slots[(side == Side::Focus ? 0 : EncoderModel::kSlotsPerSide) + index];
  }
  void clear();
};

// Accumulates d(upstream . output)/d(params) for one traced encode into the
// gradients of `side`.
void backward_trace(EncoderKind kind, const EncodeTrace& trace, const EncoderSide& params,
                    std::span<const double> upstream, ModelGradients& grads, Side side);

// Caches traces of forward passes per (node, side) so gradients can be
// pulled back later. One workspace per worker; never shared.
class EncoderWorkspace {
 public:
  const Vector& forward(const EncoderModel& model, const NodeInputs& inputs, NodeId v, Side side);
  // Throws StaleBackward if (v, side) has no trace for the current model
  // version.
  void backward(const EncoderModel& model, NodeId v, Side side, std::span<const double> upstream,
                ModelGradients& grads) const;
  void clear() { traces_.clear(); }

 private:
  static std::uint64_t key(NodeId v, Side side) {
    return (static_cast<std::uint64_t>(v) << 1) | (side == Side::Context ? 1U : 0U);
  }
  std::uint64_t version_ = 0;
  std::unordered_map<std::uint64_t, EncodeTrace> traces_;
};

void encoder_backward(const EncoderModel& model, const EncoderWorkspace& workspace, NodeId v,
                      Side side, std::span<const double> upstream, ModelGradients& grads);

}  // namespace textwalk
