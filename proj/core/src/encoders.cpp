#include "textwalk/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "textwalk/error.hpp"

namespace textwalk {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, what);
  }
}

void require_tokens(std::span<const std::uint32_t> tokens, const Matrix& table) {
  if (tokens.empty()) throw Error(ErrorCode::DescriptorEmpty, "no tokens to encode");
  for (auto t : tokens) {
    if (t >= table.rows()) throw Error(ErrorCode::OutOfVocabulary, "row " + std::to_string(t));
  }
}

GruStep cell_forward(std::span<const double> x, std::span<const double> h_prev,
                     const GruCellParams& p) {
  require_finite(x, "gru input");
  require_finite(h_prev, "gru state");
  const std::size_t d = h_prev.size();
  GruStep s;
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.z.assign(p.b_z.flat().begin(), p.b_z.flat().end());
  s.r.assign(p.b_r.flat().begin(), p.b_r.flat().end());
  s.candidate.assign(p.b_h.flat().begin(), p.b_h.flat().end());
  gemv_add(p.w_z, x, s.z);
  gemv_add(p.u_z, h_prev, s.z);
  gemv_add(p.w_r, x, s.r);
  gemv_add(p.u_r, h_prev, s.r);
  Vector reset_state(d);
  for (std::size_t i = 0; i < d; ++i) {
    s.z[i] = sigmoid(s.z[i]);
    s.r[i] = sigmoid(s.r[i]);
    reset_state[i] = s.r[i] * h_prev[i];
  }
  gemv_add(p.w_h, x, s.candidate);
  gemv_add(p.u_h, reset_state, s.candidate);
  s.h.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    s.candidate[i] = std::tanh(s.candidate[i]);
    s.h[i] = (1.0 - s.z[i]) * h_prev[i] + s.z[i] * s.candidate[i];
  }
  return s;
}

// Accumulates parameter gradients for one cell application; adds the input
// gradient to dx and returns the gradient w.r.t. h_prev.
Vector cell_backward(const GruStep& s, std::span<const double> x, const GruCellParams& p,
                     std::span<const double> dh, std::span<TensorGrad> g, std::span<double> dx) {
  const std::size_t d = dh.size();
  Vector d_prev(d), d_z(d), d_r(d), d_cand(d), reset_state(d), d_reset(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    d_prev[i] = dh[i] * (1.0 - s.z[i]);
    d_z[i] = dh[i] * (s.candidate[i] - s.h_prev[i]) * s.z[i] * (1.0 - s.z[i]);
    d_cand[i] = dh[i] * s.z[i] * (1.0 - s.candidate[i] * s.candidate[i]);
    reset_state[i] = s.r[i] * s.h_prev[i];
  }
  for (auto& t : g) t.touch_all();
  // g: w_z w_r w_h u_z u_r u_h b_z b_r b_h
  outer_add(g[2].value, d_cand, x);
  outer_add(g[5].value, d_cand, reset_state);
  gemv_t_add(p.w_h, d_cand, dx);
  gemv_t_add(p.u_h, d_cand, d_reset);
  for (std::size_t i = 0; i < d; ++i) {
    d_r[i] = d_reset[i] * s.h_prev[i] * s.r[i] * (1.0 - s.r[i]);
    d_prev[i] += d_reset[i] * s.r[i];
  }
  outer_add(g[0].value, d_z, x);
  outer_add(g[3].value, d_z, s.h_prev);
  outer_add(g[1].value, d_r, x);
  outer_add(g[4].value, d_r, s.h_prev);
  gemv_t_add(p.w_z, d_z, dx);
  gemv_t_add(p.w_r, d_r, dx);
  gemv_t_add(p.u_z, d_z, d_prev);
  gemv_t_add(p.u_r, d_r, d_prev);
  auto bz = g[6].value.flat(), br = g[7].value.flat(), bh = g[8].value.flat();
  for (std::size_t i = 0; i < d; ++i) {
    bz[i] += d_z[i];
    br[i] += d_r[i];
    bh[i] += d_cand[i];
  }
  return d_prev;
}

std::vector<GruStep> run_gru(std::span<const std::uint32_t> tokens, const Matrix& table,
                             const GruCellParams& cell, bool reverse) {
  const std::size_t n = tokens.size();
  std::vector<GruStep> steps(n);
  Vector h(table.cols(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    steps[t] = cell_forward(table.row(tokens[t]), h, cell);
    h = steps[t].h;
  }
  return steps;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.flat()) x = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Lookup: return "lookup";
    case EncoderKind::Avg: return "avg";
    case EncoderKind::Gru: return "gru";
    case EncoderKind::BiGruMaxRes: return "bigru-max-res";
  }
  return "unknown";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view name) {
  for (auto k : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::Gru, EncoderKind::BiGruMaxRes}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

GruCellParams GruCellParams::zeros(std::size_t dim) {
  GruCellParams p;
  for (auto* m : p.tensors()) *m = Matrix(dim, dim);
  p.b_z = p.b_r = p.b_h = Matrix(1, dim);
  return p;
}

GruCellParams GruCellParams::random(std::size_t dim, Rng& rng) {
  GruCellParams p = zeros(dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Matrix* m : {&p.w_z, &p.w_r, &p.w_h, &p.u_z, &p.u_r, &p.u_h}) {
    *m = uniform_matrix(dim, dim, bound, rng);
  }
  return p;
}

std::array<Matrix*, GruCellParams::kTensorCount> GruCellParams::tensors() {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

std::array<const Matrix*, GruCellParams::kTensorCount> GruCellParams::tensors() const {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

std::array<Matrix*, EncoderModel::kSlotCount> EncoderModel::parameters() {
  std::array<Matrix*, kSlotCount> out{};
  std::size_t i = 0;
  for (EncoderSide* s : {&focus, &context}) {
    out[i++] = &s->table;
    for (auto* m : s->forward.tensors()) out[i++] = m;
    for (auto* m : s->backward.tensors()) out[i++] = m;
  }
  return out;
}

std::array<const Matrix*, EncoderModel::kSlotCount> EncoderModel::parameters() const {
  std::array<const Matrix*, kSlotCount> out{};
  std::size_t i = 0;
  for (const EncoderSide* s : {&focus, &context}) {
    out[i++] = &s->table;
    for (auto* m : s->forward.tensors()) out[i++] = m;
    for (auto* m : s->backward.tensors()) out[i++] = m;
  }
  return out;
}

EncoderModel init_model(EncoderKind kind, std::size_t dim, std::vector<std::string> vocabulary,
                        std::uint64_t seed) {
  EncoderModel m;
  m.kind = kind;
  m.dim = dim;
  m.vocabulary = std::move(vocabulary);
  Rng rng(seed);
  const double bound = 0.5 / static_cast<double>(dim);
  m.focus.table = uniform_matrix(m.vocabulary.size(), dim, bound, rng);
  m.context.table = uniform_matrix(m.vocabulary.size(), dim, bound, rng);
  for (EncoderSide* s : {&m.focus, &m.context}) {
    if (kind == EncoderKind::Gru || kind == EncoderKind::BiGruMaxRes) {
      s->forward = GruCellParams::random(dim, rng);
    }
    if (kind == EncoderKind::BiGruMaxRes) s->backward = GruCellParams::random(dim, rng);
  }
  return m;
}

EncoderModel init_model(const Graph& g, EncoderKind kind, std::size_t dim, std::uint64_t seed) {
  std::vector<std::string> vocabulary;
  if (kind == EncoderKind::Lookup) {
    for (NodeId v = 0; v < g.node_count(); ++v) vocabulary.push_back(g.key(v));
  } else {
    vocabulary = g.vocabulary().words();
  }
  return init_model(kind, dim, std::move(vocabulary), seed);
}

NodeInputs bind_inputs(const EncoderModel& model, const Graph& g) {
  std::unordered_map<std::string_view, std::uint32_t> index;
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    index.emplace(model.vocabulary[i], static_cast<std::uint32_t>(i));
  }
  auto lookup = [&index](const std::string& s) {
    auto it = index.find(s);
    if (it == index.end()) throw Error(ErrorCode::OutOfVocabulary, s);
    return it->second;
  };
  NodeInputs inputs;
  inputs.rows.resize(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (model.kind == EncoderKind::Lookup) {
      inputs.rows[v] = {lookup(g.key(v))};
    } else {
      for (auto t : g.descriptor(v)) inputs.rows[v].push_back(lookup(g.vocabulary().word(t)));
    }
  }
  return inputs;
}

Vector encode_avg(std::span<const std::uint32_t> tokens, const Matrix& table) {
  require_tokens(tokens, table);
  Vector out(table.cols(), 0.0);
  for (auto t : tokens) {
    auto row = table.row(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : out) x *= inv;
  return out;
}

Vector gru_cell(std::span<const double> x, std::span<const double> h_prev,
                const GruCellParams& params) {
  return cell_forward(x, h_prev, params).h;
}

Vector encode_gru(std::span<const std::uint32_t> tokens, const Matrix& table,
                  const GruCellParams& cell) {
  require_tokens(tokens, table);
  return run_gru(tokens, table, cell, false).back().h;
}

MaxPoolOutput encode_bigru_max_res(std::span<const std::uint32_t> tokens, const Matrix& table,
                                   const GruCellParams& forward, const GruCellParams& backward) {
  EncoderSide side;
  side.table = table;
  side.forward = forward;
  side.backward = backward;
  auto trace = trace_encode(EncoderKind::BiGruMaxRes, tokens, side);
  return {std::move(trace.output), std::move(trace.argmax)};
}

EncodeTrace trace_encode(EncoderKind kind, std::span<const std::uint32_t> tokens,
                         const EncoderSide& params) {
  require_tokens(tokens, params.table);
  EncodeTrace tr;
  tr.tokens.assign(tokens.begin(), tokens.end());
  const Matrix& table = params.table;
  const std::size_t d = table.cols();
  switch (kind) {
    case EncoderKind::Lookup: {
      auto row = table.row(tokens.front());
      tr.output.assign(row.begin(), row.end());
      break;
    }
    case EncoderKind::Avg:
      tr.output = encode_avg(tokens, table);
      break;
    case EncoderKind::Gru:
      tr.forward = run_gru(tokens, table, params.forward, false);
      tr.output = tr.forward.back().h;
      break;
    case EncoderKind::BiGruMaxRes: {
      tr.forward = run_gru(tokens, table, params.forward, false);
      tr.backward = run_gru(tokens, table, params.backward, true);
      tr.output.assign(d, 0.0);
      tr.argmax.assign(d, 0);
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        auto x = table.row(tokens[t]);
        for (std::size_t j = 0; j < d; ++j) {
          const double state = tr.forward[t].h[j] + tr.backward[t].h[j] + x[j];
          if (t == 0 || state > tr.output[j]) {
            tr.output[j] = state;
            tr.argmax[j] = static_cast<std::uint32_t>(t);
          }
        }
      }
      break;
    }
  }
  return tr;
}

ModelGradients ModelGradients::like(const EncoderModel& model) {
  ModelGradients g;
  for (const Matrix* m : model.parameters()) g.slots.emplace_back(m->rows(), m->cols());
  return g;
}

void ModelGradients::clear() {
  for (auto& s : slots) s.clear();
}

void backward_trace(EncoderKind kind, const EncodeTrace& trace, const EncoderSide& params,
                    std::span<const double> upstream, ModelGradients& grads, Side side) {
  const std::size_t d = upstream.size();
  const std::size_t n = trace.tokens.size();
  TensorGrad& table = grads.slot(side, 0);
  auto add_row = [&table](std::uint32_t row, std::span<const double> v, double scale) {
    auto out = table.touch(row);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += scale * v[i];
  };
  const std::span<TensorGrad> fwd_grads(&grads.slot(side, 1), GruCellParams::kTensorCount);
  const std::span<TensorGrad> bwd_grads(&grads.slot(side, 1 + GruCellParams::kTensorCount),
                                        GruCellParams::kTensorCount);

  switch (kind) {
    case EncoderKind::Lookup:
      add_row(trace.tokens.front(), upstream, 1.0);
      return;
    case EncoderKind::Avg:
      for (auto t : trace.tokens) add_row(t, upstream, 1.0 / static_cast<double>(n));
      return;
    case EncoderKind::Gru: {
      Vector dh(upstream.begin(), upstream.end());
      Vector dx(d);
      for (std::size_t t = n; t-- > 0;) {
        std::fill(dx.begin(), dx.end(), 0.0);
        dh = cell_backward(trace.forward[t], params.table.row(trace.tokens[t]), params.forward, dh,
                           fwd_grads, dx);
        add_row(trace.tokens[t], dx, 1.0);
      }
      return;
    }
    case EncoderKind::BiGruMaxRes: {
      std::vector<Vector> d_state(n, Vector(d, 0.0));
      for (std::size_t j = 0; j < d; ++j) d_state[trace.argmax[j]][j] += upstream[j];
      Vector dx(d);
      // Forward chain: state t feeds t+1, so walk positions downward.
      Vector carry(d, 0.0);
      for (std::size_t t = n; t-- > 0;) {
        Vector dh(d);
        for (std::size_t i = 0; i < d; ++i) dh[i] = d_state[t][i] + carry[i];
        std::fill(dx.begin(), dx.end(), 0.0);
        carry = cell_backward(trace.forward[t], params.table.row(trace.tokens[t]), params.forward,
                              dh, fwd_grads, dx);
        add_row(trace.tokens[t], dx, 1.0);
      }
      // Backward chain: state t feeds t-1, so walk positions upward.
      std::fill(carry.begin(), carry.end(), 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        Vector dh(d);
        for (std::size_t i = 0; i < d; ++i) dh[i] = d_state[t][i] + carry[i];
        // Residual path.
        std::copy(d_state[t].begin(), d_state[t].end(), dx.begin());
        carry = cell_backward(trace.backward[t], params.table.row(trace.tokens[t]),
                              params.backward, dh, bwd_grads, dx);
        add_row(trace.tokens[t], dx, 1.0);
      }
      return;
    }
  }
}

Vector node_embedding(const EncoderModel& model, const NodeInputs& inputs, NodeId v, Side side) {
  const EncoderSide& s = model.side(side);
  const auto& rows = inputs.rows.at(v);
  switch (model.kind) {
    case EncoderKind::Lookup: {
      auto row = s.table.row(rows.front());
      return Vector(row.begin(), row.end());
    }
    case EncoderKind::Avg: return encode_avg(rows, s.table);
    case EncoderKind::Gru: return encode_gru(rows, s.table, s.forward);
    case EncoderKind::BiGruMaxRes:
      return trace_encode(EncoderKind::BiGruMaxRes, rows, s).output;
  }
  return {};
}

const Vector& EncoderWorkspace::forward(const EncoderModel& model, const NodeInputs& inputs,
                                        NodeId v, Side side) {
  if (model.version != version_) {
    traces_.clear();
    version_ = model.version;
  }
  auto [it, inserted] = traces_.try_emplace(key(v, side));
  if (inserted) it->second = trace_encode(model.kind, inputs.rows.at(v), model.side(side));
  return it->second.output;
}

void EncoderWorkspace::backward(const EncoderModel& model, NodeId v, Side side,
                                std::span<const double> upstream, ModelGradients& grads) const {
  auto it = traces_.find(key(v, side));
  if (model.version != version_ || it == traces_.end()) {
    throw Error(ErrorCode::StaleBackward, "no forward pass cached for node " + std::to_string(v));
  }
  backward_trace(model.kind, it->second, model.side(side), upstream, grads, side);
}

void encoder_backward(const EncoderModel& model, const EncoderWorkspace& workspace, NodeId v,
                      Side side, std::span<const double> upstream, ModelGradients& grads) {
  workspace.backward(model, v, side, upstream, grads);
}

}  // namespace textwalk
