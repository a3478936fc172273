#include "textwalk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "textwalk/error.hpp"

namespace textwalk {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string hops_text(const std::optional<std::size_t>& hops) {
  return hops ? std::to_string(*hops) : std::string(">") + std::to_string(kHopSearchCap);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

NeighborResult nearest_neighbors(const EncoderModel& model, const NodeInputs& inputs,
                                 const Graph& g, NodeId target, std::size_t top_n) {
  const std::size_t n = inputs.rows.size();
  const Vector t = node_embedding(model, inputs, target, Side::Focus);
  NeighborResult result{target, {}};
  for (NodeId v = 0; v < n; ++v) {
    if (v == target) continue;
    result.neighbors.push_back({v, cosine(t, node_embedding(model, inputs, v, Side::Focus)), {}});
  }
  const std::size_t keep = std::min(top_n, result.neighbors.size());
  std::partial_sort(result.neighbors.begin(), result.neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
                      return a.cosine != b.cosine ? a.cosine > b.cosine : a.node < b.node;
                    });
  result.neighbors.resize(keep);
  for (auto& nb : result.neighbors) nb.hops = hop_distance(g, target, nb.node, kHopSearchCap);
  return result;
}

std::string neighbors_csv(const Graph& g, const NeighborResult& result) {
  std::ostringstream out;
  out << "rank,key,descriptor,cosine,hops\n";
  out << "0," << csv_field(g.key(result.target)) << ',' << csv_field(g.descriptor_text(result.target))
      << ",,\n";
  std::size_t rank = 1;
  for (const auto& nb : result.neighbors) {
    out << rank++ << ',' << csv_field(g.key(nb.node)) << ',' << csv_field(g.descriptor_text(nb.node))
        << ',' << format_double(nb.cosine) << ',' << hops_text(nb.hops) << '\n';
  }
  return out.str();
}

HeatmapRow importance_scores(const EncoderModel& model, const NodeInputs& inputs, NodeId v) {
  if (model.kind != EncoderKind::BiGruMaxRes) {
    throw Error(ErrorCode::UnsupportedEncoder,
                "importance scores need bigru-max-res, got " + std::string(to_string(model.kind)));
  }
  const auto& tokens = inputs.rows.at(v);
  HeatmapRow row{v, std::vector<double>(tokens.size(), 0.0)};
  for (Side side : {Side::Focus, Side::Context}) {
    const auto trace = trace_encode(model.kind, tokens, model.side(side));
    std::vector<double> wins(tokens.size(), 0.0);
    for (auto t : trace.argmax) wins[t] += 1.0;
    const double top = *std::max_element(wins.begin(), wins.end());
    for (std::size_t i = 0; i < wins.size(); ++i) row.scores[i] += 0.5 * wins[i] / top;
  }
  return row;
}

std::string heatmap_csv(const Graph& g, std::span<const HeatmapRow> rows) {
  std::ostringstream out;
  out << "key,position,token,score\n";
  for (const auto& row : rows) {
    const auto& desc = g.descriptor(row.node);
    for (std::size_t i = 0; i < row.scores.size(); ++i) {
      out << csv_field(g.key(row.node)) << ',' << i << ',' << csv_field(g.vocabulary().word(desc[i]))
          << ',' << format_double(row.scores[i]) << '\n';
    }
  }
  return out.str();
}

std::string heatmap_svg(const Graph& g, std::span<const HeatmapRow> rows) {
  constexpr int kCellHeight = 28;
  constexpr int kCharWidth = 9;
  constexpr int kPad = 6;
  int width = 0;
  std::ostringstream body;
  int y = kPad;
  for (const auto& row : rows) {
    int x = kPad;
    const auto& desc = g.descriptor(row.node);
    for (std::size_t i = 0; i < row.scores.size(); ++i) {
      const std::string& word = g.vocabulary().word(desc[i]);
      const int w = static_cast<int>(word.size()) * kCharWidth + 2 * kPad;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - row.scores[i])));
      body << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
           << kCellHeight << "\" fill=\"rgb(255," << shade << ',' << shade << ")\" stroke=\"#888\"/>\n";
      body << "  <text x=\"" << x + kPad << "\" y=\"" << y + kCellHeight - 9
           << "\" font-family=\"monospace\" font-size=\"14\">" << xml_escape(word) << "</text>\n";
      x += w;
    }
    width = std::max(width, x + kPad);
    y += kCellHeight + kPad;
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << y
      << "\">\n"
      << body.str() << "</svg>\n";
  return out.str();
}

std::vector<SimilarityRow> similarity_case(const EncoderModel& model, const NodeInputs& inputs,
                                           const Graph& g, std::span<const NodePair> pairs) {
  std::vector<SimilarityRow> rows;
  for (const auto& p : pairs) {
    const double c = cosine(node_embedding(model, inputs, p.first, Side::Focus),
                            node_embedding(model, inputs, p.second, Side::Focus));
    rows.push_back({p.first, p.second, c, hop_distance(g, p.first, p.second, kHopSearchCap)});
  }
  return rows;
}

std::string similarity_csv(const Graph& g, std::span<const SimilarityRow> rows) {
  std::ostringstream out;
  out << "descriptor_a,descriptor_b,cosine,hops\n";
  for (const auto& r : rows) {
    out << csv_field(g.descriptor_text(r.a)) << ',' << csv_field(g.descriptor_text(r.b)) << ','
        << format_double(r.cosine) << ',' << hops_text(r.hops) << '\n';
  }
  return out.str();
}

}  // namespace textwalk
