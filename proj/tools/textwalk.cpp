// textwalk: synth, split, init, train, walks, eval, neighbors, heatmap.
//
// Every failure ends the process with one stderr line
//   error: <Code>: <detail>
// and a nonzero exit status. Outputs are written atomically.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "textwalk/analysis.hpp"
#include "textwalk/atomic_file.hpp"
#include "textwalk/error.hpp"
#include "textwalk/evaluation.hpp"
#include "textwalk/fixtures.hpp"
#include "textwalk/log.hpp"
#include "textwalk/model_io.hpp"
#include "textwalk/trainer.hpp"
#include "textwalk/walks.hpp"

namespace fs = std::filesystem;
using namespace textwalk;

namespace {

// Where a command gets its graph: a split file's training graph, or edges.
struct GraphSource {
  std::string edges;
  std::string split;
  std::string descriptors;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--edges", edges, "child<TAB>parent file");
    cmd.add_option("--split", split, "split file; its training graph is used");
    cmd.add_option("--descriptors", descriptors, "key<TAB>text file")->required();
  }

  void check(std::vector<std::string>& problems) const {
    if (edges.empty() == split.empty()) problems.push_back("exactly one of --edges or --split is required");
  }

  Graph load() const {
    if (!split.empty()) return load_split(split, read_descriptors(descriptors)).train_graph;
    return load_graph(edges, descriptors);
  }
};

struct Options {
  GraphSource source;
  std::string split_path;  // eval reads a split, not a graph
  std::string model;
  std::string out;
  std::string svg;
  std::string encoder = "bigru-max-res";
  std::string strategy = "close-proximity";
  double fraction = 0.15;
  std::uint64_t seed = 0;
  bool deterministic = true;
  bool timings = false;
  std::size_t top = 10;
  std::vector<std::string> nodes;
  TrainConfig train;
  FixtureSpec fixture;
};

[[noreturn]] void fail_config(const std::vector<std::string>& problems) {
  std::string joined;
  for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
  throw Error(ErrorCode::InvalidConfig, joined);
}

EncoderKind encoder_of(const Options& o, std::vector<std::string>& problems) {
  const auto kind = parse_encoder_kind(o.encoder);
  if (!kind) problems.push_back("unknown encoder '" + o.encoder + "'");
  return kind.value_or(EncoderKind::Avg);
}

// Writes to --out, or stdout when no path is given.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_atomically(out, text);
  }
}

void add_walk_options(CLI::App& cmd, WalkConfig& w) {
  cmd.add_option("--p", w.p, "return parameter")->capture_default_str();
  cmd.add_option("--q", w.q, "in-out parameter")->capture_default_str();
  cmd.add_option("--walks-per-node", w.walks_per_node)->capture_default_str();
  cmd.add_option("--walk-length", w.walk_length, "nodes per walk")->capture_default_str();
  cmd.add_option("--window", w.window, "context window in nodes")->capture_default_str();
}

void run_synth(const Options& o) {
  if (auto problems = o.fixture.validate(); !problems.empty()) fail_config(problems);
  const auto fx = generate_fixture(o.fixture);
  fs::create_directories(o.out);
  fx.write(o.out);
  log().info("wrote {} nodes, {} edges to {}", fx.manifest.node_count, fx.manifest.edge_count, o.out);
}

void run_split(const Options& o) {
  std::vector<std::string> problems;
  o.source.check(problems);
  const auto strategy = parse_strategy(o.strategy);
  if (!strategy) problems.push_back("unknown strategy '" + o.strategy + "'");
  if (!(o.fraction > 0.0 && o.fraction < 1.0)) problems.push_back("fraction must be in (0, 1)");
  if (!problems.empty()) fail_config(problems);
  const auto split = build_split(o.source.load(), o.fraction, *strategy, o.seed);
  save_split(split, o.out);
}

void run_init(const Options& o) {
  std::vector<std::string> problems;
  o.source.check(problems);
  const auto kind = encoder_of(o, problems);
  if (o.train.dim < 1) problems.push_back("dim must be >= 1");
  if (!problems.empty()) fail_config(problems);
  save_model(init_model(o.source.load(), kind, o.train.dim, o.seed), o.out);
}

void run_train(Options o) {
  std::vector<std::string> problems = o.train.validate();
  o.source.check(problems);
  const auto kind = encoder_of(o, problems);
  if (!problems.empty()) fail_config(problems);
  if (!o.deterministic) log().warn("parallel training is not available; training deterministically");
  o.train.seed = o.seed;
  const auto result = train(o.source.load(), kind, o.train);
  save_model(result.model, o.out);
  write_text_atomically(o.out + ".manifest.json", train_manifest(o.train, kind, result.stats));
  log().info("{} pairs, final mean loss {:.4f}", result.stats.pair_count, result.stats.final_mean_loss);
}

void run_walks(const Options& o) {
  std::vector<std::string> problems = o.train.walk.validate();
  o.source.check(problems);
  if (o.train.threads < 1) problems.push_back("threads must be >= 1");
  if (!problems.empty()) fail_config(problems);
  const Graph g = o.source.load();
  const auto walks = generate_walks(g, build_alias_tables(g, o.train.walk), o.train.walk, o.seed, o.train.threads);
  write_walks(g, walks, o.out);
}

void run_eval(const Options& o) {
  if (o.train.threads < 1) fail_config({"threads must be >= 1"});
  const auto split = load_split(o.split_path, read_descriptors(o.source.descriptors));
  const auto report = evaluate(load_model(o.model), split, o.train.threads);
  emit(o.out, report_to_json(report, o.timings) + "\n");
}

void run_neighbors(const Options& o) {
  std::vector<std::string> problems;
  o.source.check(problems);
  if (o.nodes.size() != 1) problems.push_back("exactly one --node is required");
  if (!problems.empty()) fail_config(problems);
  const Graph g = o.source.load();
  const auto model = load_model(o.model);
  const auto result = nearest_neighbors(model, bind_inputs(model, g), g, g.require(o.nodes.front()), o.top);
  emit(o.out, neighbors_csv(g, result));
}

void run_heatmap(const Options& o) {
  std::vector<std::string> problems;
  o.source.check(problems);
  if (o.nodes.empty()) problems.push_back("at least one --node is required");
  if (!problems.empty()) fail_config(problems);
  const Graph g = o.source.load();
  const auto model = load_model(o.model);
  const auto inputs = bind_inputs(model, g);
  std::vector<HeatmapRow> rows;
  for (const auto& key : o.nodes) rows.push_back(importance_scores(model, inputs, g.require(key)));
  emit(o.out, heatmap_csv(g, rows));
  if (!o.svg.empty()) write_text_atomically(o.svg, heatmap_svg(g, rows));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-aware random-walk node embeddings for ontology graphs"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "generate a synthetic compositional hierarchy");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--base-concepts", o.fixture.base_concepts)->capture_default_str();
  synth->add_option("--depth", o.fixture.depth, "hierarchy levels")->capture_default_str();
  synth->add_option("--cross-links", o.fixture.cross_links)->capture_default_str();
  synth->add_option("--modifiers", o.fixture.modifiers, "compositional modifier words")->delimiter(',');
  synth->add_option("--of-fraction", o.fixture.of_phrase_fraction)->capture_default_str();
  synth->add_option("--shortcut-fraction", o.fixture.shortcut_fraction)->capture_default_str();
  synth->add_option("--seed", o.fixture.seed)->capture_default_str();

  auto* split = app.add_subcommand("split", "hold out edges and sample negatives");
  o.source.add_to(*split);
  split->add_option("--fraction", o.fraction, "share of edges to remove")->capture_default_str();
  split->add_option("--strategy", o.strategy, "random | close-proximity")->capture_default_str();
  split->add_option("--seed", o.seed)->capture_default_str();
  split->add_option("--out", o.out, "split file")->required();

  auto* init = app.add_subcommand("init", "write an untrained model");
  o.source.add_to(*init);
  init->add_option("--encoder", o.encoder, "lookup | avg | gru | bigru-max-res")->capture_default_str();
  init->add_option("--dim", o.train.dim)->capture_default_str();
  init->add_option("--seed", o.seed)->capture_default_str();
  init->add_option("--out", o.out, "model file")->required();

  auto* train_cmd = app.add_subcommand("train", "train embeddings with skip-gram negative sampling");
  o.source.add_to(*train_cmd);
  train_cmd->add_option("--encoder", o.encoder, "lookup | avg | gru | bigru-max-res")->capture_default_str();
  train_cmd->add_option("--dim", o.train.dim)->capture_default_str();
  add_walk_options(*train_cmd, o.train.walk);
  train_cmd->add_option("--batch", o.train.batch_size)->capture_default_str();
  train_cmd->add_option("--negatives", o.train.negatives_per_pair, "negatives per pair")->capture_default_str();
  train_cmd->add_option("--epochs", o.train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", o.train.learning_rate, "Adam step size")->capture_default_str();
  train_cmd->add_option("--threads", o.train.threads, "walk generation threads")->capture_default_str();
  train_cmd->add_option("--deterministic", o.deterministic, "single-writer training")->capture_default_str();
  train_cmd->add_option("--seed", o.seed)->capture_default_str();
  train_cmd->add_option("--out", o.out, "model file; the manifest goes to <out>.manifest.json")->required();

  auto* walks = app.add_subcommand("walks", "dump second-order random walks");
  o.source.add_to(*walks);
  add_walk_options(*walks, o.train.walk);
  walks->add_option("--threads", o.train.threads)->capture_default_str();
  walks->add_option("--seed", o.seed)->capture_default_str();
  walks->add_option("--out", o.out, "walk file")->required();

  auto* eval = app.add_subcommand("eval", "score a model on a split's test pairs");
  eval->add_option("--model", o.model)->required();
  eval->add_option("--split", o.split_path)->required();
  eval->add_option("--descriptors", o.source.descriptors)->required();
  eval->add_option("--threads", o.train.threads)->capture_default_str();
  eval->add_flag("--timings", o.timings, "include wall time in the report");
  eval->add_option("--out", o.out, "report file (default stdout)");

  auto* neighbors = app.add_subcommand("neighbors", "nearest nodes by cosine similarity");
  o.source.add_to(*neighbors);
  neighbors->add_option("--model", o.model)->required();
  neighbors->add_option("--node", o.nodes, "target node key")->required();
  neighbors->add_option("--top", o.top)->capture_default_str();
  neighbors->add_option("--out", o.out, "CSV file (default stdout)");

  auto* heatmap = app.add_subcommand("heatmap", "per-token importance for bigru-max-res models");
  o.source.add_to(*heatmap);
  heatmap->add_option("--model", o.model)->required();
  heatmap->add_option("--node", o.nodes, "node keys")->required();
  heatmap->add_option("--out", o.out, "CSV file (default stdout)");
  heatmap->add_option("--svg", o.svg, "also draw an SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: Usage: %s\n", e.what());
    return 2;
  }

  try {
    if (*synth) run_synth(o);
    if (*split) run_split(o);
    if (*init) run_init(o);
    if (*train_cmd) run_train(o);
    if (*walks) run_walks(o);
    if (*eval) run_eval(o);
    if (*neighbors) run_neighbors(o);
    if (*heatmap) run_heatmap(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Io: %s\n", e.what());
    return 1;
  }
  return 0;
}
