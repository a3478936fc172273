#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "textwalk/error.hpp"
#include "textwalk/fixtures.hpp"
#include "textwalk/model_io.hpp"
#include "textwalk/optim.hpp"
#include "textwalk/trainer.hpp"

using namespace textwalk;

namespace {

Graph small_fixture(std::uint64_t seed = 0) {
  FixtureSpec spec;
  spec.base_concepts = 20;
  spec.depth = 3;
  spec.cross_links = 15;
  spec.seed = seed;
  return generate_fixture(spec).graph();
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.batch_size = 32;
  cfg.walk.walks_per_node = 2;
  cfg.walk.walk_length = 10;
  cfg.walk.window = 4;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config validation lists every problem") {
  TrainConfig cfg;
  CHECK(cfg.validate().empty());
  cfg.dim = 0;
  cfg.batch_size = 0;
  cfg.epochs = 0;
  cfg.learning_rate = -1;
  cfg.walk.q = 0;
  CHECK(cfg.validate().size() == 5);
}

TEST_CASE("softmax probability") {
  const Graph g = testing::random_connected(5, 3, 1);
  auto m = init_model(g, EncoderKind::Lookup, 4, 2);
  const auto inputs = bind_inputs(m, g);
  std::vector<NodeId> all(5);
  std::iota(all.begin(), all.end(), 0);

  SUBCASE("identical embeddings are uniform") {
    for (auto* t : {&m.focus.table, &m.context.table})
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t j = 0; j < 4; ++j) (*t)(r, j) = 0.1 * static_cast<double>(j);
    CHECK(softmax_prob(m, inputs, 2, 0, all) == doctest::Approx(0.2).epsilon(1e-14));
  }
  SUBCASE("sums to one and matches direct summation") {
    Rng rng(5);
    for (auto* t : {&m.focus.table, &m.context.table})
      for (double& x : t->flat()) x = rng.uniform(-3, 3);
    for (NodeId v = 0; v < 5; ++v) {
      double total = 0.0;
      const auto f = node_embedding(m, inputs, v, Side::Focus);
      double denom = 0.0;
      for (NodeId u : all) denom += std::exp(dot(node_embedding(m, inputs, u, Side::Context), f));
      for (NodeId u : all) {
        const double p = softmax_prob(m, inputs, u, v, all);
        total += p;
        CHECK(p == doctest::Approx(std::exp(dot(node_embedding(m, inputs, u, Side::Context), f)) / denom)
                       .epsilon(1e-12));
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("negative sampling") {
  Rng rng(1);
  const NodeId ex[2] = {0, 1};
  for (NodeId v : sample_negatives(rng, 3, 50, ex)) CHECK(v == 2);

  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (NodeId v : sample_negatives(rng, 10, draws, {})) ++counts[v];
  double chi2 = 0.0;
  for (int c : counts) {
    CHECK(std::abs(c / double(draws) - 0.1) < 0.01);
    chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  }
  CHECK(chi2 < 27.88);  // chi-square, 9 dof, p = 0.001

  const NodeId everyone[3] = {0, 1, 2};
  try {
    sample_negatives(rng, 3, 1, everyone);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotEnoughNodes);
  }
}

TEST_CASE("pair loss") {
  const Vector zero(4, 0.0);
  SUBCASE("all dot products zero") {
    const Vector f{1, 0, 0, 0}, c{0, 1, 0, 0};
    const std::vector<Vector> negs{{0, 0, 1, 0}, {0, 0, 0, 1}};
    const auto pl = pair_loss(f, c, negs);
    CHECK(pl.loss == doctest::Approx(3 * std::log(2.0)).epsilon(1e-14));
    for (std::size_t j = 0; j < 4; ++j) CHECK(pl.grad_context[j] == doctest::Approx(-0.5 * f[j]));
  }
  SUBCASE("no negatives") {
    const Vector f{0.3, -0.2, 1, 0.5}, c{0.7, 0.1, -0.4, 0.2};
    const auto pl = pair_loss(f, c, {});
    CHECK(pl.loss == doctest::Approx(-std::log(oracle::sig(dot(f, c)))).epsilon(1e-14));
  }
  SUBCASE("gradients match finite differences") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      Vector f(4), c(4);
      std::vector<Vector> negs(3, Vector(4));
      for (auto& x : f) x = rng.uniform(-2, 2);
      for (auto& x : c) x = rng.uniform(-2, 2);
      for (auto& n : negs)
        for (auto& x : n) x = rng.uniform(-2, 2);
      const auto pl = pair_loss(f, c, negs);
      const double h = 1e-6;
      auto fd = [&](Vector& target, std::size_t i) {
        const double saved = target[i];
        target[i] = saved + h;
        const double up = pair_loss(f, c, negs).loss;
        target[i] = saved - h;
        const double down = pair_loss(f, c, negs).loss;
        target[i] = saved;
        return (up - down) / (2 * h);
      };
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(oracle::relative_error(pl.grad_focus[i], fd(f, i)) < 1e-4);
        CHECK(oracle::relative_error(pl.grad_context[i], fd(c, i)) < 1e-4);
        for (std::size_t k = 0; k < negs.size(); ++k) {
          CHECK(oracle::relative_error(pl.grad_negatives[k][i], fd(negs[k], i)) < 1e-4);
        }
      }
    }
  }
  SUBCASE("extreme scores stay finite") {
    const Vector f{100, 100, 100, 100}, c{-100, -100, -100, -100};
    const std::vector<Vector> negs{{100, 100, 100, 100}};
    const auto pl = pair_loss(f, c, negs);
    CHECK(std::isfinite(pl.loss));
    CHECK(pl.loss == doctest::Approx(80000.0));
  }
}

TEST_CASE("adam") {
  Matrix w(2, 3);
  w.flat()[0] = 1.0;
  Matrix* params[1] = {&w};
  auto state = AdamState::like(std::span<const Matrix* const>(std::array<const Matrix*, 1>{&w}));

  SUBCASE("zero gradient leaves parameters and advances the step") {
    TensorGrad g(2, 3);
    g.touch(0);
    const Matrix before = w;
    adam_step(state, params, std::span(&g, 1), 0.1);
    CHECK(w == before);
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves by lr against the sign") {
    TensorGrad g(2, 3);
    auto r = g.touch(1);
    r[0] = 3.0;
    r[1] = -0.002;
    r[2] = 0.0;
    const Matrix before = w;
    adam_step(state, params, std::span(&g, 1), 0.1);
    CHECK(w(1, 0) == doctest::Approx(before(1, 0) - 0.1).epsilon(1e-6));
    CHECK(w(1, 1) == doctest::Approx(before(1, 1) + 0.1).epsilon(1e-4));
    CHECK(w(1, 2) == before(1, 2));
    CHECK(w(0, 0) == before(0, 0));  // untouched row
    CHECK(g.touched_rows.empty());  // cleared
  }
  SUBCASE("non-finite gradient changes nothing") {
    TensorGrad g(2, 3);
    g.touch(0)[1] = NAN;
    const Matrix before = w;
    try {
      adam_step(state, params, std::span(&g, 1), 0.1);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteGradient);
    }
    CHECK(w == before);
    CHECK(state.step == 0);
  }
  SUBCASE("quadratic bowl converges") {
    // f(w) = sum (w - target)^2 over the first row.
    const double target[3] = {0.5, -1.5, 2.0};
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j) s += (w(0, j) - target[j]) * (w(0, j) - target[j]);
      return s;
    };
    std::vector<double> losses;
    for (int it = 0; it < 100; ++it) {
      TensorGrad g(2, 3);
      auto r = g.touch(0);
      for (std::size_t j = 0; j < 3; ++j) r[j] = 2 * (w(0, j) - target[j]);
      adam_step(state, params, std::span(&g, 1), 0.001);
      losses.push_back(loss());
    }
    for (std::size_t i = 5; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
  }
}

TEST_CASE("training reduces loss and is deterministic") {
  const Graph g = small_fixture();
  const auto cfg = small_config();
  for (auto kind : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::Gru, EncoderKind::BiGruMaxRes}) {
    CAPTURE(to_string(kind));
    const auto a = train(g, kind, cfg);
    const auto& losses = a.stats.batch_losses;
    REQUIRE(losses.size() >= 10);
    const std::size_t tenth = losses.size() / 10;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < tenth; ++i) first += losses[i];
    for (std::size_t i = losses.size() - tenth; i < losses.size(); ++i) last += losses[i];
    CHECK(last < first);
    for (double l : losses) CHECK(std::isfinite(l));
    CHECK(a.stats.pair_count == g.node_count() * 2 * pair_count(10, 4));

    const auto b = train(g, kind, cfg);
    testing::TempDir dir;
    save_model(a.model, dir / "a.bin");
    save_model(b.model, dir / "b.bin");
    CHECK(testing::read_file(dir / "a.bin") == testing::read_file(dir / "b.bin"));
  }
}

TEST_CASE("lookup training only changes node tables") {
  const Graph g = small_fixture();
  const auto cfg = small_config();
  const auto init = init_model(g, EncoderKind::Lookup, cfg.dim, 1);
  const auto trained = train(g, init, cfg).model;
  CHECK(trained.focus.table != init.focus.table);
  CHECK(trained.context.table != init.context.table);
  CHECK(trained.vocabulary == init.vocabulary);
}

TEST_CASE("only rows with a gradient path are updated") {
  const Graph g = small_fixture(1);
  auto cfg = small_config();
  for (auto kind : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::BiGruMaxRes}) {
    CAPTURE(to_string(kind));
    const auto init = init_model(g, kind, cfg.dim, 7);
    Trainer trainer(g, init, cfg);
    const auto inputs = bind_inputs(init, g);
    const std::vector<ContextPair> batch{{0, 1}, {2, 3}};
    Rng rng(4);
    const auto report = trainer.step(batch, rng);
    const auto before = init.parameters();
    const auto after = trainer.model().parameters();
    for (std::size_t s = 0; s < before.size(); ++s) {
      const auto& touched = report.touched_rows[s];
      for (std::size_t r = 0; r < before[s]->rows(); ++r) {
        const bool changed = !std::ranges::equal(before[s]->row(r), after[s]->row(r));
        const bool was_touched = std::find(touched.begin(), touched.end(), r) != touched.end();
        if (changed) CHECK(was_touched);
      }
    }
    // Focus-side table rows touched are exactly the words of the focus nodes.
    std::set<std::uint32_t> focus_rows;
    for (NodeId v : {0u, 2u})
      for (auto t : inputs.rows[v]) focus_rows.insert(t);
    const auto& ft = report.touched_rows[0];
    CHECK(std::set<std::uint32_t>(ft.begin(), ft.end()) == focus_rows);
  }
}

TEST_CASE("default configuration is accepted") {
  TrainConfig cfg;
  CHECK(cfg.dim == 30);
  CHECK(cfg.batch_size == 128);
  CHECK(cfg.negatives_per_pair == 2);
  CHECK(cfg.walk.walks_per_node == 5);
  CHECK(cfg.walk.walk_length == 40);
  CHECK(cfg.walk.window == 10);
  CHECK(cfg.validate().empty());
}

TEST_CASE("manifest records the run") {
  const Graph g = small_fixture();
  const auto cfg = small_config();
  const auto r = train(g, EncoderKind::Avg, cfg);
  const auto text = train_manifest(cfg, EncoderKind::Avg, r.stats);
  for (const char* key : {"\"encoder\"", "\"seed\"", "\"pair_count\"", "\"wall_seconds\"", "\"final_mean_loss\"",
                          "\"walks_per_node\""}) {
    CHECK(text.find(key) != std::string::npos);
  }
}

}  // TEST_SUITE
