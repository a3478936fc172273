#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "textwalk/error.hpp"
#include "textwalk/model_io.hpp"

using namespace textwalk;

namespace {

std::vector<std::string> words(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
  return out;
}

void randomize(EncoderModel& m, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  for (Matrix* p : m.parameters())
    for (double& x : p->flat()) x = rng.uniform(-scale, scale);
}

Vector to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("encoders") {

TEST_CASE("kind names round-trip") {
  for (auto k : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::Gru, EncoderKind::BiGruMaxRes}) {
    CHECK(parse_encoder_kind(to_string(k)) == k);
  }
  CHECK(parse_encoder_kind("bigru") == std::nullopt);
}

TEST_CASE("initialization ranges and shapes") {
  const auto m = init_model(EncoderKind::BiGruMaxRes, 8, words(20), 3);
  CHECK(m.focus.table.rows() == 20);
  CHECK(m.focus.table.cols() == 8);
  for (double x : m.focus.table.flat()) CHECK(std::abs(x) <= 0.5 / 8);
  for (double x : m.focus.forward.w_z.flat()) CHECK(std::abs(x) <= 1 / std::sqrt(8.0));
  for (double x : m.context.backward.b_h.flat()) CHECK(x == 0.0);
  CHECK(m.focus.table != m.context.table);
  const auto avg = init_model(EncoderKind::Avg, 8, words(20), 3);
  CHECK(avg.focus.forward.w_z.empty());
  CHECK(init_model(EncoderKind::Gru, 8, words(20), 3) == init_model(EncoderKind::Gru, 8, words(20), 3));
}

TEST_CASE("average encoder") {
  Matrix table(3, 2);
  table(0, 0) = 1;
  table(0, 1) = -2;
  table(1, 0) = -1;
  table(1, 1) = 2;
  table(2, 0) = 0.3;
  table(2, 1) = 0.6;
  const std::vector<std::uint32_t> one{2}, opposite{0, 1}, three{0, 2, 2};
  CHECK(encode_avg(one, table) == Vector{0.3, 0.6});
  CHECK(encode_avg(opposite, table) == Vector{0.0, 0.0});
  const auto v = encode_avg(three, table);
  CHECK(v[0] == doctest::Approx((1 + 0.3 + 0.3) / 3.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx((-2 + 0.6 + 0.6) / 3.0).epsilon(1e-15));
  try {
    encode_avg({}, table);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DescriptorEmpty);
  }
}

TEST_CASE("average is permutation invariant up to rounding") {
  auto m = init_model(EncoderKind::Avg, 6, words(10), 1);
  std::vector<std::uint32_t> t{3, 1, 4, 1, 5};
  const auto ref = encode_avg(t, m.focus.table);
  std::sort(t.begin(), t.end());
  do {
    const auto v = encode_avg(t, m.focus.table);
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(v[j] == doctest::Approx(ref[j]).epsilon(1e-14));
  } while (std::next_permutation(t.begin(), t.end()));
}

TEST_CASE("gru cell") {
  const auto zero = GruCellParams::zeros(3);
  const Vector x{0.3, -1, 2}, h{1, -2, 0.5};
  CHECK(gru_cell(x, h, zero) == Vector{0.5, -1, 0.25});
  CHECK(gru_cell(Vector(3, 0.0), Vector(3, 0.0), zero) == Vector(3, 0.0));

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = GruCellParams::random(3, rng);
    for (Matrix* b : {&p.b_z, &p.b_r, &p.b_h})
      for (double& v : b->flat()) v = rng.uniform(-1, 1);
    Vector xi(3), hi(3);
    for (auto& v : xi) v = rng.uniform(-2, 2);
    for (auto& v : hi) v = rng.uniform(-1, 1);
    const auto got = gru_cell(xi, hi, p);
    const auto want = oracle::gru_cell(xi, hi, p);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
  }
  try {
    gru_cell(Vector{NAN, 0, 0}, h, zero);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("gru encoder") {
  auto m = init_model(EncoderKind::Gru, 4, words(10), 2);
  const std::vector<std::uint32_t> one{3};
  CHECK(encode_gru(one, m.focus.table, GruCellParams::zeros(4)) == Vector(4, 0.0));

  randomize(m, 11);
  const std::vector<std::uint32_t> t{1, 7, 2, 9, 4};
  const auto got = encode_gru(t, m.focus.table, m.focus.forward);
  const auto want = oracle::gru(t, m.focus.table, m.focus.forward);
  for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  std::vector<std::uint32_t> rev(t.rbegin(), t.rend());
  CHECK(encode_gru(rev, m.focus.table, m.focus.forward) != got);
}

TEST_CASE("bigru max-pool residual encoder") {
  auto m = init_model(EncoderKind::BiGruMaxRes, 3, words(10), 2);
  const std::vector<std::uint32_t> one{5};
  const auto zero = GruCellParams::zeros(3);
  const auto single = encode_bigru_max_res(one, m.focus.table, zero, zero);
  CHECK(single.value == to_vec(m.focus.table.row(5)));
  CHECK(single.argmax == std::vector<std::uint32_t>{0, 0, 0});

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    randomize(m, seed);
    const std::vector<std::uint32_t> t{static_cast<std::uint32_t>(seed % 10), 2, 8, 1};
    const auto got = encode_bigru_max_res(t, m.focus.table, m.focus.forward, m.focus.backward);
    const auto want = oracle::bigru_max_res(t, m.focus.table, m.focus.forward, m.focus.backward);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(got.value[j] == doctest::Approx(want.value[j]).epsilon(1e-12));
      CHECK(got.argmax[j] == want.argmax[j]);
      for (const auto& s : want.states) CHECK(got.value[j] >= s[j] - 1e-12);
    }
  }
}

TEST_CASE("max-pool ties go to the lowest position") {
  auto m = init_model(EncoderKind::BiGruMaxRes, 4, words(3), 1);
  const auto zero = GruCellParams::zeros(4);
  const std::vector<std::uint32_t> same{2, 2, 2};
  const auto out = encode_bigru_max_res(same, m.focus.table, zero, zero);
  CHECK(out.argmax == std::vector<std::uint32_t>(4, 0));
}

TEST_CASE("node embedding dispatch") {
  const Graph g = testing::make_graph({{"a", "b"}, {"c", "b"}},
                                      {{"a", "acute leukemia"}, {"b", "leukemia"}, {"c", "chronic leukemia"}});
  const auto lookup = init_model(g, EncoderKind::Lookup, 5, 1);
  const auto li = bind_inputs(lookup, g);
  CHECK(node_embedding(lookup, li, 2, Side::Focus) == to_vec(lookup.focus.table.row(li.rows[2][0])));

  const auto avg = init_model(g, EncoderKind::Avg, 5, 1);
  const auto ai = bind_inputs(avg, g);
  const auto& vocab = avg.vocabulary;
  const auto idx = [&](const std::string& w) {
    return static_cast<std::size_t>(std::find(vocab.begin(), vocab.end(), w) - vocab.begin());
  };
  const auto ctx = node_embedding(avg, ai, 0, Side::Context);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(ctx[j] == doctest::Approx((avg.context.table(idx("acute"), j) + avg.context.table(idx("leukemia"), j)) / 2));
  }

  const auto bi = init_model(g, EncoderKind::BiGruMaxRes, 5, 1);
  const auto bin = bind_inputs(bi, g);
  CHECK(node_embedding(bi, bin, 0, Side::Focus) != node_embedding(bi, bin, 0, Side::Context));
}

TEST_CASE("binding by string rejects unknown words") {
  const Graph g = testing::make_graph({{"a", "b"}}, {{"a", "x y"}, {"b", "y"}});
  const Graph other = testing::make_graph({{"a", "b"}}, {{"a", "x z"}, {"b", "y"}});
  const auto m = init_model(g, EncoderKind::Avg, 4, 1);
  try {
    bind_inputs(m, other);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfVocabulary);
  }
}

TEST_CASE("simple backward cases") {
  SUBCASE("avg spreads upstream evenly") {
    const auto m = init_model(EncoderKind::Avg, 3, words(5), 1);
    const std::vector<std::uint32_t> t{1, 3, 4};
    auto grads = ModelGradients::like(m);
    const Vector up{0.3, -0.6, 0.9};
    backward_trace(m.kind, trace_encode(m.kind, t, m.focus), m.focus, up, grads, Side::Focus);
    const auto& g = grads.slot(Side::Focus, 0);
    CHECK(g.touched_rows.size() == 3);
    for (auto r : t)
      for (std::size_t j = 0; j < 3; ++j) CHECK(g.value(r, j) == doctest::Approx(up[j] / 3));
    for (std::size_t j = 0; j < 3; ++j) CHECK(g.value(0, j) == 0.0);
    for (const auto& s : grads.slots)
      if (&s != &g) CHECK(s.touched_rows.empty());
  }
  SUBCASE("lookup touches exactly one row") {
    const auto m = init_model(EncoderKind::Lookup, 3, words(5), 1);
    const std::vector<std::uint32_t> t{2};
    auto grads = ModelGradients::like(m);
    const Vector up{1, 2, 3};
    backward_trace(m.kind, trace_encode(m.kind, t, m.context), m.context, up, grads, Side::Context);
    const auto& g = grads.slot(Side::Context, 0);
    CHECK(g.touched_rows == std::vector<std::uint32_t>{2});
    CHECK(to_vec(g.value.row(2)) == up);
  }
}

TEST_CASE("gradients match finite differences") {
  for (auto kind : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::Gru, EncoderKind::BiGruMaxRes}) {
    CAPTURE(to_string(kind));
    const auto r = gradcheck::run_suite(kind, 20);
    CAPTURE(r.where);
    CHECK(r.worst < 1e-4);
  }
}

TEST_CASE("max-pool gradient flows only through the winners") {
  // With zero cells every pooled state is the residual word row, so each
  // dimension's upstream gradient must land on the winning token's row only.
  auto m = init_model(EncoderKind::BiGruMaxRes, 6, words(8), 3);
  m.focus.forward = GruCellParams::zeros(6);
  m.focus.backward = GruCellParams::zeros(6);
  const std::vector<std::uint32_t> t{4, 1, 6};
  const auto trace = trace_encode(m.kind, t, m.focus);
  auto grads = ModelGradients::like(m);
  const Vector up{1, 2, 3, 4, 5, 6};
  backward_trace(m.kind, trace, m.focus, up, grads, Side::Focus);
  const auto& g = grads.slot(Side::Focus, 0).value;
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t pos = 0; pos < t.size(); ++pos) {
      const double want = trace.argmax[j] == pos ? up[j] : 0.0;
      CHECK(g(t[pos], j) == doctest::Approx(want));
    }
  }
}

TEST_CASE("workspace caches per model version") {
  const Graph g = testing::make_graph({{"a", "b"}}, {{"a", "acute x"}, {"b", "x"}});
  auto m = init_model(g, EncoderKind::Gru, 4, 1);
  const auto inputs = bind_inputs(m, g);
  EncoderWorkspace ws;
  auto grads = ModelGradients::like(m);
  const Vector up(4, 1.0);
  try {
    ws.backward(m, 0, Side::Focus, up, grads);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StaleBackward);
  }
  ws.forward(m, inputs, 0, Side::Focus);
  ws.backward(m, 0, Side::Focus, up, grads);
  CHECK_THROWS_AS(ws.backward(m, 0, Side::Context, up, grads), Error);
  ++m.version;
  CHECK_THROWS_AS(ws.backward(m, 0, Side::Focus, up, grads), Error);
  CHECK(ws.forward(m, inputs, 0, Side::Focus) == node_embedding(m, inputs, 0, Side::Focus));
  CHECK_NOTHROW(encoder_backward(m, ws, 0, Side::Focus, up, grads));
}

TEST_CASE("model file round-trip") {
  for (auto kind : {EncoderKind::Lookup, EncoderKind::Avg, EncoderKind::Gru, EncoderKind::BiGruMaxRes}) {
    auto m = init_model(kind, 5, words(7), 4);
    testing::TempDir dir;
    save_model(m, dir / "m.bin");
    CHECK(load_model(dir / "m.bin") == m);
    const auto bytes = testing::read_file(dir / "m.bin");
    CHECK(bytes.substr(0, 4) == "TXWK");
    testing::write_file(dir / "short.bin", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_model(dir / "short.bin"), Error);
    testing::write_file(dir / "long.bin", bytes + "x");
    CHECK_THROWS_AS(load_model(dir / "long.bin"), Error);
    auto bad = bytes;
    bad[0] = 'X';
    testing::write_file(dir / "magic.bin", bad);
    try {
      load_model(dir / "magic.bin");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadModelFile);
    }
  }
}

}  // TEST_SUITE
