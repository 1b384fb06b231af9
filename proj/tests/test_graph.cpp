#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <dfmap/graph.hpp>

using namespace dfmap;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream f(path);
  f << content;
  return path.string();
}

// Independent GEMM FLOP oracle: count multiply-adds from the dims.
double gemm_flop_oracle(std::int64_t m, std::int64_t k, std::int64_t n) {
  return 2.0 * double(m) * double(k) * double(n);
}

}  // namespace

TEST_CASE("load_graph accepts a minimal well-formed file") {
  auto path = write_temp("wl_min.json", R"({
    "kernels": [{"name": "a", "kind": "gemm", "flop": 10},
                {"name": "b", "kind": "elementwise", "flop": 5}],
    "tensors": [{"src": 0, "dst": 1, "bytes": 4}]
  })");
  DataflowGraph g = load_graph(path);
  CHECK(g.n() == 2);
  CHECK(g.m() == 1);
  CHECK(g.tensors[0].bytes == 4.0);
}

TEST_CASE("load_graph rejects dangling endpoints") {
  auto path = write_temp("wl_dangling.json", R"({
    "kernels": [{"name": "a", "flop": 1}, {"name": "b", "flop": 1}, {"name": "c", "flop": 1}],
    "tensors": [{"src": 0, "dst": 7, "bytes": 4}]
  })");
  try {
    load_graph(path);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("dangling endpoint") != std::string::npos);
  }
}

TEST_CASE("load_graph rejects cycles and nonpositive sizes") {
  auto cyc = write_temp("wl_cycle.json", R"({
    "kernels": [{"name": "a", "flop": 1}, {"name": "b", "flop": 1}],
    "tensors": [{"src": 0, "dst": 1, "bytes": 4}, {"src": 1, "dst": 0, "bytes": 4}]
  })");
  CHECK_THROWS_AS(load_graph(cyc), Error);
  auto zero = write_temp("wl_zero.json", R"({
    "kernels": [{"name": "a", "flop": 1}, {"name": "b", "flop": 1}],
    "tensors": [{"src": 0, "dst": 1, "bytes": 0}]
  })");
  CHECK_THROWS_AS(load_graph(zero), Error);
}

TEST_CASE("multi-consumer edges are replicated on load") {
  auto path = write_temp("wl_fanout.json", R"({
    "kernels": [{"name": "a", "flop": 1}, {"name": "b", "flop": 1}, {"name": "c", "flop": 1},
                {"name": "d", "flop": 1}],
    "tensors": [{"src": 0, "dst": [1, 2, 3], "bytes": 4}]
  })");
  DataflowGraph g = load_graph(path);
  REQUIRE(g.m() == 3);  // one edge became three
  for (const auto& t : g.tensors) {
    CHECK(t.src == 0);
    CHECK(t.bytes == 4.0);
  }
  CHECK(g.tensors[0].dst == 1);
  CHECK(g.tensors[1].dst == 2);
  CHECK(g.tensors[2].dst == 3);
}

TEST_CASE("normalize_fanout is idempotent on single-consumer graphs") {
  DataflowGraph g = generate_gpt_layer(GptParams{1, 4, 8, 2, 4});
  DataflowGraph h = normalize_fanout(g);
  REQUIRE(h.m() == g.m());
  for (int j = 0; j < g.m(); ++j) {
    CHECK(h.tensors[j].src == g.tensors[j].src);
    CHECK(h.tensors[j].dst == g.tensors[j].dst);
    CHECK(h.tensors[j].bytes == g.tensors[j].bytes);
  }
}

TEST_CASE("gpt layer generator matches the GEMM FLOP oracle") {
  SECTION("unit sizes") {
    DataflowGraph g = generate_gpt_layer(GptParams{1, 1, 1, 1, 4});
    CHECK(g.kernels[0].name == "Q");
    CHECK(g.kernels[0].flop == 2.0);  // 2*b*s*h^2
  }
  SECTION("GPT3-sized layer") {
    GptParams p{8, 2048, 12288, 96, 4};
    DataflowGraph g = generate_gpt_layer(p);
    REQUIRE(g.n() == 10);
    double ffn0_expect = gemm_flop_oracle(p.batch * p.seq, p.hidden, p.ffn_mult * p.hidden);
    CHECK(g.kernels[7].name == "FFN0");
    CHECK(g.kernels[7].flop == Catch::Approx(ffn0_expect));
    CHECK(g.kernels[7].flop == Catch::Approx(2.0 * 4.0 * 8.0 * 2048.0 * 12288.0 * 12288.0));
    // Every gemm kernel agrees with the oracle applied to its own dims.
    for (const auto& k : g.kernels) {
      if (!k.gemm_dims) continue;
      CHECK(k.flop == Catch::Approx(gemm_flop_oracle(k.gemm_dims->m, k.gemm_dims->k, k.gemm_dims->n)));
    }
  }
  SECTION("fixed topology, acyclic") {
    DataflowGraph g = generate_gpt_layer(GptParams{2, 16, 32, 4, 4});
    CHECK(g.n() == 10);
    CHECK_NOTHROW(topological_order(g));
  }
  SECTION("invalid dimensions rejected") {
    CHECK_THROWS_AS(generate_gpt_layer(GptParams{0, 1, 1, 1, 4}), Error);
    CHECK_THROWS_AS(generate_gpt_layer(GptParams{1, 1, 10, 3, 4}), Error);  // heads must divide
  }
}

TEST_CASE("gpt layer round-trips through the workload file") {
  DataflowGraph g = generate_gpt_layer(GptParams{2, 8, 16, 4, 4});
  auto path = (std::filesystem::temp_directory_path() / "wl_rt.json").string();
  save_graph(g, path);
  DataflowGraph h = load_graph(path);
  REQUIRE(h.n() == g.n());
  REQUIRE(h.m() == g.m());
  for (int i = 0; i < g.n(); ++i) {
    CHECK(h.kernels[i].name == g.kernels[i].name);
    CHECK(h.kernels[i].kind == g.kernels[i].kind);
    CHECK(h.kernels[i].flop == g.kernels[i].flop);
    CHECK(h.kernels[i].weight_bytes == g.kernels[i].weight_bytes);
  }
  for (int j = 0; j < g.m(); ++j) {
    CHECK(h.tensors[j].src == g.tensors[j].src);
    CHECK(h.tensors[j].dst == g.tensors[j].dst);
    CHECK(h.tensors[j].bytes == g.tensors[j].bytes);
  }
}

TEST_CASE("fft generator stage count and totals") {
  DataflowGraph g = generate_fft(FftParams{8, 2});
  CHECK(g.n() == 3);  // log2(8)
  CHECK(g.total_flop() == Catch::Approx(5.0 * 8.0 * 3.0));
  DataflowGraph g4 = generate_fft(FftParams{4096, 8});
  CHECK(g4.n() == 4);
  CHECK(g4.total_flop() == Catch::Approx(5.0 * 4096.0 * 12.0));
  CHECK_THROWS_AS(generate_fft(FftParams{12, 2}), Error);
}

TEST_CASE("hpl generator totals stay near the cubic law") {
  DataflowGraph g = generate_hpl(HplParams{4, 2});
  double ideal = 2.0 / 3.0 * 64.0;
  double total = g.total_flop();
  CHECK(total <= 2.0 * ideal);
  CHECK(total >= 0.5 * ideal);
  // Larger instance: blocked totals approach (2/3) N^3 from below.
  DataflowGraph big = generate_hpl(HplParams{512, 64});
  double ideal_big = 2.0 / 3.0 * 512.0 * 512.0 * 512.0;
  CHECK(big.total_flop() / ideal_big > 0.5);
  CHECK(big.total_flop() / ideal_big < 2.0);
}

TEST_CASE("dlrm generator minimal instance") {
  DlrmParams p;
  p.tables = 1;
  p.emb_dim = 4;
  p.batch = 2;
  p.mlp_dims = {3};
  DataflowGraph g = generate_dlrm(p);
  CHECK(g.n() == 3);  // lookup, interact, one mlp
  CHECK(g.m() == 2);
  CHECK(g.kernels[0].kind == KernelKind::embedding_lookup);
}
