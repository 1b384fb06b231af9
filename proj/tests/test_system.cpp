#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <dfmap/system.hpp>

using namespace dfmap;

namespace {
std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream f(path);
  f << content;
  return path.string();
}
}  // namespace

TEST_CASE("chip power regression") {
  CHECK(chip_power_kw(0) == Catch::Approx(0.04));
  // Direct polynomial evaluation at the wafer-scale end.
  CHECK(chip_power_kw(7500) == Catch::Approx(3e-7 * 7500.0 * 7500.0 - 4.3e-4 * 7500.0 + 0.04));
  CHECK(chip_power_kw(7500) == Catch::Approx(13.69).margin(0.01));
  // The parabola dips negative around ~1 PFLOPS; clamped to the floor.
  double raw993 = 3e-7 * 993.0 * 993.0 - 4.3e-4 * 993.0 + 0.04;
  CHECK(raw993 < 0);
  CHECK(chip_power_kw(993) == Catch::Approx(0.01));
  // Monotone nondecreasing above the vertex, never negative anywhere.
  double prev = 0;
  for (double x = 717; x < 20000; x += 37) {
    double y = chip_power_kw(x);
    CHECK(y >= prev - 1e-12);
    CHECK(y > 0);
    prev = y;
  }
}

TEST_CASE("builtin chip presets") {
  auto chips = builtin_chips();
  REQUIRE(chips.size() == 4);
  ChipSpec h100 = builtin_chip("h100");
  CHECK(h100.peak_flops() == Catch::Approx(993e12));
  CHECK(h100.s_cap == Catch::Approx(113e6));
  ChipSpec wse2 = builtin_chip("wse2");
  CHECK(wse2.s_cap == Catch::Approx(40e9));
  CHECK(wse2.peak_flops() == Catch::Approx(7500e12));
  CHECK(builtin_chip("tpuv4").peak_flops() == Catch::Approx(275e12));
  CHECK(builtin_chip("sn30").peak_flops() == Catch::Approx(614e12));
  CHECK_THROWS_AS(builtin_chip("nope"), Error);
}

TEST_CASE("load_system derives parallelism from the dim assignment") {
  auto path = write_temp("sys_ring8.json", R"({
    "chip": {"preset": "sn10"},
    "dims": [{"topology": "ring", "size": 8, "link_bw": 25e9}],
    "assign": {"tp": 0, "pp": null, "dp": null}
  })");
  SystemFile sf = load_system(path);
  CHECK(sf.sys.n_tp() == 8);
  CHECK(sf.sys.n_pp() == 1);
  CHECK(sf.sys.n_dp() == 1);
  CHECK(sf.sys.chip.peak_flops() == Catch::Approx(307.2e12));
  CHECK(sf.sys.chip.s_cap == Catch::Approx(320e6));
  CHECK(sf.sys.chip.d_bw == Catch::Approx(200e9));
  CHECK(sf.sys.dims[0].link_bw == Catch::Approx(25e9));
}

TEST_CASE("load_system rejects declared/derived degree mismatches") {
  auto path = write_temp("sys_mismatch.json", R"({
    "chip": {"preset": "sn10"},
    "dims": [{"topology": "ring", "size": 4, "link_bw": 25e9},
             {"topology": "ring", "size": 2, "link_bw": 25e9}],
    "assign": {"tp": 0, "pp": 1},
    "n_tp": 8
  })");
  try {
    load_system(path);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("dim-size mismatch") != std::string::npos);
  }
}

TEST_CASE("load_system requires every dim to carry a strategy") {
  auto path = write_temp("sys_unassigned.json", R"({
    "chip": {"preset": "sn10"},
    "dims": [{"topology": "ring", "size": 4, "link_bw": 25e9},
             {"topology": "ring", "size": 2, "link_bw": 25e9}],
    "assign": {"tp": 0}
  })");
  CHECK_THROWS_AS(load_system(path), Error);
}

TEST_CASE("link counting per topology") {
  NetworkDim ring{Topology::ring, 4, 1e9, 0};
  NetworkDim fc{Topology::fully_connected, 4, 1e9, 0};
  NetworkDim sw{Topology::switched, 6, 1e9, 0};
  CHECK(links_per_instance(ring) == 4);
  CHECK(links_per_instance(fc) == 6);  // n(n-1)/2
  CHECK(links_per_instance(sw) == 6);
}

TEST_CASE("system cost and power totals") {
  TechCatalog cat;
  cat.memory["m0"] = MemoryTech{1e9, 0.0, 0.0};
  cat.interconnect["n0"] = InterconnectTech{1e9, 7.0, 3.0};

  SystemSpec sys;
  sys.chip = sn10_chip();
  sys.chip.price_usd = 100.0;
  sys.chip.power_w = 10.0;

  SECTION("one chip, no links") {
    sys.dims = {NetworkDim{Topology::ring, 1, 1e9, 0}};
    sys.tp_dim = 0;
    CostPower cp = system_cost_power(sys, cat, "m0", "n0");
    CHECK(cp.price_usd == Catch::Approx(100.0));
    CHECK(cp.power_w == Catch::Approx(10.0));
  }
  SECTION("ring of 4 counts 4 links") {
    sys.dims = {NetworkDim{Topology::ring, 4, 1e9, 0}};
    sys.tp_dim = 0;
    CostPower cp = system_cost_power(sys, cat, "m0", "n0");
    CHECK(cp.price_usd == Catch::Approx(4 * 100.0 + 4 * 7.0));
  }
  SECTION("fully connected of 4 counts 6 links") {
    sys.dims = {NetworkDim{Topology::fully_connected, 4, 1e9, 0}};
    sys.tp_dim = 0;
    CostPower cp = system_cost_power(sys, cat, "m0", "n0");
    CHECK(cp.price_usd == Catch::Approx(4 * 100.0 + 6 * 7.0));
  }
  SECTION("linear in chip count for fixed per-chip quantities") {
    sys.dims = {NetworkDim{Topology::ring, 4, 1e9, 0}};
    sys.tp_dim = 0;
    CostPower cp4 = system_cost_power(sys, cat, "m0", "n0");
    sys.dims[0].size = 8;
    CostPower cp8 = system_cost_power(sys, cat, "m0", "n0");
    CHECK(cp8.price_usd == Catch::Approx(2.0 * cp4.price_usd));
    CHECK(cp8.power_w == Catch::Approx(2.0 * cp4.power_w));
  }
  SECTION("missing catalog entry") {
    sys.dims = {NetworkDim{Topology::ring, 4, 1e9, 0}};
    sys.tp_dim = 0;
    CHECK_THROWS_AS(system_cost_power(sys, cat, "missing", "n0"), Error);
  }
}
