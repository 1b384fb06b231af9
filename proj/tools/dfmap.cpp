// dfmap: map workload dataflow graphs onto accelerator systems and report
// performance, efficiency, rooflines and design-space sweeps.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <dfmap/dse.hpp>
#include <dfmap/oracle.hpp>

using namespace dfmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitTimeout = 3;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw parse_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("'") + path + "': " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw parse_error("cannot open '" + path + "' for writing");
  f << content;
}

milp::SolveOptions solve_options_from_env(double timeout_s, std::uint64_t seed) {
  milp::SolveOptions opt;
  opt.timeout_s = timeout_s;
  opt.seed = seed;
  if (const char* backend = std::getenv("DFMAP_SOLVER")) opt.backend = backend;
  return opt;
}

int emit_reports(const PipelineResult& r, const PerfReport& rep, const std::string& out_mapping,
                 const std::string& out_report) {
  if (!out_mapping.empty())
    write_text_file(out_mapping, full_mapping_to_json(r).dump(2) + "\n");
  std::cout << report_to_text(r, rep);
  if (!out_report.empty())
    write_text_file(out_report, report_to_json(r, rep).dump(2) + "\n");
  return r.optimal ? kExitOk : kExitTimeout;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataflow-graph mapping and system design-space exploration"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "emit a workload graph file");
  std::string gen_kind, gen_out = "workload.json";
  std::int64_t g_batch = 1, g_seq = 2048, g_hidden = 12288, g_heads = 96, g_ffn = 4;
  std::int64_t g_tables = 8, g_embdim = 128, g_points = 1 << 20, g_radix = 2;
  std::int64_t g_n = 4096, g_block = 1024;
  std::vector<std::int64_t> g_mlp;
  double g_elt = 2.0;
  gen->add_option("kind", gen_kind, "gpt | dlrm | hpl | fft")->required();
  gen->add_option("--out,-o", gen_out, "output path");
  gen->add_option("--batch", g_batch);
  gen->add_option("--seq", g_seq);
  gen->add_option("--hidden", g_hidden);
  gen->add_option("--heads", g_heads);
  gen->add_option("--ffn-mult", g_ffn);
  gen->add_option("--tables", g_tables);
  gen->add_option("--emb-dim", g_embdim);
  gen->add_option("--mlp-dims", g_mlp);
  gen->add_option("--points", g_points);
  gen->add_option("--radix", g_radix);
  gen->add_option("--n", g_n);
  gen->add_option("--block", g_block);
  gen->add_option("--element-size", g_elt);

  // ---- optimize ----
  auto* opt_cmd = app.add_subcommand("optimize", "solve for the best dataflow mapping");
  std::string o_workload, o_system, o_out = "mapping.json", o_report, o_level = "full", o_lp;
  int o_pp = -1, o_pmax = -1;
  bool o_backward = false;
  double o_timeout = 300.0;
  std::uint64_t o_seed = 0;
  int o_microbatches = 0;
  opt_cmd->add_option("--workload,-w", o_workload)->required();
  opt_cmd->add_option("--system,-s", o_system)->required();
  opt_cmd->add_option("--out,-o", o_out, "mapping file to write");
  opt_cmd->add_option("--report,-r", o_report, "machine-readable report (JSON)");
  opt_cmd->add_option("--level", o_level, "inter | intra | full");
  opt_cmd->add_option("--pp", o_pp, "override pipeline stages (p_max) at the inter level");
  opt_cmd->add_option("--pmax", o_pmax, "intra-chip partition cap");
  opt_cmd->add_flag("--backward", o_backward, "model the backward pass");
  opt_cmd->add_option("--timeout", o_timeout, "solver timeout in seconds");
  opt_cmd->add_option("--seed", o_seed, "solver seed (reproducibility)");
  opt_cmd->add_option("--microbatches", o_microbatches,
                      "also report GPipe-style end-to-end time for this many microbatches");
  opt_cmd->add_option("--emit-lp", o_lp, "dump the inter-chip model in LP format");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "evaluate a fixed mapping file");
  std::string e_workload, e_system, e_mapping, e_report;
  bool e_backward = false;
  ev->add_option("--workload,-w", e_workload)->required();
  ev->add_option("--system,-s", e_system)->required();
  ev->add_option("--mapping,-m", e_mapping)->required();
  ev->add_option("--report,-r", e_report);
  ev->add_flag("--backward", e_backward);

  // ---- sweep ----
  auto* sw = app.add_subcommand("sweep", "run a design-space grid to CSV");
  std::string s_grid, s_out = "sweep.csv";
  int s_workers = 1;
  sw->add_option("--grid,-g", s_grid)->required();
  sw->add_option("--out,-o", s_out);
  sw->add_option("--workers,-j", s_workers);

  // ---- roofline ----
  auto* rf = app.add_subcommand("roofline", "check and print the roofline record of a report");
  std::string r_report;
  rf->add_option("--report,-r", r_report)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      DataflowGraph g;
      if (gen_kind == "gpt") {
        g = generate_gpt_layer(GptParams{g_batch, g_seq, g_hidden, g_heads, g_ffn, g_elt});
      } else if (gen_kind == "dlrm") {
        DlrmParams p;
        p.tables = g_tables;
        p.emb_dim = g_embdim;
        p.batch = g_batch;
        if (!g_mlp.empty()) p.mlp_dims = g_mlp;
        p.element_size = g_elt;
        g = generate_dlrm(p);
      } else if (gen_kind == "hpl") {
        g = generate_hpl(HplParams{g_n, g_block, g_elt});
      } else if (gen_kind == "fft") {
        g = generate_fft(FftParams{g_points, g_radix, g_elt});
      } else {
        std::cerr << "unknown workload kind '" << gen_kind << "'\n";
        return kExitUsage;
      }
      save_graph(g, gen_out);
      std::cout << "wrote " << gen_out << " (" << g.n() << " kernels, " << g.m()
                << " tensors, " << g.total_flop() / 1e9 << " GFLOP)\n";
      return kExitOk;
    }

    if (*opt_cmd) {
      DataflowGraph g = load_graph(o_workload);
      SystemFile sf = load_system(o_system);
      PipelineOptions popt;
      popt.inter.include_backward = o_backward;
      if (o_pp > 0) popt.inter.p_max = o_pp;
      if (o_pmax > 0) popt.intra.p_max = o_pmax;
      popt.solve = solve_options_from_env(o_timeout, o_seed);
      popt.run_intra = o_level != "inter";

      if (o_level == "intra") {
        // Single-stage view: the whole graph on one chip group, intra level
        // optimized.
        popt.inter.p_max = 1;
      } else if (o_level != "inter" && o_level != "full") {
        std::cerr << "--level must be inter, intra or full\n";
        return kExitUsage;
      }

      PipelineResult r;
      r.inter_inst = make_interchip_instance(g, sf.sys, popt.inter);
      if (!o_lp.empty()) {
        InterChipModel im = build_interchip(r.inter_inst);
        std::ofstream lp(o_lp);
        im.model.emit_lp(lp);
      }
      r.inter = solve_interchip(r.inter_inst, popt.solve);
      r.optimal = r.inter.optimal;
      finish_pipeline(r, popt);
      PerfReport rep = make_report(r, default_tech_catalog(), sf.mem_tech, sf.net_tech);
      if (o_microbatches > 0)
        std::cout << "end-to-end (" << o_microbatches << " microbatches): "
                  << seconds_str(rep.exact_latency *
                                 pipeline_bubble_factor(sf.sys.n_pp(), o_microbatches) *
                                 o_microbatches)
                  << "\n";
      return emit_reports(r, rep, o_out, o_report);
    }

    if (*ev) {
      DataflowGraph g = load_graph(e_workload);
      SystemFile sf = load_system(e_system);
      nlohmann::json jmap = read_json_file(e_mapping);
      PipelineOptions popt;
      popt.inter.include_backward = e_backward;
      PipelineResult r = evaluate_full_mapping(g, sf.sys, popt, jmap);
      PerfReport rep = make_report(r, default_tech_catalog(), sf.mem_tech, sf.net_tech);
      return emit_reports(r, rep, "", e_report);
    }

    if (*sw) {
      nlohmann::json jgrid = read_json_file(s_grid);
      std::vector<DesignPoint> grid = grid_from_json(jgrid);
      TechCatalog cat = default_tech_catalog();
      auto results = run_sweep(grid, cat, s_workers);
      std::ostringstream csv;
      csv << sweep_csv_header() << "\n";
      for (size_t i = 0; i < grid.size(); ++i)
        csv << sweep_csv_row(grid[i], results[i]) << "\n";
      write_text_file(s_out, csv.str());
      int errors = 0;
      for (const auto& pr : results)
        if (!pr.error.empty()) ++errors;
      std::cout << "wrote " << s_out << " (" << grid.size() << " rows, " << errors
                << " errors)\n";
      return kExitOk;  // per-point failures live in the CSV
    }

    if (*rf) {
      nlohmann::json j = read_json_file(r_report);
      if (!j.contains("roofline")) throw parse_error("report has no roofline section");
      const auto& jr = j["roofline"];
      PerfReport rep;
      rep.oi_mem = jr["oi_mem"].get<double>();
      rep.oi_net = jr["oi_net"].get<double>();
      if (rep.oi_mem < 0) rep.oi_mem = std::numeric_limits<double>::infinity();
      if (rep.oi_net < 0) rep.oi_net = std::numeric_limits<double>::infinity();
      rep.achieved_chip = jr["achieved_chip_flops"].get<double>();
      rep.ceiling_compute = jr["ceiling_compute_flops"].get<double>();
      rep.peak_chip = jr["peak_chip_flops"].get<double>();
      rep.d_bw = jr["d_bw"].get<double>();
      rep.n_bw = jr["n_bw"].get<double>();
      RooflineRecord rec = roofline(rep);
      std::cout << "achieved:  " << rec.achieved / 1e12 << " TFLOP/s per chip\n"
                << "compute:   " << rec.compute_ceiling / 1e12 << " TFLOP/s ceiling\n"
                << "memory:    " << rec.memory_ceiling / 1e12 << " TFLOP/s ceiling\n"
                << "network:   " << rec.network_ceiling / 1e12 << " TFLOP/s ceiling\n"
                << "regime:    " << to_string(rec.regime) << "-bound\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::parse: return kExitUsage;
      case ErrorKind::timeout: return kExitTimeout;
      default: return kExitInvalid;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}
